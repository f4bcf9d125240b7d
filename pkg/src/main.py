"""
Hazard toolkit - command line entry point
Runs the dataset, labeling, training, prediction and evaluation stages
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.config import Config
from src.core.errors import EXIT_USAGE, HazardToolkitError
from src.pipeline.stages import STAGES, HazardPipeline, run_seeds
from src.render.map_renderer import MapRenderer
from src.site_selection.selector import LandingSite, read_sites
from src.terrain.dem_io import read_grid, write_ascii_grid

DEFAULT_CONFIG = os.environ.get(
    'HAZARD_CONFIG',
    os.path.join(os.path.dirname(__file__), '../config/config.yaml')
)


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with code 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def setup_logging(config: Config):
    """Configure logging"""
    log_level = getattr(logging, str(config.get('logging.level', 'INFO')).upper(), logging.INFO)
    log_format = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

    handlers = []

    # Console handler
    if config.get('logging.console', True):
        handlers.append(logging.StreamHandler())

    # File handler
    log_file = config.get('logging.file')
    if log_file:
        os.makedirs(os.path.dirname(log_file) or '.', exist_ok=True)
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=log_level,
        format=log_format,
        handlers=handlers
    )


def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument('--config', default=DEFAULT_CONFIG, help='Path to config.yaml')
    common.add_argument('--seed', type=int, help='Run seed (pipeline.seed)')
    common.add_argument('--out-dir', help='Run directory (pipeline.out_dir)')
    common.add_argument('--force', action='store_true', help='Overwrite an existing dataset')
    common.add_argument('--set', action='append', default=[], metavar='KEY=VALUE',
                        help='Override a configuration value, e.g. training.epochs=5')

    parser = _ArgumentParser(prog='hazard', description='Uncertainty-aware hazard detection toolkit')
    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True

    for stage in STAGES:
        commands.add_parser(stage, parents=[common], help=f"Run the {stage} stage")

    render = commands.add_parser('render', parents=[common], help='Render a map file to PGM/PPM')
    render.add_argument('map', help='.dem, .sfm, .prob or .entropy file')
    render.add_argument('output', help='Image path (extension set from the image type)')
    render.add_argument('--site', help='Overlay a site marker at ROW,COL')
    render.add_argument('--sites-file', help='Overlay the site recorded for --item in this file')
    render.add_argument('--item', help='Item key in --sites-file (default: map file stem)')
    render.add_argument('--scale', type=int, default=1, help='Integer upscaling factor')
    render.add_argument('--ascii', action='store_true', help='Write grid values as text (.txt) instead of an image')

    run = commands.add_parser('run', parents=[common], help='All stages for each seed plus an averaged report')
    run.add_argument('--seeds', type=int, nargs='+', help='Seeds (default: pipeline.seeds)')
    return parser


def load_config(args: argparse.Namespace) -> Config:
    config = Config(args.config)
    config.apply_overrides(args.set)
    if args.seed is not None:
        config.set('pipeline.seed', args.seed)
    if args.out_dir:
        config.set('pipeline.out_dir', args.out_dir)
    return config


def _render(args: argparse.Namespace):
    if args.ascii:
        values, kind, _ = read_grid(args.map)
        out_path = Path(args.output).with_suffix('.txt')
        write_ascii_grid(out_path, values)
        logging.getLogger(__name__).info(f"Exported {kind} grid {args.map} -> {out_path}")
        return

    site: Optional[LandingSite] = None
    if args.site:
        try:
            row, col = (int(v) for v in args.site.split(','))
        except ValueError:
            raise ValueError(f"--site expects ROW,COL, got {args.site!r}")
        site = LandingSite(row, col, 0.0)
    elif args.sites_file:
        item = args.item or Path(args.map).stem
        site = read_sites(args.sites_file).get(item)
        if site is None:
            logging.getLogger(__name__).info(f"No site recorded for {item}; rendering without marker")
    MapRenderer(scale=args.scale).render_file(args.map, args.output, site)


def main(argv: List[str] = None) -> int:
    """Main entry point"""
    args = build_parser().parse_args(argv)

    try:
        config = load_config(args)
    except FileNotFoundError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return EXIT_USAGE
    except HazardToolkitError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return e.exit_code

    setup_logging(config)
    logger = logging.getLogger(__name__)

    try:
        config.validate()
        if args.command == 'render':
            _render(args)
        elif args.command == 'run':
            _, checks = run_seeds(config, args.seeds, force=args.force)
            logger.info(f"{sum(checks.values())}/{len(checks)} ordering checks passed")
        else:
            pipeline = HazardPipeline(config)
            logger.info(f"Stage {args.command} in {pipeline.run_dir} (seed {pipeline.seed})")
            if args.command == 'generate':
                pipeline.generate(force=args.force)
            else:
                getattr(pipeline, args.command)()
            logger.info(f"Stage {args.command} complete")
    except HazardToolkitError as e:
        logger.error(f"{args.command} failed: {e}")
        return e.exit_code
    except (OSError, ValueError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_USAGE

    return 0


if __name__ == '__main__':
    sys.exit(main())
