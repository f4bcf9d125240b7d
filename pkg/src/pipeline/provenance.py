"""
Provenance records: what each stage read and wrote, under which seed and config.
"""

import hashlib
import logging
import os
from typing import Iterable

from src.terrain.dem_io import PathLike, atomic_write_bytes

logger = logging.getLogger(__name__)

PROVENANCE_DIR = 'provenance'


def file_sha256(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for block in iter(lambda: f.read(1 << 16), b''):
            digest.update(block)
    return digest.hexdigest()


def record_provenance(run_dir: PathLike, stage: str, seed: int, config_digest: str,
                      inputs: Iterable[PathLike] = (), outputs: Iterable[PathLike] = ()) -> str:
    """
    Write provenance/<stage>.txt (replaced on every run of the stage)

    Args:
        run_dir: Run directory; recorded paths are relative to it
        stage: Stage name
        seed: Run seed
        config_digest: Config.digest() of the run
        inputs: Files the stage read
        outputs: Files the stage wrote

    Returns:
        Path of the record
    """
    lines = [f"stage={stage}", f"seed={seed}", f"config_digest={config_digest}"]
    for tag, paths in (('input', inputs), ('output', outputs)):
        for path in sorted({os.path.relpath(p, run_dir) for p in paths}):
            lines.append(f"{tag} {path} {file_sha256(os.path.join(run_dir, path))}")
    record = os.path.join(run_dir, PROVENANCE_DIR, f"{stage}.txt")
    atomic_write_bytes(record, ('\n'.join(lines) + '\n').encode('utf-8'))
    logger.debug(f"Provenance for {stage}: {len(lines) - 3} files")
    return record
