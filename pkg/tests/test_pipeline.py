"""
Integration tests for the pipeline stages and the command line
Uses a miniature configuration so a complete run takes seconds.
"""

import copy
import os
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.config import Config
from src.core.errors import (EXIT_MISSING_ARTIFACT, EXIT_USAGE, EXIT_VALIDATION, ArtifactExistsError,
                             MissingArtifactError)
from src.evaluation.suite import BASE_NET, BASELINE, UNCERTAINTY_AWARE
from src.hazard.maps import Label, read_safety_map
from src.main import main
from src.pipeline.manifest import read_manifest
from src.pipeline.stages import (MODEL_FILE, REPORT_CSV, REPORT_TEXT, SITES_CSV, STAGES,
                                 THRESHOLD_FILE, HazardPipeline, run_seeds)
from src.site_selection.selector import read_sites
from src.terrain.dem_io import read_dem
from src.uncertainty.entropy import LN2
from src.uncertainty.threshold import read_threshold

REPO_CONFIG = Path(__file__).parent.parent / 'config' / 'config.yaml'

MINI = {
    'terrain': {'size': 32, 'crater_count': 2, 'rock_count': 8},
    'noise': {'train_sigma_m': 0.0167, 'test_sigmas_m': [0.0167, 0.03, 0.07]},
    'oracle': {'orientation_samples': 4, 'offset_samples': 3},
    'model': {'input_size': 32, 'encoder_blocks': 2, 'channels_per_block': [4, 8], 'dropout_rate': 0.5},
    'training': {'batch_size': 4, 'learning_rate': 0.01, 'epochs': 3},
    'inference': {'samples': 2},
    'dataset': {'size': 10, 'split': [8, 1, 1]},
    'pipeline': {'seed': 0, 'seeds': [0, 1], 'workers': 1},
    'logging': {'level': 'WARNING', 'file': None, 'console': False},
}


def mini_config(out_dir, **overrides) -> Config:
    config = Config.from_dict(copy.deepcopy(MINI))
    config.set('pipeline.out_dir', str(out_dir))
    for key, value in overrides.items():
        config.set(key.replace('__', '.'), value)
    config.validate()
    return config


def _tree_bytes(root: Path, subdir: str):
    base = root / subdir
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(base.rglob('*')) if p.is_file()}


@pytest.fixture(scope='module')
def full_run(tmp_path_factory):
    """One complete mini run shared by the read-only checks below"""
    run_dir = tmp_path_factory.mktemp('run_a')
    pipeline = HazardPipeline(mini_config(run_dir))
    report = pipeline.run_all()
    return pipeline, report, run_dir


def test_generate_counts_and_layout(tmp_path):
    pipeline = HazardPipeline(mini_config(tmp_path))
    manifest = pipeline.generate()

    assert len(list((tmp_path / 'dems' / 'clean').glob('*.dem'))) == 10
    noisy = [p for d in (tmp_path / 'dems').iterdir() if d.name != 'clean' for p in d.glob('*.dem')]
    assert len(noisy) == 30
    assert [len(manifest.split(s)) for s in ('train', 'validation', 'test')] == [8, 1, 1]
    assert manifest.split('test') == ['dem_0009']

    loaded = read_manifest(tmp_path)
    assert loaded == manifest
    assert loaded.noisy_path('dem_0000', 0.07) == os.path.join('dems', 'sigma_0.07', 'dem_0000.dem')

    print("✓ Generate writes 10 clean and 30 noisy DEMs")


def test_generate_is_byte_identical_across_directories(tmp_path):
    a, b = tmp_path / 'a', tmp_path / 'b'
    HazardPipeline(mini_config(a)).generate()
    HazardPipeline(mini_config(b)).generate()
    assert _tree_bytes(a, 'dems') == _tree_bytes(b, 'dems')
    assert (a / 'manifest.json').read_bytes() == (b / 'manifest.json').read_bytes()

    other = tmp_path / 'c'
    HazardPipeline(mini_config(other, pipeline__seed=1)).generate()
    assert _tree_bytes(a, 'dems') != _tree_bytes(other, 'dems')


def test_generate_refuses_to_overwrite(tmp_path):
    pipeline = HazardPipeline(mini_config(tmp_path))
    pipeline.generate()
    with pytest.raises(ArtifactExistsError):
        pipeline.generate()
    pipeline.generate(force=True)


def test_zero_noise_variant_matches_clean(tmp_path):
    pipeline = HazardPipeline(mini_config(tmp_path, noise__test_sigmas_m=[0.0, 0.07]))
    manifest = pipeline.generate()
    for key in manifest.items:
        clean = read_dem(pipeline.clean_dem_path(key))
        noisy = read_dem(pipeline.noisy_dem_path(key, 0.0))
        assert np.array_equal(clean.heights, noisy.heights)


def test_missing_upstream_artifact_names_the_stage(tmp_path):
    pipeline = HazardPipeline(mini_config(tmp_path))
    with pytest.raises(MissingArtifactError) as excinfo:
        pipeline.label()
    assert excinfo.value.stage == 'generate'

    pipeline.generate()
    with pytest.raises(MissingArtifactError) as excinfo:
        pipeline.train()
    assert excinfo.value.stage == 'label'
    with pytest.raises(MissingArtifactError) as excinfo:
        pipeline.predict()
    assert excinfo.value.stage == 'train'
    with pytest.raises(MissingArtifactError) as excinfo:
        pipeline.select()
    assert excinfo.value.stage == 'calibrate'


def test_full_run_artifacts(full_run):
    pipeline, report, run_dir = full_run

    assert len(report.rows) == 9
    assert {row.method for row in report.rows} == {BASELINE, BASE_NET, UNCERTAINTY_AWARE}
    for name in (MODEL_FILE, THRESHOLD_FILE, REPORT_TEXT, REPORT_CSV, SITES_CSV):
        assert (run_dir / name).exists(), name

    threshold = read_threshold(run_dir / THRESHOLD_FILE)
    assert 0.0 <= threshold.value <= LN2

    csv_lines = (run_dir / REPORT_CSV).read_text().splitlines()
    assert len(csv_lines) == 10
    assert 'PASS' in (run_dir / REPORT_TEXT).read_text() or 'FAIL' in (run_dir / REPORT_TEXT).read_text()

    for sigma in (0.0167, 0.03, 0.07):
        for method in (BASELINE, BASE_NET, UNCERTAINTY_AWARE):
            sites = read_sites(pipeline.sites_path(method, sigma))
            assert list(sites) == ['dem_0009']
            site = sites['dem_0009']
            if site is not None:
                if method == UNCERTAINTY_AWARE:
                    smap = read_safety_map(pipeline.selection_path('dem_0009', sigma))
                elif method == BASE_NET:
                    smap = read_safety_map(pipeline.prediction_path('dem_0009', sigma, '.sfm'))
                else:
                    smap = read_safety_map(pipeline.baseline_path('dem_0009', sigma))
                assert smap.labels[site.row, site.col] == Label.SAFE


def test_uncertainty_aware_only_adds_invalid(full_run):
    pipeline, _, _ = full_run
    for sigma in (0.0167, 0.03, 0.07):
        base = read_safety_map(pipeline.prediction_path('dem_0009', sigma, '.sfm')).labels
        aware = read_safety_map(pipeline.selection_path('dem_0009', sigma)).labels
        changed = base != aware
        assert np.all(aware[changed] == Label.INVALID)
        assert np.all(base[0] == Label.INVALID) and np.all(base[:, -1] == Label.INVALID)


def test_provenance_records(full_run):
    pipeline, _, run_dir = full_run
    for stage in ('generate', 'label', 'train', 'predict', 'calibrate', 'select', 'evaluate'):
        lines = (run_dir / 'provenance' / f"{stage}.txt").read_text().splitlines()
        assert lines[0] == f"stage={stage}"
        assert lines[1] == 'seed=0'
        assert lines[2] == f"config_digest={pipeline.digest}"
        assert any(line.startswith('output ') for line in lines)


def test_manifest_reaches_every_artifact(full_run):
    pipeline, _, run_dir = full_run
    manifest = read_manifest(run_dir)

    on_disk = {str(p.relative_to(run_dir)) for p in run_dir.rglob('*') if p.is_file()}
    assert on_disk - {'manifest.json'} == set(manifest.artifacts())

    assert set(manifest.stages) == set(STAGES)
    for stage, record in manifest.stages.items():
        assert record.config_digest == pipeline.digest
        assert record.provenance == os.path.join('provenance', f"{stage}.txt")
    assert manifest.produced_by('label', os.path.join('labels', 'clean', 'dem_0009.sfm'))
    assert manifest.produced_by('select', os.path.join('sites', f"{UNCERTAINTY_AWARE}_sigma_0.07.csv"))

    print("✓ Manifest lists every run artifact")


def test_stale_outputs_are_not_reused_after_regenerate(tmp_path):
    pipeline = HazardPipeline(mini_config(tmp_path))
    pipeline.generate()
    pipeline.label()
    assert (tmp_path / 'labels' / 'clean' / 'dem_0000.sfm').exists()

    pipeline.generate(force=True)
    with pytest.raises(MissingArtifactError) as excinfo:
        pipeline.train()
    assert excinfo.value.stage == 'label'


def test_evaluate_rerun_is_byte_identical(full_run):
    pipeline, _, run_dir = full_run
    before = [(run_dir / name).read_bytes() for name in (REPORT_TEXT, REPORT_CSV, SITES_CSV)]
    pipeline.evaluate()
    after = [(run_dir / name).read_bytes() for name in (REPORT_TEXT, REPORT_CSV, SITES_CSV)]
    assert before == after


def test_two_runs_are_byte_identical(full_run, tmp_path):
    _, _, run_dir = full_run
    HazardPipeline(mini_config(tmp_path)).run_all()
    for name in (MODEL_FILE, THRESHOLD_FILE, REPORT_CSV, SITES_CSV, 'manifest.json'):
        assert (run_dir / name).read_bytes() == (tmp_path / name).read_bytes(), name
    assert _tree_bytes(run_dir, 'predictions') == _tree_bytes(tmp_path, 'predictions')


def test_threshold_override(full_run):
    pipeline, _, run_dir = full_run
    override = HazardPipeline(mini_config(run_dir, uncertainty__threshold_override=0.0), str(run_dir))
    try:
        threshold = override.calibrate()
        assert threshold.value == 0.0
        assert threshold.provenance == 'override'
    finally:
        pipeline.calibrate()


def test_run_seeds_writes_averaged_report(tmp_path):
    config = mini_config(tmp_path, training__epochs=1)
    averaged, checks = run_seeds(config, seeds=[0, 1])
    assert (tmp_path / 'seed_0' / REPORT_CSV).exists()
    assert (tmp_path / 'seed_1' / REPORT_CSV).exists()
    assert (tmp_path / REPORT_TEXT).exists()
    average = (tmp_path / 'provenance' / 'average.txt').read_text()
    assert 'input seed_0/report.csv' in average and 'output report.csv' in average
    assert len(averaged.rows) == 9
    assert set(checks) == {'uncertainty_aware_pa_above_base_net', 'baseline_tpr_degrades_with_noise',
                           'valid_fraction_non_increasing', 'site_safe_rate'}


def _write_mini_yaml(tmp_path) -> str:
    path = tmp_path / 'mini.yaml'
    path.write_text(yaml.safe_dump(MINI))
    return str(path)


def test_cli_stage_and_exit_codes(tmp_path):
    config_path = _write_mini_yaml(tmp_path)
    out = str(tmp_path / 'cli')

    assert main(['label', '--config', config_path, '--out-dir', out]) == EXIT_MISSING_ARTIFACT
    assert main(['generate', '--config', config_path, '--out-dir', out]) == 0
    assert main(['generate', '--config', config_path, '--out-dir', out]) == EXIT_USAGE
    assert main(['generate', '--config', config_path, '--out-dir', out, '--force']) == 0
    assert main(['train', '--config', config_path, '--out-dir', out]) == EXIT_MISSING_ARTIFACT

    assert main(['generate', '--config', config_path, '--set', 'model.input_size=100']) == EXIT_VALIDATION
    assert main(['generate', '--config', config_path, '--set', 'training.epochs']) == EXIT_VALIDATION
    assert main(['generate', '--config', str(tmp_path / 'missing.yaml')]) == EXIT_USAGE

    with pytest.raises(SystemExit) as excinfo:
        main(['launch'])
    assert excinfo.value.code == EXIT_USAGE


def test_cli_render(tmp_path):
    config_path = _write_mini_yaml(tmp_path)
    out = tmp_path / 'cli'
    assert main(['generate', '--config', config_path, '--out-dir', str(out)]) == 0

    dem_path = out / 'dems' / 'clean' / 'dem_0000.dem'
    assert main(['render', str(dem_path), str(tmp_path / 'dem'), '--config', config_path]) == 0
    assert (tmp_path / 'dem.pgm').read_bytes().startswith(b'P5')

    assert main(['render', str(dem_path), str(tmp_path / 'marked'), '--site', '4,5',
                 '--scale', '2', '--config', config_path]) == 0
    assert (tmp_path / 'marked.ppm').exists()

    assert main(['render', str(dem_path), str(tmp_path / 'heights.pgm'), '--ascii',
                 '--config', config_path]) == 0
    exported = np.loadtxt(tmp_path / 'heights.txt')
    assert exported.shape == (32, 32)
    assert np.allclose(exported, read_dem(dem_path).heights, atol=1e-6)

    assert main(['render', str(dem_path), str(tmp_path / 'x'), '--site', 'middle',
                 '--config', config_path]) == EXIT_USAGE
    assert main(['render', str(out / 'nope.dem'), str(tmp_path / 'y'), '--config', config_path]) == EXIT_USAGE


@pytest.mark.slow
def test_desk_scale_ordering(tmp_path):
    """Full desk-scale run over three seeds; every ordering check must hold"""
    config = Config(str(REPO_CONFIG))
    config.set('pipeline.out_dir', str(tmp_path))
    config.set('logging.console', False)
    config.validate()
    _, checks = run_seeds(config)
    assert all(checks.values()), checks
