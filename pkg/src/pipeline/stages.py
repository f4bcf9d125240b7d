"""
Pipeline stages: generate, label, train, predict, calibrate, select, evaluate.
Every stage resolves its inputs through the run manifest, writes atomically and
records its outputs back into the manifest.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from src.config import Config
from src.core.errors import ArtifactExistsError, MissingArtifactError
from src.core.seeding import derive_seed
from src.evaluation.report import format_records, format_site_records, format_table
from src.evaluation.suite import (BASE_NET, BASELINE, UNCERTAINTY_AWARE, EvalItem, EvalMethod,
                                  EvalSet, MetricsReport, average_reports, evaluate_suite,
                                  ordering_checks)
from src.hazard.maps import (Label, ProbabilityMap, SafetyMap, border_mask, read_safety_map,
                             write_probability_map, write_safety_map)
from src.hazard.oracle import label_dem
from src.pipeline.manifest import (MANIFEST_NAME, DatasetManifest, ManifestItem, item_key,
                                   read_manifest, sigma_label, write_manifest)
from src.pipeline.provenance import record_provenance
from src.segmenter.inference import argmax_labels, predict_dem
from src.segmenter.model_io import load_model, save_model
from src.segmenter.training import format_training_log, train
from src.site_selection.selector import LandingSite, propose_site, write_sites
from src.terrain.dem_io import atomic_write_bytes, read_dem, write_dem
from src.terrain.generator import NoiseSpec, add_noise, generate_terrain
from src.uncertainty.entropy import predictive_entropy, read_uncertainty_map, write_uncertainty_map
from src.uncertainty.threshold import (UncertaintyThreshold, apply_threshold, calibrate_threshold,
                                       read_threshold, write_threshold)

MODEL_FILE = os.path.join('model', 'segnet.model')
TRAIN_LOG_FILE = os.path.join('model', 'train_log.csv')
THRESHOLD_FILE = 'threshold.txt'
REPORT_TEXT = 'report.txt'
REPORT_CSV = 'report.csv'
SITES_CSV = 'sites.csv'

STAGES = ('generate', 'label', 'train', 'predict', 'calibrate', 'select', 'evaluate')


class HazardPipeline:
    """
    One run directory and the stages that fill it

    Layout (relative to run_dir):
        manifest.json
        dems/clean/<item>.dem, dems/sigma_<s>/<item>.dem
        labels/clean/<item>.sfm|.prob        ground truth from the clean DEM
        labels/sigma_<s>/<item>.sfm          baseline: oracle on the noisy test DEM
        model/segnet.model, model/train_log.csv
        predictions/sigma_<s>/<item>.prob|.entropy|.sfm
        threshold.txt
        selection/sigma_<s>/<item>.sfm       uncertainty-aware labels
        sites/<method>_sigma_<s>.csv
        report.txt, report.csv, sites.csv
        provenance/<stage>.txt
    """

    def __init__(self, config: Config, run_dir: str = None):
        """
        Initialize pipeline

        Args:
            config: Validated run configuration
            run_dir: Output directory (default: pipeline.out_dir)
        """
        self.logger = logging.getLogger(__name__)
        self.config = config
        self.run_dir = run_dir or config.out_dir
        self.seed = config.seed
        self.digest = config.digest()

    # Paths

    def path(self, *parts: str) -> str:
        return os.path.join(self.run_dir, *parts)

    def clean_dem_path(self, key: str) -> str:
        return self.path('dems', 'clean', f"{key}.dem")

    def noisy_dem_path(self, key: str, sigma: float) -> str:
        return self.path('dems', sigma_label(sigma), f"{key}.dem")

    def truth_path(self, key: str, suffix: str = '.sfm') -> str:
        return self.path('labels', 'clean', f"{key}{suffix}")

    def baseline_path(self, key: str, sigma: float) -> str:
        return self.path('labels', sigma_label(sigma), f"{key}.sfm")

    def prediction_path(self, key: str, sigma: float, suffix: str) -> str:
        return self.path('predictions', sigma_label(sigma), f"{key}{suffix}")

    def selection_path(self, key: str, sigma: float) -> str:
        return self.path('selection', sigma_label(sigma), f"{key}.sfm")

    def sites_path(self, method: str, sigma: float) -> str:
        return self.path('sites', f"{method}_{sigma_label(sigma)}.csv")

    def _rel(self, path: str) -> str:
        return os.path.relpath(path, self.run_dir)

    def _input(self, manifest: DatasetManifest, path: str, stage: str) -> str:
        """
        Resolve an input through the manifest

        Raises:
            MissingArtifactError: stage has not recorded path, or the file is gone
        """
        if not manifest.produced_by(stage, self._rel(path)) or not os.path.exists(path):
            raise MissingArtifactError(stage, path)
        return path

    def _dataset_dem(self, manifest: DatasetManifest, key: str, sigma: float = None) -> str:
        """Clean DEM of key (sigma None) or its noisy variant, as listed in the manifest"""
        relpath = manifest.items[key].clean if sigma is None else manifest.noisy_path(key, sigma)
        return self._input(manifest, self.path(relpath), 'generate')

    def _fan_out(self, fn: Callable, jobs: Sequence) -> List:
        """Map fn over jobs, on pipeline.workers threads when more than one"""
        if self.config.workers > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
                return list(pool.map(fn, jobs))
        return [fn(job) for job in jobs]

    def _finish(self, manifest: DatasetManifest, stage: str,
                inputs: Sequence[str], outputs: Sequence[str]):
        """Write the provenance record and register the stage's outputs in the manifest"""
        record = record_provenance(self.run_dir, stage, self.seed, self.digest, inputs, outputs)
        manifest.record_stage(stage, self.digest, self._rel(record), [self._rel(p) for p in outputs])
        write_manifest(manifest, self.run_dir)

    # Stages

    def generate(self, force: bool = False) -> DatasetManifest:
        """
        Generate clean DEMs and one noisy variant of each per noise level

        Args:
            force: Overwrite an existing manifest

        Returns:
            The written DatasetManifest
        """
        manifest_path = self.path(MANIFEST_NAME)
        if os.path.exists(manifest_path) and not force:
            raise ArtifactExistsError(f"{manifest_path} exists; pass --force to regenerate")

        n_train, n_val, n_test = self.config.split_sizes()
        keys = [item_key(i) for i in range(n_train + n_val + n_test)]
        manifest = DatasetManifest(
            seed=self.seed,
            config_digest=self.digest,
            train_sigma=self.config.train_sigma,
            test_sigmas=self.config.test_sigmas,
            splits={
                'train': keys[:n_train],
                'validation': keys[n_train:n_train + n_val],
                'test': keys[n_train + n_val:],
            },
        )
        self.logger.info(f"Generating {len(keys)} DEMs ({n_train}/{n_val}/{n_test}) "
                         f"at noise levels {manifest.sigmas}")

        outputs = []
        for index, key in enumerate(keys):
            dem = generate_terrain(self.config.terrain_params(index))
            write_dem(dem, self.clean_dem_path(key))
            outputs.append(self.clean_dem_path(key))
            noisy = {}
            for sigma in manifest.sigmas:
                spec = NoiseSpec(sigma, derive_seed(self.seed, 'noise', sigma_label(sigma), index))
                write_dem(add_noise(dem, spec), self.noisy_dem_path(key, sigma))
                noisy[sigma_label(sigma)] = self._rel(self.noisy_dem_path(key, sigma))
                outputs.append(self.noisy_dem_path(key, sigma))
            manifest.items[key] = ManifestItem(
                clean=self._rel(self.clean_dem_path(key)),
                noisy=noisy,
                label=self._rel(self.truth_path(key)),
            )

        self._finish(manifest, 'generate', [], outputs)
        return manifest

    def label(self):
        """Ground truth on every clean DEM, baseline labels on every noisy test DEM"""
        manifest = read_manifest(self.run_dir)
        geom, cfg = self.config.lander(), self.config.oracle()
        inputs, outputs = [], []

        for key in manifest.items:
            dem_path = self._dataset_dem(manifest, key)
            dem = read_dem(dem_path)
            pmap, smap = label_dem(dem, geom, cfg)
            write_safety_map(smap, self.truth_path(key))
            write_probability_map(pmap, self.truth_path(key, '.prob'))
            inputs.append(dem_path)
            outputs.extend([self.truth_path(key), self.truth_path(key, '.prob')])

        for sigma in manifest.test_sigmas:
            for key in manifest.split('test'):
                dem_path = self._dataset_dem(manifest, key, sigma)
                dem = read_dem(dem_path)
                _, smap = label_dem(dem, geom, cfg)
                write_safety_map(smap, self.baseline_path(key, sigma))
                inputs.append(dem_path)
                outputs.append(self.baseline_path(key, sigma))

        self.logger.info(f"Labeled {len(manifest.items)} clean DEMs and "
                         f"{len(manifest.split('test')) * len(manifest.test_sigmas)} noisy test DEMs")
        self._finish(manifest, 'label', inputs, outputs)

    def train(self):
        """Fit the segmentation network on noisy training DEMs with clean-DEM labels"""
        manifest = read_manifest(self.run_dir)
        dataset, inputs = [], []
        for key in manifest.split('train'):
            dem_path = self._dataset_dem(manifest, key, manifest.train_sigma)
            truth_path = self._input(manifest, self.truth_path(key), 'label')
            dataset.append((read_dem(dem_path), read_safety_map(truth_path)))
            inputs.extend([dem_path, truth_path])

        model = train(dataset, self.config.training(), self.config.model())
        save_model(model, self.path(MODEL_FILE))
        atomic_write_bytes(self.path(TRAIN_LOG_FILE),
                           format_training_log(model.training_meta['losses']).encode('ascii'))
        self._finish(manifest, 'train', inputs, [self.path(MODEL_FILE), self.path(TRAIN_LOG_FILE)])

    def predict(self):
        """MC-dropout prediction for validation (training noise) and test DEMs (every noise level)"""
        manifest = read_manifest(self.run_dir)
        model = load_model(self._input(manifest, self.path(MODEL_FILE), 'train'))
        geom, cfg = self.config.lander(), self.config.oracle()
        samples = self.config.mc_samples

        jobs: List[Tuple[str, float]] = [(key, manifest.train_sigma) for key in manifest.split('validation')]
        jobs += [(key, sigma) for sigma in manifest.test_sigmas for key in manifest.split('test')]
        dem_paths = {job: self._dataset_dem(manifest, *job) for job in jobs}

        def run(job):
            key, sigma = job
            dem = read_dem(dem_paths[job])
            msm = predict_dem(model, dem, samples, derive_seed(self.seed, 'mc', sigma_label(sigma), key))
            labels = argmax_labels(msm).labels
            labels[border_mask(dem.shape, cfg.resolve_border_margin(geom, dem.pitch_m))] = int(Label.INVALID)
            write_probability_map(ProbabilityMap(msm.p_safe), self.prediction_path(key, sigma, '.prob'))
            write_uncertainty_map(predictive_entropy(msm), self.prediction_path(key, sigma, '.entropy'))
            write_safety_map(SafetyMap(labels), self.prediction_path(key, sigma, '.sfm'))
            return [self.prediction_path(key, sigma, suffix) for suffix in ('.prob', '.entropy', '.sfm')]

        outputs = [path for paths in self._fan_out(run, jobs) for path in paths]
        self.logger.info(f"Predicted {len(jobs)} DEMs with {samples} MC samples each")
        inputs = [self.path(MODEL_FILE)] + list(dem_paths.values())
        self._finish(manifest, 'predict', inputs, outputs)

    def calibrate(self) -> UncertaintyThreshold:
        """Global entropy threshold from the validation split (or the configured override)"""
        manifest = read_manifest(self.run_dir)
        sigma = manifest.train_sigma
        keys = manifest.split('validation')
        override = self.config.threshold_override
        inputs = []

        if override is not None:
            threshold = UncertaintyThreshold(override, 'override')
            self.logger.info(f"Using configured uncertainty threshold {override}")
        else:
            maps, truths = [], []
            for key in keys:
                entropy_path = self._input(manifest, self.prediction_path(key, sigma, '.entropy'), 'predict')
                truth_path = self._input(manifest, self.truth_path(key), 'label')
                maps.append(read_uncertainty_map(entropy_path))
                truths.append(read_safety_map(truth_path))
                inputs.extend([entropy_path, truth_path])
            threshold = calibrate_threshold(
                maps, truths, provenance=f"validation {len(keys)} DEMs {sigma_label(sigma)}")

        write_threshold(threshold, self.path(THRESHOLD_FILE))
        self._finish(manifest, 'calibrate', inputs, [self.path(THRESHOLD_FILE)])
        return threshold

    def select(self):
        """Uncertainty-aware maps and landing sites for every method and noise level"""
        manifest = read_manifest(self.run_dir)
        threshold = read_threshold(self._input(manifest, self.path(THRESHOLD_FILE), 'calibrate'))
        inputs, outputs = [self.path(THRESHOLD_FILE)], []

        for sigma in manifest.test_sigmas:
            sites: Dict[str, Dict[str, Optional[LandingSite]]] = {
                BASELINE: {}, BASE_NET: {}, UNCERTAINTY_AWARE: {}}
            for key in manifest.split('test'):
                baseline_path = self._input(manifest, self.baseline_path(key, sigma), 'label')
                base_path = self._input(manifest, self.prediction_path(key, sigma, '.sfm'), 'predict')
                entropy_path = self._input(manifest, self.prediction_path(key, sigma, '.entropy'), 'predict')
                base = read_safety_map(base_path)
                aware = apply_threshold(base, read_uncertainty_map(entropy_path), threshold)
                write_safety_map(aware, self.selection_path(key, sigma))

                sites[BASELINE][key] = propose_site(read_safety_map(baseline_path))
                sites[BASE_NET][key] = propose_site(base)
                sites[UNCERTAINTY_AWARE][key] = propose_site(aware)
                if sites[UNCERTAINTY_AWARE][key] is None:
                    self.logger.info(f"No safe site on {key} at {sigma_label(sigma)}")
                inputs.extend([baseline_path, base_path, entropy_path])
                outputs.append(self.selection_path(key, sigma))

            for method, records in sites.items():
                write_sites(records, self.sites_path(method, sigma))
                outputs.append(self.sites_path(method, sigma))

        self._finish(manifest, 'select', inputs, outputs)

    def evaluate(self) -> MetricsReport:
        """Score baseline, base net and uncertainty-aware labels against clean-DEM ground truth"""
        manifest = read_manifest(self.run_dir)
        datasets = []
        inputs = []
        for sigma in manifest.test_sigmas:
            items = []
            for key in manifest.split('test'):
                truth_path = self._input(manifest, self.truth_path(key), 'label')
                dem_path = self._dataset_dem(manifest, key, sigma)
                items.append(EvalItem(key, read_dem(dem_path), read_safety_map(truth_path)))
                inputs.extend([truth_path, dem_path])
            datasets.append(EvalSet(manifest.train_sigma, sigma, items))

        def reader(path_fn: Callable[[str, float], str], stage: str):
            def predict(item: EvalItem, ds: EvalSet) -> SafetyMap:
                path = self._input(manifest, path_fn(item.key, ds.test_sigma), stage)
                inputs.append(path)
                return read_safety_map(path)
            return predict

        methods = [
            EvalMethod(BASELINE, reader(self.baseline_path, 'label'), trained=False),
            EvalMethod(BASE_NET, reader(lambda k, s: self.prediction_path(k, s, '.sfm'), 'predict')),
            EvalMethod(UNCERTAINTY_AWARE, reader(self.selection_path, 'select')),
        ]
        report = evaluate_suite(methods, datasets)
        write_report(report, self.run_dir)
        outputs = [self.path(name) for name in (REPORT_TEXT, REPORT_CSV, SITES_CSV)]
        self._finish(manifest, 'evaluate', inputs, outputs)
        return report

    def run_all(self, force: bool = False) -> MetricsReport:
        """Every stage in order"""
        self.generate(force=force)
        self.label()
        self.train()
        self.predict()
        self.calibrate()
        self.select()
        return self.evaluate()


def write_report(report: MetricsReport, out_dir: str, with_checks: bool = True):
    """report.txt (table plus ordering checks), report.csv and sites.csv"""
    checks = ordering_checks(report) if with_checks else None
    atomic_write_bytes(os.path.join(out_dir, REPORT_TEXT), format_table(report, checks).encode('utf-8'))
    atomic_write_bytes(os.path.join(out_dir, REPORT_CSV), format_records(report).encode('utf-8'))
    atomic_write_bytes(os.path.join(out_dir, SITES_CSV), format_site_records(report).encode('utf-8'))


def run_seeds(config: Config, seeds: Sequence[int] = None,
              force: bool = False) -> Tuple[MetricsReport, Dict[str, bool]]:
    """
    Full pipeline once per seed under <out_dir>/seed_<n>, then a seed-averaged report

    Returns:
        (averaged report, ordering checks)
    """
    logger = logging.getLogger(__name__)
    seeds = list(seeds if seeds is not None else config.seeds)
    reports, seed_reports = [], []
    for seed in seeds:
        seed_config = Config.from_dict(config.get_all())
        seed_config.set('pipeline.seed', int(seed))
        run_dir = os.path.join(config.out_dir, f"seed_{seed}")
        logger.info(f"Pipeline run for seed {seed} in {run_dir}")
        reports.append(HazardPipeline(seed_config, run_dir).run_all(force=force))
        seed_reports.append(os.path.join(run_dir, REPORT_CSV))

    averaged = average_reports(reports)
    checks = ordering_checks(averaged)
    write_report(averaged, config.out_dir)
    record_provenance(config.out_dir, 'average', config.seed, config.digest(), seed_reports,
                      [os.path.join(config.out_dir, name) for name in (REPORT_TEXT, REPORT_CSV, SITES_CSV)])
    for name, passed in checks.items():
        logger.info(f"{'PASS' if passed else 'FAIL'} {name}")
    return averaged, checks
