"""
Dataset manifest: split membership and per-item artifact paths.
Stored as JSON next to the artifacts; paths are relative to the run directory.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Dict, List

from src.core.errors import MalformedHeaderError, MissingArtifactError
from src.terrain.dem_io import PathLike, atomic_write_bytes

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'
MANIFEST_VERSION = 1
SPLITS = ('train', 'validation', 'test')


def item_key(index: int) -> str:
    return f"dem_{index:04d}"


def sigma_label(sigma: float) -> str:
    """Directory-safe label of a noise level, e.g. 0.0167 -> 'sigma_0.0167'"""
    return f"sigma_{float(sigma):g}"


@dataclass
class ManifestItem:
    clean: str
    noisy: Dict[str, str]
    label: str


@dataclass
class StageRecord:
    """Files one stage wrote, the config digest it ran under and its provenance record"""
    config_digest: str
    provenance: str
    outputs: List[str] = field(default_factory=list)


@dataclass
class DatasetManifest:
    """
    Everything downstream stages need to locate the dataset

    Args:
        seed: Generation seed
        config_digest: Digest of the configuration that produced the dataset
        train_sigma: Noise level of the training and validation inputs
        test_sigmas: Noise levels of the test inputs
        splits: Item keys per split (disjoint)
        items: Per-item clean DEM, noisy DEMs keyed by sigma label, and ground-truth label path
        stages: Outputs of every completed stage, keyed by stage name
    """
    seed: int
    config_digest: str
    train_sigma: float
    test_sigmas: List[float]
    splits: Dict[str, List[str]] = field(default_factory=dict)
    items: Dict[str, ManifestItem] = field(default_factory=dict)
    stages: Dict[str, StageRecord] = field(default_factory=dict)
    version: int = MANIFEST_VERSION

    @property
    def sigmas(self) -> List[float]:
        """Every noise level with a noisy variant, ascending"""
        return sorted(set(self.test_sigmas) | {self.train_sigma})

    def split(self, name: str) -> List[str]:
        return list(self.splits.get(name, []))

    def noisy_path(self, key: str, sigma: float) -> str:
        return self.items[key].noisy[sigma_label(sigma)]

    def record_stage(self, stage: str, config_digest: str, provenance: str, outputs: List[str]):
        self.stages[stage] = StageRecord(config_digest, provenance, sorted(set(outputs)))

    def produced_by(self, stage: str, relpath: str) -> bool:
        """True when relpath is a recorded output of stage"""
        record = self.stages.get(stage)
        return record is not None and relpath in record.outputs

    def artifacts(self) -> List[str]:
        """Every file the manifest reaches: dataset files plus all stage outputs"""
        paths = set()
        for item in self.items.values():
            paths.add(item.clean)
            paths.update(item.noisy.values())
        for record in self.stages.values():
            paths.update(record.outputs)
            paths.add(record.provenance)
        return sorted(paths)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + '\n'

    @classmethod
    def from_json(cls, text: str) -> 'DatasetManifest':
        try:
            data = json.loads(text)
            if data.get('version') != MANIFEST_VERSION:
                raise MalformedHeaderError(f"Unsupported manifest version {data.get('version')}")
            data['items'] = {k: ManifestItem(**v) for k, v in data['items'].items()}
            data['stages'] = {k: StageRecord(**v) for k, v in data.get('stages', {}).items()}
            manifest = cls(**data)
        except (ValueError, KeyError, TypeError) as e:
            raise MalformedHeaderError(f"Bad manifest: {e}")
        manifest.check_disjoint()
        return manifest

    def check_disjoint(self):
        seen = set()
        for name in SPLITS:
            keys = set(self.split(name))
            if keys & seen:
                raise MalformedHeaderError(f"Split '{name}' overlaps another split")
            seen |= keys


def write_manifest(manifest: DatasetManifest, run_dir: PathLike):
    path = os.path.join(run_dir, MANIFEST_NAME)
    atomic_write_bytes(path, manifest.to_json().encode('utf-8'))
    logger.info(f"Manifest written to {path} ({len(manifest.items)} items)")


def read_manifest(run_dir: PathLike) -> DatasetManifest:
    """Load the manifest, or fail naming the stage that creates it"""
    path = os.path.join(run_dir, MANIFEST_NAME)
    if not os.path.exists(path):
        raise MissingArtifactError('generate', path)
    with open(path, 'r') as f:
        manifest = DatasetManifest.from_json(f.read())
    logger.debug(f"Manifest loaded from {path}")
    return manifest
