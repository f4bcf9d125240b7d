"""
Configuration management for the hazard toolkit.
Loads the YAML run configuration, applies overrides and validates every section.
"""

import copy
import hashlib
import json
import logging
import os
from dataclasses import fields
from typing import Any, Dict, Iterable, List, Tuple

import yaml

from src.core.errors import ConfigError
from src.core.seeding import derive_seed
from src.hazard.oracle import LanderGeometry, OracleConfig
from src.segmenter.network import ModelConfig
from src.segmenter.training import TrainConfig
from src.terrain.generator import TerrainParams
from src.uncertainty.entropy import LN2

# Keys owned by the seed plumbing rather than the YAML document
_DERIVED_KEYS = {'rng_seed', 'workers', 'in_channels', 'num_classes'}

_SECTION_TYPES = {
    'terrain': TerrainParams,
    'lander': LanderGeometry,
    'oracle': OracleConfig,
    'model': ModelConfig,
    'training': TrainConfig,
}

_PLAIN_SECTIONS = {
    'noise': {'train_sigma_m', 'test_sigmas_m'},
    'inference': {'samples'},
    'uncertainty': {'threshold_override'},
    'dataset': {'size', 'split'},
    'pipeline': {'seed', 'seeds', 'out_dir', 'workers'},
    'logging': {'level', 'file', 'console'},
}


class Config:
    """
    Run configuration manager
    """

    def __init__(self, config_path: str):
        """
        Load configuration from YAML file

        Args:
            config_path: Path to config.yaml
        """
        self.logger = logging.getLogger(__name__)
        self.config_path = config_path

        if not os.path.exists(config_path):
            raise FileNotFoundError(f"Configuration file not found: {config_path}")

        with open(config_path, 'r') as f:
            self._config = yaml.safe_load(f) or {}

        # Expand environment variables in paths
        self._expand_paths(self._config)

        self.logger.info(f"Configuration loaded from {config_path}")

    @classmethod
    def from_dict(cls, data: Dict) -> 'Config':
        """Build a configuration from an in-memory document"""
        config = cls.__new__(cls)
        config.logger = logging.getLogger(__name__)
        config.config_path = None
        config._config = copy.deepcopy(data)
        config._expand_paths(config._config)
        return config

    def _expand_paths(self, config: Dict):
        """Recursively expand environment variables in path strings"""
        for key, value in config.items():
            if isinstance(value, dict):
                self._expand_paths(value)
            elif isinstance(value, str) and ('$' in value or '~' in value):
                config[key] = os.path.expandvars(os.path.expanduser(value))

    def get(self, path: str, default: Any = None) -> Any:
        """
        Get configuration value using dot notation

        Args:
            path: Configuration path (e.g., 'model.dropout_rate')
            default: Default value if path doesn't exist

        Returns:
            Configuration value
        """
        keys = path.split('.')
        value = self._config

        for key in keys:
            if isinstance(value, dict) and key in value:
                value = value[key]
            else:
                return default

        return value

    def set(self, path: str, value: Any):
        """
        Set configuration value using dot notation

        Args:
            path: Configuration path (e.g., 'training.epochs')
            value: Value to set
        """
        keys = path.split('.')
        config = self._config

        for key in keys[:-1]:
            if key not in config or not isinstance(config[key], dict):
                config[key] = {}
            config = config[key]

        config[keys[-1]] = value
        self.logger.debug(f"Config set: {path} = {value}")

    def apply_overrides(self, overrides: Iterable[str]):
        """
        Apply `key=value` overrides; values are parsed as YAML scalars

        Args:
            overrides: Strings such as 'training.epochs=5' or 'noise.test_sigmas_m=[0, 0.03]'
        """
        for item in overrides or ():
            if '=' not in item:
                raise ConfigError(f"Override '{item}' is not of the form key=value")
            key, raw = item.split('=', 1)
            key = key.strip()
            if not key:
                raise ConfigError(f"Override '{item}' has an empty key")
            try:
                value = yaml.safe_load(raw)
            except yaml.YAMLError as e:
                raise ConfigError(f"Override '{item}' has an unparsable value: {e}")
            self.set(key, value)

    def save(self, config_path: str = None):
        """
        Save configuration to YAML file

        Args:
            config_path: Path to save config file (default: original config path)
        """
        if config_path is None:
            config_path = self.config_path

        with open(config_path, 'w') as f:
            yaml.safe_dump(self._config, f, default_flow_style=False)

        self.logger.info(f"Configuration saved to {config_path}")

    def get_all(self) -> Dict:
        """Get entire configuration dictionary"""
        return copy.deepcopy(self._config)

    def digest(self) -> str:
        """
        SHA-256 of the canonical (sorted-key JSON) document

        Logging, the output directory and the worker count do not change any
        artifact and are left out.
        """
        document = copy.deepcopy(self._config)
        document.pop('logging', None)
        if isinstance(document.get('pipeline'), dict):
            document['pipeline'].pop('out_dir', None)
            document['pipeline'].pop('workers', None)
        canonical = json.dumps(document, sort_keys=True, separators=(',', ':'), default=str)
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    # Typed accessors

    def _section(self, name: str) -> Dict:
        section = self._config.get(name) or {}
        if not isinstance(section, dict):
            raise ConfigError(f"Section '{name}' must be a mapping")
        return section

    def _build(self, name: str, **extra):
        cls = _SECTION_TYPES[name]
        try:
            return cls(**self._section(name), **extra)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid '{name}' section: {e}")

    @property
    def seed(self) -> int:
        return int(self.get('pipeline.seed', 0))

    @property
    def seeds(self) -> List[int]:
        return [int(s) for s in self.get('pipeline.seeds', [self.seed])]

    @property
    def out_dir(self) -> str:
        return self.get('pipeline.out_dir', 'runs/desk')

    @property
    def workers(self) -> int:
        return int(self.get('pipeline.workers', 1))

    @property
    def train_sigma(self) -> float:
        return float(self.get('noise.train_sigma_m', 0.0167))

    @property
    def test_sigmas(self) -> List[float]:
        return [float(s) for s in self.get('noise.test_sigmas_m', [0.0167, 0.03, 0.07])]

    @property
    def mc_samples(self) -> int:
        return int(self.get('inference.samples', 8))

    @property
    def threshold_override(self):
        value = self.get('uncertainty.threshold_override')
        return None if value is None else float(value)

    def terrain_params(self, item_index: int) -> TerrainParams:
        """Terrain parameters for one dataset item (its own terrain seed)"""
        return self._build('terrain', rng_seed=derive_seed(self.seed, 'terrain', item_index))

    def lander(self) -> LanderGeometry:
        return self._build('lander')

    def oracle(self) -> OracleConfig:
        return self._build('oracle', rng_seed=derive_seed(self.seed, 'oracle'), workers=self.workers)

    def model(self) -> ModelConfig:
        return self._build('model', rng_seed=derive_seed(self.seed, 'model'))

    def training(self) -> TrainConfig:
        return self._build('training', rng_seed=derive_seed(self.seed, 'training'))

    def split_sizes(self) -> Tuple[int, int, int]:
        """
        Train / validation / test sizes from dataset.size and the split ratio

        Validation and test get floor shares; train takes the remainder.
        """
        size = int(self.get('dataset.size', 200))
        ratio = [int(r) for r in self.get('dataset.split', [8, 1, 1])]
        if len(ratio) != 3 or any(r < 0 for r in ratio) or sum(ratio) == 0:
            raise ConfigError(f"dataset.split must be three non-negative integers, got {ratio}")
        val = size * ratio[1] // sum(ratio)
        test = size * ratio[2] // sum(ratio)
        return size - val - test, val, test

    def validate(self):
        """
        Check every section before any stage runs

        Raises:
            ConfigError: Unknown section or key, or a parameter invariant fails
        """
        known_sections = set(_SECTION_TYPES) | set(_PLAIN_SECTIONS)
        unknown = set(self._config) - known_sections
        if unknown:
            raise ConfigError(f"Unknown configuration sections: {sorted(unknown)}")

        for name, cls in _SECTION_TYPES.items():
            allowed = {f.name for f in fields(cls)} - _DERIVED_KEYS
            extra = set(self._section(name)) - allowed
            if extra:
                raise ConfigError(f"Unknown keys in '{name}': {sorted(extra)}")
        for name, allowed in _PLAIN_SECTIONS.items():
            extra = set(self._section(name)) - allowed
            if extra:
                raise ConfigError(f"Unknown keys in '{name}': {sorted(extra)}")

        self.terrain_params(0)
        self.lander()
        self.oracle()
        self.model()
        self.training()

        try:
            sigmas = self.test_sigmas
            train_sigma = self.train_sigma
            samples = self.mc_samples
            workers = self.workers
            seeds = self.seeds
            override = self.threshold_override
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid value: {e}")
        if not sigmas or any(s < 0 for s in sigmas) or train_sigma < 0:
            raise ConfigError("Noise sigmas must be non-negative and test_sigmas_m non-empty")
        if len(set(sigmas)) != len(sigmas):
            raise ConfigError(f"Duplicate test sigma in {sigmas}")
        if samples < 1:
            raise ConfigError(f"inference.samples must be >= 1, got {samples}")
        if workers < 1:
            raise ConfigError(f"pipeline.workers must be >= 1, got {workers}")
        if not seeds:
            raise ConfigError("pipeline.seeds must not be empty")
        if override is not None and not 0 <= override <= LN2:
            raise ConfigError(f"uncertainty.threshold_override must be in [0, ln 2], got {override}")

        train, val, test = self.split_sizes()
        if min(train, val, test) < 1:
            raise ConfigError(f"Every split needs at least one DEM, got {train}/{val}/{test}")
        self.logger.debug(f"Configuration valid (digest {self.digest()[:12]})")
