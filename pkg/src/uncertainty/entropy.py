"""
Predictive entropy of the MC-mean class distribution (nats).
"""

import math
from dataclasses import dataclass

import numpy as np

from src.core.errors import InvalidParameterError
from src.segmenter.inference import MeanSoftmaxMap
from src.terrain.dem_io import PathLike, read_grid, write_grid

LN2 = math.log(2.0)
PROB_EPS = 1e-12


@dataclass
class UncertaintyMap:
    """Per-pixel predictive entropy in nats"""

    entropy: np.ndarray

    def __post_init__(self):
        self.entropy = np.asarray(self.entropy, dtype=np.float64)
        if self.entropy.ndim != 2:
            raise InvalidParameterError(f"UncertaintyMap must be 2-D, got {self.entropy.shape}")
        if np.any(self.entropy < 0) or np.any(self.entropy > LN2 + 1e-9):
            raise InvalidParameterError("Binary entropy must lie in [0, ln 2]")

    @property
    def shape(self):
        return self.entropy.shape


def predictive_entropy(msm: MeanSoftmaxMap) -> UncertaintyMap:
    """
    H = -sum_c p_c ln p_c over the MC-mean probabilities

    Probabilities are clamped below at eps before the log and zero
    probabilities contribute 0; the result is clamped to [0, ln 2].
    """
    p = np.clip(msm.probs, PROB_EPS, 1.0)
    entropy = -np.sum(np.where(msm.probs > 0, msm.probs * np.log(p), 0.0), axis=0)
    return UncertaintyMap(np.clip(entropy, 0.0, LN2))


def write_uncertainty_map(umap: UncertaintyMap, path: PathLike):
    write_grid(path, umap.entropy, 'entropy')


def read_uncertainty_map(path: PathLike) -> UncertaintyMap:
    values, _, _ = read_grid(path, 'entropy')
    return UncertaintyMap(np.clip(values.astype(np.float64), 0.0, LN2))
