"""
Per-pixel safety label and probability grids, plus their file I/O.
"""

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from src.core.errors import InvalidParameterError, MalformedHeaderError, ShapeMismatchError
from src.terrain.dem_io import PathLike, read_grid, write_grid


class Label(IntEnum):
    """Safety label codes (also the on-disk byte values)"""
    UNSAFE = 0
    SAFE = 1
    INVALID = 2


@dataclass
class SafetyMap:
    """Tri-state label grid"""

    labels: np.ndarray

    def __post_init__(self):
        self.labels = np.ascontiguousarray(self.labels, dtype=np.uint8)
        if self.labels.ndim != 2:
            raise InvalidParameterError(f"SafetyMap must be 2-D, got {self.labels.shape}")
        if self.labels.size and int(self.labels.max()) > Label.INVALID:
            raise InvalidParameterError("SafetyMap holds an unknown label code")

    @property
    def width(self) -> int:
        return int(self.labels.shape[1])

    @property
    def height(self) -> int:
        return int(self.labels.shape[0])

    @property
    def shape(self):
        return self.labels.shape

    def count(self, label: Label) -> int:
        return int(np.count_nonzero(self.labels == label))

    @classmethod
    def filled(cls, shape, label: Label) -> 'SafetyMap':
        return cls(np.full(shape, int(label), dtype=np.uint8))


@dataclass
class ProbabilityMap:
    """Per-pixel probability of a safe landing"""

    p_safe: np.ndarray

    def __post_init__(self):
        self.p_safe = np.asarray(self.p_safe, dtype=np.float64)
        if self.p_safe.ndim != 2:
            raise InvalidParameterError(f"ProbabilityMap must be 2-D, got {self.p_safe.shape}")
        if np.any(self.p_safe < 0) or np.any(self.p_safe > 1):
            raise InvalidParameterError("Probabilities must lie in [0, 1]")

    @property
    def width(self) -> int:
        return int(self.p_safe.shape[1])

    @property
    def height(self) -> int:
        return int(self.p_safe.shape[0])


def require_same_shape(a, b, what: str = 'maps'):
    if tuple(a.shape) != tuple(b.shape):
        raise ShapeMismatchError(f"Shape mismatch between {what}: {tuple(a.shape)} vs {tuple(b.shape)}")


def border_mask(shape, margin: int) -> np.ndarray:
    """True within `margin` pixels of any edge"""
    mask = np.zeros(shape, dtype=bool)
    if margin <= 0:
        return mask
    mask[:margin, :] = True
    mask[-margin:, :] = True
    mask[:, :margin] = True
    mask[:, -margin:] = True
    return mask


def write_safety_map(smap: SafetyMap, path: PathLike):
    """Write a .sfm file (one byte per pixel: 0 Unsafe, 1 Safe, 2 Invalid)"""
    write_grid(path, smap.labels, 'safety')


def read_safety_map(path: PathLike) -> SafetyMap:
    values, _, _ = read_grid(path, 'safety')
    if values.size and int(values.max()) > Label.INVALID:
        raise MalformedHeaderError(f"{path}: unknown label code {int(values.max())}")
    return SafetyMap(values)


def write_probability_map(pmap: ProbabilityMap, path: PathLike):
    write_grid(path, pmap.p_safe, 'prob')


def read_probability_map(path: PathLike) -> ProbabilityMap:
    values, _, _ = read_grid(path, 'prob')
    return ProbabilityMap(np.clip(values.astype(np.float64), 0.0, 1.0))
