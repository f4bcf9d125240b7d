"""
Digital elevation model container and grid resampling helpers.
Heights are stored as float32 so that the on-disk format round-trips bit-exact.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from src.core.errors import InvalidParameterError


@dataclass
class DEM:
    """
    Rectangular grid of terrain heights in meters

    Grid nodes sit at (col * pitch_m, row * pitch_m); row 0 is the first row
    of the payload.
    """

    heights: np.ndarray
    pitch_m: float = 1.0

    def __post_init__(self):
        self.heights = np.ascontiguousarray(self.heights, dtype=np.float32)
        if self.heights.ndim != 2:
            raise InvalidParameterError(f"DEM heights must be 2-D, got shape {self.heights.shape}")
        if self.heights.shape[0] < 1 or self.heights.shape[1] < 1:
            raise InvalidParameterError(f"DEM must be at least 1x1, got {self.heights.shape}")
        if not self.pitch_m > 0:
            raise InvalidParameterError(f"DEM pitch must be positive, got {self.pitch_m}")
        if not np.all(np.isfinite(self.heights)):
            raise InvalidParameterError("DEM contains non-finite heights")
        self.pitch_m = float(self.pitch_m)

    @property
    def width(self) -> int:
        return int(self.heights.shape[1])

    @property
    def height(self) -> int:
        return int(self.heights.shape[0])

    @property
    def shape(self):
        return self.heights.shape

    @property
    def extent_m(self):
        """Largest valid (x, y) coordinate in meters"""
        return (self.width - 1) * self.pitch_m, (self.height - 1) * self.pitch_m

    def copy(self) -> 'DEM':
        return DEM(self.heights.copy(), self.pitch_m)


def _corner_aligned_coords(n_in: int, n_out: int) -> np.ndarray:
    if n_out == 1 or n_in == 1:
        return np.zeros(n_out)
    return np.linspace(0.0, n_in - 1, n_out)


def resample_bilinear(grid: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """
    Bilinear resize with corner alignment (output corners equal input corners)

    Args:
        grid: 2-D array
        out_h: Output rows
        out_w: Output columns

    Returns:
        float64 array of shape (out_h, out_w)
    """
    grid = np.asarray(grid, dtype=np.float64)
    rows = _corner_aligned_coords(grid.shape[0], out_h)
    cols = _corner_aligned_coords(grid.shape[1], out_w)
    rr, cc = np.meshgrid(rows, cols, indexing='ij')
    return ndimage.map_coordinates(grid, [rr, cc], order=1, mode='nearest')


def resample_nearest(labels: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Nearest-neighbour resize for categorical grids (no new classes appear)"""
    labels = np.asarray(labels)
    rows = np.rint(_corner_aligned_coords(labels.shape[0], out_h)).astype(np.intp)
    cols = np.rint(_corner_aligned_coords(labels.shape[1], out_w)).astype(np.intp)
    return labels[np.ix_(rows, cols)]
