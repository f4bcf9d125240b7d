"""
Landing site selection by exact Euclidean distance transform.
The map border counts as an obstacle: terrain beyond the edge is unknown.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from scipy import ndimage

from src.hazard.maps import Label, SafetyMap, require_same_shape
from src.terrain.dem_io import PathLike, atomic_write_bytes

logger = logging.getLogger(__name__)


@dataclass
class DistanceMap:
    """Squared Euclidean distance (integer pixels^2) to the nearest non-safe position"""

    squared: np.ndarray

    @property
    def distance(self) -> np.ndarray:
        return np.sqrt(self.squared.astype(np.float64))

    @property
    def shape(self):
        return self.squared.shape


@dataclass(frozen=True)
class LandingSite:
    row: int
    col: int
    clearance_px: float


def safe_mask(smap: SafetyMap) -> np.ndarray:
    """True exactly where the label is Safe"""
    return smap.labels == Label.SAFE


def distance_transform(mask: np.ndarray) -> DistanceMap:
    """
    Distance from every true pixel to the nearest false pixel or off-map position

    The mask is padded with a ring of false pixels so the border acts as an
    obstacle; nearest-feature indices give exact integer squared distances.
    """
    mask = np.asarray(mask, dtype=bool)
    padded = np.pad(mask, 1, mode='constant', constant_values=False)
    indices = ndimage.distance_transform_edt(padded, return_distances=False, return_indices=True)
    rows, cols = np.indices(padded.shape)
    squared = (indices[0] - rows) ** 2 + (indices[1] - cols) ** 2
    return DistanceMap(squared[1:-1, 1:-1].astype(np.int64))


def select_site(dmap: DistanceMap, smap: SafetyMap) -> Optional[LandingSite]:
    """
    Safe pixel with the greatest clearance

    Ties go to the smallest row, then the smallest column. Returns None when
    the map has no Safe pixel.
    """
    require_same_shape(dmap, smap, 'distance map and safety map')
    candidates = np.where(safe_mask(smap), dmap.squared, -1)
    if candidates.size == 0 or candidates.max() < 0:
        return None
    # argmax returns the first maximum in row-major order
    flat = int(np.argmax(candidates))
    row, col = divmod(flat, smap.width)
    return LandingSite(row, col, float(np.sqrt(dmap.squared[row, col])))


def propose_site(smap: SafetyMap) -> Optional[LandingSite]:
    """safe_mask -> distance_transform -> select_site"""
    return select_site(distance_transform(safe_mask(smap)), smap)


def format_site(site: Optional[LandingSite]) -> str:
    """`row,col,clearance_px`, or `none` when no site exists"""
    if site is None:
        return 'none'
    return f"{site.row},{site.col},{site.clearance_px!r}"


def write_sites(sites: Dict[str, Optional[LandingSite]], path: PathLike):
    """One `item,row,col,clearance_px` (or `item,none`) record per DEM"""
    lines = ['item,row,col,clearance_px'] + [f"{item},{format_site(site)}" for item, site in sites.items()]
    atomic_write_bytes(path, ('\n'.join(lines) + '\n').encode('ascii'))


def read_sites(path: PathLike) -> Dict[str, Optional[LandingSite]]:
    sites: Dict[str, Optional[LandingSite]] = {}
    with open(path, 'r') as f:
        next(f, None)
        for line in f:
            parts = line.strip().split(',')
            if len(parts) == 2 and parts[1] == 'none':
                sites[parts[0]] = None
            elif len(parts) == 4:
                sites[parts[0]] = LandingSite(int(parts[1]), int(parts[2]), float(parts[3]))
    return sites
