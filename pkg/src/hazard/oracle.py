"""
Geometric hazard oracle.
Sweeps lander footpad configurations over every aiming point, fits the
touchdown plane through the footpads and checks slope and under-body
roughness. The fraction of passing configurations is the pixel's safety
probability.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from src.core.errors import DomainError, HazardToolkitError, InvalidParameterError
from src.hazard.maps import Label, ProbabilityMap, SafetyMap, border_mask
from src.terrain.dem import DEM

logger = logging.getLogger(__name__)

# Gaussian position offsets are truncated at this many sigmas
OFFSET_TRUNCATION = 3.0


@dataclass
class LanderGeometry:
    """Footpad layout and tolerances of the lander"""

    pad_count: int = 4
    pad_circle_radius_m: float = 1.5
    body_clearance_radius_m: float = 1.7
    slope_limit_deg: float = 10.0
    roughness_limit_m: float = 0.3

    def __post_init__(self):
        if self.pad_count < 3:
            raise InvalidParameterError(f"pad_count must be >= 3, got {self.pad_count}")
        if not (self.pad_circle_radius_m > 0 and self.body_clearance_radius_m > 0):
            raise InvalidParameterError("Lander radii must be positive")
        if not 0 < self.slope_limit_deg < 90:
            raise InvalidParameterError(f"slope_limit_deg must be in (0, 90), got {self.slope_limit_deg}")
        if not self.roughness_limit_m > 0:
            raise InvalidParameterError(f"roughness_limit_m must be positive, got {self.roughness_limit_m}")


@dataclass
class OracleConfig:
    """Sweep and labeling parameters"""

    orientation_samples: int = 8
    offset_samples: int = 9
    offset_sigma_m: float = 0.5
    safety_threshold: float = 0.5
    border_margin_px: Optional[int] = None
    rng_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.orientation_samples < 1 or self.offset_samples < 1:
            raise InvalidParameterError("orientation_samples and offset_samples must be >= 1")
        if not self.offset_sigma_m >= 0:
            raise InvalidParameterError(f"offset_sigma_m must be >= 0, got {self.offset_sigma_m}")
        if not 0 < self.safety_threshold < 1:
            raise InvalidParameterError(f"safety_threshold must be in (0, 1), got {self.safety_threshold}")
        if self.border_margin_px is not None and self.border_margin_px < 0:
            raise InvalidParameterError(f"border_margin_px must be >= 0, got {self.border_margin_px}")
        if self.workers < 1:
            raise InvalidParameterError(f"workers must be >= 1, got {self.workers}")

    @property
    def configurations(self) -> int:
        return self.orientation_samples * self.offset_samples

    def resolve_border_margin(self, geom: LanderGeometry, pitch_m: float) -> int:
        """Explicit margin, or the smallest ring that keeps every swept pose in extent"""
        if self.border_margin_px is not None:
            return int(self.border_margin_px)
        reach = max(geom.pad_circle_radius_m, geom.body_clearance_radius_m)
        return int(math.ceil((reach + OFFSET_TRUNCATION * self.offset_sigma_m) / pitch_m - 1e-9))


def yaw_angles(geom: LanderGeometry, cfg: OracleConfig) -> np.ndarray:
    """Yaw angles swept per aiming point (one footpad period, uniformly spaced)"""
    period = 2.0 * math.pi / geom.pad_count
    return np.arange(cfg.orientation_samples) * (period / cfg.orientation_samples)


def pose_offsets(cfg: OracleConfig, pixel_index: int) -> np.ndarray:
    """
    In-plane position offsets swept at one aiming point

    Sample 0 is always the nominal aiming point. The stream is keyed by
    (rng_seed, pixel_index) so results never depend on evaluation order.

    Returns:
        (offset_samples, 2) array of (dx, dy) in meters
    """
    offsets = np.zeros((cfg.offset_samples, 2))
    if cfg.offset_samples > 1 and cfg.offset_sigma_m > 0:
        rng = np.random.default_rng([int(cfg.rng_seed) & 0xFFFFFFFF, int(pixel_index)])
        draws = rng.normal(0.0, cfg.offset_sigma_m, size=(cfg.offset_samples - 1, 2))
        limit = OFFSET_TRUNCATION * cfg.offset_sigma_m
        norms = np.hypot(draws[:, 0], draws[:, 1])
        scale = np.where(norms > limit, limit / np.maximum(norms, 1e-300), 1.0)
        offsets[1:] = draws * scale[:, None]
    return offsets


def _pose_metrics(heights: np.ndarray, pitch: float, cx: np.ndarray, cy: np.ndarray,
                  yaw: float, geom: LanderGeometry) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Slope and roughness for N poses sharing one yaw

    Args:
        heights: float64 height grid
        pitch: Meters per pixel
        cx, cy: (N,) pose centers in meters
        yaw: Lander yaw in radians
        geom: Lander geometry

    Returns:
        (slope_deg, roughness_m, in_extent), each of shape (N,)
    """
    n_rows, n_cols = heights.shape
    angles = yaw + 2.0 * math.pi * np.arange(geom.pad_count) / geom.pad_count
    pad_dx = geom.pad_circle_radius_m * np.cos(angles)
    pad_dy = geom.pad_circle_radius_m * np.sin(angles)

    px = cx[:, None] + pad_dx[None, :]
    py = cy[:, None] + pad_dy[None, :]
    tol = 1e-9
    x_max = (n_cols - 1) * pitch
    y_max = (n_rows - 1) * pitch
    in_extent = np.all((px >= -tol) & (px <= x_max + tol) & (py >= -tol) & (py <= y_max + tol), axis=1)

    pad_z = ndimage.map_coordinates(
        heights, [(py / pitch).ravel(), (px / pitch).ravel()], order=1, mode='nearest'
    ).reshape(px.shape)

    design = np.column_stack([np.ones(geom.pad_count), pad_dx, pad_dy])
    if np.linalg.matrix_rank(design) < 3:
        raise HazardToolkitError("Degenerate footpad plane fit")
    coeffs = pad_z @ np.linalg.pinv(design).T
    offset, grad_x, grad_y = coeffs[:, 0], coeffs[:, 1], coeffs[:, 2]
    slope_deg = np.degrees(np.arctan(np.hypot(grad_x, grad_y)))

    # Body disc: every grid node within the clearance radius of the pose center
    reach = int(math.ceil(geom.body_clearance_radius_m / pitch)) + 1
    steps = np.arange(-reach, reach + 1)
    rows = np.rint(cy / pitch).astype(np.intp)[:, None, None] + steps[None, :, None]
    cols = np.rint(cx / pitch).astype(np.intp)[:, None, None] + steps[None, None, :]
    dx = cols * pitch - cx[:, None, None]
    dy = rows * pitch - cy[:, None, None]
    inside = dx ** 2 + dy ** 2 <= geom.body_clearance_radius_m ** 2 + 1e-12
    in_grid = (rows >= 0) & (rows < n_rows) & (cols >= 0) & (cols < n_cols)
    in_extent &= ~np.any(inside & ~in_grid, axis=(1, 2))

    node_z = heights[np.clip(rows, 0, n_rows - 1), np.clip(cols, 0, n_cols - 1)]
    plane_z = offset[:, None, None] + grad_x[:, None, None] * dx + grad_y[:, None, None] * dy
    protrusion = np.where(inside & in_grid, node_z - plane_z, -np.inf)
    roughness = np.maximum(protrusion.reshape(len(cx), -1).max(axis=1), 0.0)
    return slope_deg, roughness, in_extent


def sample_height(dem: DEM, x_m: float, y_m: float) -> float:
    """
    Bilinear height at a continuous position

    Args:
        dem: Terrain
        x_m: Column-axis coordinate in meters
        y_m: Row-axis coordinate in meters

    Raises:
        DomainError: position outside the DEM extent
    """
    x_max, y_max = dem.extent_m
    if not (0.0 <= x_m <= x_max and 0.0 <= y_m <= y_max):
        raise DomainError(f"({x_m}, {y_m}) outside DEM extent [0, {x_max}] x [0, {y_max}]")
    value = ndimage.map_coordinates(
        dem.heights.astype(np.float64), [[y_m / dem.pitch_m], [x_m / dem.pitch_m]],
        order=1, mode='nearest')
    return float(value[0])


def evaluate_pose(dem: DEM, center_m: Sequence[float], yaw_rad: float,
                  geom: LanderGeometry) -> Tuple[float, float]:
    """
    Touchdown slope and roughness for a single lander pose

    Args:
        dem: Terrain
        center_m: (x, y) of the pose center in meters
        yaw_rad: Lander yaw
        geom: Lander geometry

    Returns:
        (slope_deg, roughness_m)
    """
    cx = np.array([float(center_m[0])])
    cy = np.array([float(center_m[1])])
    slope, roughness, in_extent = _pose_metrics(
        dem.heights.astype(np.float64), dem.pitch_m, cx, cy, yaw_rad, geom)
    if not in_extent[0]:
        raise DomainError(f"Pose at {tuple(center_m)} yaw {yaw_rad:.3f} leaves the DEM extent")
    return float(slope[0]), float(roughness[0])


def _sweep(heights: np.ndarray, pitch: float, rows: np.ndarray, cols: np.ndarray,
           indices: np.ndarray, geom: LanderGeometry, cfg: OracleConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Passing-configuration counts and sweep validity for a batch of aiming points"""
    offsets = np.stack([pose_offsets(cfg, int(i)) for i in indices]) if len(indices) else \
        np.zeros((0, cfg.offset_samples, 2))
    passes = np.zeros(len(indices), dtype=np.int64)
    valid = np.ones(len(indices), dtype=bool)
    base_x = cols * pitch
    base_y = rows * pitch
    for yaw in yaw_angles(geom, cfg):
        for s in range(cfg.offset_samples):
            slope, roughness, in_extent = _pose_metrics(
                heights, pitch, base_x + offsets[:, s, 0], base_y + offsets[:, s, 1], yaw, geom)
            passes += (slope <= geom.slope_limit_deg) & (roughness <= geom.roughness_limit_m)
            valid &= in_extent
    return passes, valid


def safety_probability(dem: DEM, center_px: Sequence[int], geom: LanderGeometry,
                       cfg: OracleConfig) -> float:
    """
    Fraction of swept configurations that pass both slope and roughness checks

    Args:
        dem: Terrain
        center_px: (row, col) aiming point
        geom: Lander geometry
        cfg: Sweep configuration

    Raises:
        DomainError: some swept pose leaves the DEM (caller should mark Invalid)
    """
    row, col = int(center_px[0]), int(center_px[1])
    if not (0 <= row < dem.height and 0 <= col < dem.width):
        raise DomainError(f"Pixel ({row}, {col}) outside {dem.height}x{dem.width} DEM")
    index = row * dem.width + col
    passes, valid = _sweep(dem.heights.astype(np.float64), dem.pitch_m,
                           np.array([row]), np.array([col]), np.array([index]), geom, cfg)
    if not valid[0]:
        raise DomainError(f"Pose sweep at pixel ({row}, {col}) leaves the DEM extent")
    return float(passes[0]) / cfg.configurations


def label_dem(dem: DEM, geom: LanderGeometry, cfg: OracleConfig,
              chunk_size: int = 1024) -> Tuple[ProbabilityMap, SafetyMap]:
    """
    Label every pixel of a DEM

    Border pixels and pixels whose sweep would leave the extent are Invalid
    (probability 0); the rest are Safe when P >= safety_threshold.

    Args:
        dem: Terrain
        geom: Lander geometry
        cfg: Sweep configuration
        chunk_size: Aiming points evaluated per vectorized batch

    Returns:
        (ProbabilityMap, SafetyMap)
    """
    margin = cfg.resolve_border_margin(geom, dem.pitch_m)
    heights = dem.heights.astype(np.float64)
    indices = np.flatnonzero(~border_mask(dem.shape, margin))
    chunks = [indices[i:i + chunk_size] for i in range(0, len(indices), chunk_size)]

    def run(chunk):
        rows, cols = np.divmod(chunk, dem.width)
        return _sweep(heights, dem.pitch_m, rows, cols, chunk, geom, cfg)

    if cfg.workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(chunk) for chunk in chunks]

    p_safe = np.zeros(dem.shape)
    labels = np.full(dem.shape, int(Label.INVALID), dtype=np.uint8)
    for chunk, (passes, valid) in zip(chunks, results):
        probability = passes / cfg.configurations
        kept = chunk[valid]
        p_safe.flat[kept] = probability[valid]
        labels.flat[kept] = np.where(probability[valid] >= cfg.safety_threshold,
                                     int(Label.SAFE), int(Label.UNSAFE))

    smap = SafetyMap(labels)
    logger.debug(f"Labeled {dem.width}x{dem.height} DEM: {smap.count(Label.SAFE)} safe, "
                 f"{smap.count(Label.UNSAFE)} unsafe, {smap.count(Label.INVALID)} invalid")
    return ProbabilityMap(p_safe), smap
