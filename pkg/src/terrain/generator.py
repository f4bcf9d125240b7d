"""
Procedural planetary terrain and sensor noise.
Base relief is a fractal sum of value-noise octaves; craters and rocks are
analytic primitives stamped on top.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.core.errors import InvalidParameterError
from src.terrain.dem import DEM, resample_bilinear

logger = logging.getLogger(__name__)


def _check_range(name: str, value: Tuple[float, float], lower: float = 0.0):
    if len(value) != 2:
        raise InvalidParameterError(f"{name} must be a (min, max) pair, got {value}")
    lo, hi = value
    if lo > hi:
        raise InvalidParameterError(f"{name} is empty: min {lo} > max {hi}")
    if lo < lower:
        raise InvalidParameterError(f"{name} must be >= {lower}, got {value}")


@dataclass
class TerrainParams:
    """Procedural terrain parameters"""

    size: int = 64
    pitch_m: float = 1.0
    base_amplitude_m: float = 1.5
    base_roughness_exponent: float = 0.9
    base_octaves: int = 4
    crater_count: int = 3
    crater_radius_range_m: Tuple[float, float] = (3.0, 10.0)
    crater_depth_fraction: float = 0.15
    crater_rim_fraction: float = 0.25
    rock_count: int = 20
    rock_height_range_m: Tuple[float, float] = (0.1, 0.7)
    rock_radius_range_m: Tuple[float, float] = (0.5, 1.5)
    rng_seed: int = 0

    def __post_init__(self):
        self.crater_radius_range_m = tuple(self.crater_radius_range_m)
        self.rock_height_range_m = tuple(self.rock_height_range_m)
        self.rock_radius_range_m = tuple(self.rock_radius_range_m)
        if self.size < 1:
            raise InvalidParameterError(f"Terrain size must be >= 1, got {self.size}")
        if not self.pitch_m > 0:
            raise InvalidParameterError(f"pitch_m must be positive, got {self.pitch_m}")
        if self.base_amplitude_m < 0:
            raise InvalidParameterError(f"base_amplitude_m must be >= 0, got {self.base_amplitude_m}")
        if self.base_octaves < 1:
            raise InvalidParameterError(f"base_octaves must be >= 1, got {self.base_octaves}")
        if self.crater_count < 0 or self.rock_count < 0:
            raise InvalidParameterError("crater_count and rock_count must be >= 0")
        if self.crater_depth_fraction < 0 or self.crater_rim_fraction < 0:
            raise InvalidParameterError("Crater depth and rim fractions must be >= 0")
        _check_range('crater_radius_range_m', self.crater_radius_range_m)
        _check_range('rock_height_range_m', self.rock_height_range_m)
        _check_range('rock_radius_range_m', self.rock_radius_range_m)
        if self.crater_radius_range_m[0] <= 0 or self.rock_radius_range_m[0] <= 0:
            raise InvalidParameterError("Crater and rock radii must be positive")


@dataclass
class NoiseSpec:
    """1-sigma Gaussian height noise"""

    sigma_m: float = 0.0167
    rng_seed: int = 0

    def __post_init__(self):
        if not self.sigma_m >= 0:
            raise InvalidParameterError(f"sigma_m must be >= 0, got {self.sigma_m}")


def _fractal_base(params: TerrainParams, rng: np.random.Generator) -> np.ndarray:
    n = params.size
    base = np.zeros((n, n))
    for octave in range(params.base_octaves):
        cells = 2 ** (octave + 1)
        lattice = rng.uniform(-1.0, 1.0, size=(cells + 1, cells + 1))
        amplitude = params.base_amplitude_m * 2.0 ** (-params.base_roughness_exponent * octave)
        base += amplitude * resample_bilinear(lattice, n, n)
    return base


def _stamp_crater(heights: np.ndarray, xx: np.ndarray, yy: np.ndarray,
                  cx: float, cy: float, radius: float, params: TerrainParams):
    depth = params.crater_depth_fraction * 2.0 * radius
    if depth <= 0:
        return
    # Spherical cap: z(0) = -depth, z(radius) = 0
    sphere_r = (radius ** 2 + depth ** 2) / (2.0 * depth)
    rim = params.crater_rim_fraction * depth
    r = np.hypot(xx - cx, yy - cy)
    inside = r < radius
    bowl = sphere_r - np.sqrt(np.maximum(sphere_r ** 2 - r ** 2, 0.0)) - depth
    ejecta = rim * (radius / np.maximum(r, 1e-9)) ** 3
    heights += np.where(inside, bowl + rim * (r / radius) ** 3, ejecta)


def _stamp_rock(heights: np.ndarray, xx: np.ndarray, yy: np.ndarray,
                row: int, col: int, rock_h: float, rock_r: float, pitch: float):
    d = np.hypot(xx - col * pitch, yy - row * pitch)
    heights += rock_h * np.sqrt(np.maximum(1.0 - (d / rock_r) ** 2, 0.0))


def generate_terrain(params: TerrainParams) -> DEM:
    """
    Generate a procedural DEM

    Args:
        params: Terrain parameters (fully determine the output)

    Returns:
        DEM of size params.size x params.size
    """
    rng = np.random.default_rng(params.rng_seed)
    n = params.size
    pitch = params.pitch_m
    yy, xx = np.mgrid[0:n, 0:n].astype(np.float64) * pitch

    if params.base_amplitude_m > 0:
        heights = _fractal_base(params, rng)
    else:
        heights = np.zeros((n, n))

    extent = (n - 1) * pitch
    for _ in range(params.crater_count):
        cx, cy = rng.uniform(0.0, extent, size=2)
        radius = rng.uniform(*params.crater_radius_range_m)
        _stamp_crater(heights, xx, yy, cx, cy, radius, params)

    for _ in range(params.rock_count):
        row, col = rng.integers(0, n, size=2)
        rock_h = rng.uniform(*params.rock_height_range_m)
        rock_r = rng.uniform(*params.rock_radius_range_m)
        _stamp_rock(heights, xx, yy, int(row), int(col), rock_h, rock_r, pitch)

    logger.debug(f"Generated {n}x{n} terrain (seed {params.rng_seed}, "
                 f"{params.crater_count} craters, {params.rock_count} rocks)")
    return DEM(heights.astype(np.float32), pitch)


def add_noise(dem: DEM, spec: NoiseSpec) -> DEM:
    """
    Add i.i.d. Gaussian height noise

    Args:
        dem: Clean DEM
        spec: Noise level and seed

    Returns:
        New DEM with the same shape and pitch
    """
    if spec.sigma_m == 0:
        return dem.copy()
    rng = np.random.default_rng(spec.rng_seed)
    noise = rng.normal(0.0, spec.sigma_m, size=dem.shape)
    noisy = dem.heights.astype(np.float64) + noise
    return DEM(noisy.astype(np.float32), dem.pitch_m)
