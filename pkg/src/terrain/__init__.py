"""
Terrain package: DEM container, procedural generation, noise, grid file I/O.
"""

from src.terrain.dem import DEM, resample_bilinear, resample_nearest
from src.terrain.generator import NoiseSpec, TerrainParams, add_noise, generate_terrain
from src.terrain.dem_io import read_dem, write_dem

__all__ = [
    'DEM', 'resample_bilinear', 'resample_nearest',
    'NoiseSpec', 'TerrainParams', 'add_noise', 'generate_terrain',
    'read_dem', 'write_dem',
]
