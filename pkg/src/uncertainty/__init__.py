"""
Uncertainty package: predictive entropy and the global uncertainty threshold.
"""

from src.uncertainty.entropy import (LN2, UncertaintyMap, predictive_entropy,
                                     read_uncertainty_map, write_uncertainty_map)
from src.uncertainty.threshold import (UncertaintyThreshold, apply_threshold, calibrate_threshold,
                                       read_threshold, write_threshold)

__all__ = [
    'LN2', 'UncertaintyMap', 'predictive_entropy', 'read_uncertainty_map', 'write_uncertainty_map',
    'UncertaintyThreshold', 'apply_threshold', 'calibrate_threshold', 'read_threshold',
    'write_threshold',
]
