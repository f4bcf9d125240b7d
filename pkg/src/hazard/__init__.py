"""
Hazard package: safety/probability maps and the geometric hazard oracle.
"""

from src.hazard.maps import (Label, ProbabilityMap, SafetyMap, border_mask,
                             read_probability_map, read_safety_map,
                             write_probability_map, write_safety_map)
from src.hazard.oracle import (LanderGeometry, OracleConfig, evaluate_pose, label_dem,
                               pose_offsets, safety_probability, sample_height, yaw_angles)

__all__ = [
    'Label', 'ProbabilityMap', 'SafetyMap', 'border_mask',
    'read_probability_map', 'read_safety_map', 'write_probability_map', 'write_safety_map',
    'LanderGeometry', 'OracleConfig', 'evaluate_pose', 'label_dem',
    'pose_offsets', 'safety_probability', 'sample_height', 'yaw_angles',
]
