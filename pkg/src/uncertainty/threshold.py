"""
Global uncertainty threshold: calibration on a validation set and
application to predicted safety maps.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from src.core.errors import CalibrationError, InvalidParameterError, MalformedHeaderError
from src.hazard.maps import Label, SafetyMap, require_same_shape
from src.terrain.dem_io import PathLike, atomic_write_bytes
from src.uncertainty.entropy import LN2, UncertaintyMap

logger = logging.getLogger(__name__)


@dataclass
class UncertaintyThreshold:
    """Entropy cutoff in nats and the validation set it came from"""

    value: float
    provenance: str = ''

    def __post_init__(self):
        self.value = float(self.value)
        if not 0.0 <= self.value <= LN2:
            raise InvalidParameterError(f"Threshold must lie in [0, ln 2], got {self.value}")


def calibrate_threshold(validation_maps: Sequence[UncertaintyMap],
                        validity: Optional[Sequence[SafetyMap]] = None,
                        provenance: str = '') -> UncertaintyThreshold:
    """
    Mean entropy pooled over every validation pixel

    Args:
        validation_maps: Entropy maps of the validation set
        validity: Ground-truth label maps; their Invalid pixels leave the pool
        provenance: Identifier of the validation set

    Returns:
        UncertaintyThreshold
    """
    if validity is not None and len(validity) != len(validation_maps):
        raise InvalidParameterError("validity must pair one label map with each entropy map")
    total = 0.0
    count = 0
    for index, umap in enumerate(validation_maps):
        values = umap.entropy
        if validity is not None:
            require_same_shape(umap, validity[index], 'entropy map and label map')
            values = values[validity[index].labels != Label.INVALID]
        total += float(np.sum(values, dtype=np.float64))
        count += int(values.size)
    if count == 0:
        raise CalibrationError("No valid validation pixels to calibrate on")
    value = min(max(total / count, 0.0), LN2)
    logger.info(f"Calibrated uncertainty threshold {value:.6f} nats over {count} pixels ({provenance})")
    return UncertaintyThreshold(value, provenance)


def apply_threshold(pred: SafetyMap, unc: UncertaintyMap, t: UncertaintyThreshold) -> SafetyMap:
    """Mark pixels Invalid where entropy > threshold; others keep their label"""
    require_same_shape(pred, unc, 'prediction and uncertainty map')
    labels = pred.labels.copy()
    labels[unc.entropy > t.value] = int(Label.INVALID)
    return SafetyMap(labels)


def write_threshold(t: UncertaintyThreshold, path: PathLike):
    text = f"threshold_nats={t.value!r}\nvalidation_set={t.provenance}\n"
    atomic_write_bytes(path, text.encode('utf-8'))


def read_threshold(path: PathLike) -> UncertaintyThreshold:
    fields = {}
    with open(path, 'r') as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            key, sep, value = line.partition('=')
            if not sep:
                raise MalformedHeaderError(f"{path}: expected key=value, got {line!r}")
            fields[key.strip()] = value.strip()
    if 'threshold_nats' not in fields:
        raise MalformedHeaderError(f"{path}: missing threshold_nats")
    return UncertaintyThreshold(float(fields['threshold_nats']), fields.get('validation_set', ''))
