"""
Confusion counts and segmentation metrics (Safe is the positive class).
Invalid pixels in either map are masked out, never scored as a class.
Undefined rates (zero denominators) are returned as None.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from src.hazard.maps import Label, SafetyMap, require_same_shape


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0
    evaluated_pixels: int = 0
    total_pixels: int = 0
    truth_valid_pixels: int = 0

    def __add__(self, other: 'ConfusionCounts') -> 'ConfusionCounts':
        return merge_counts(self, other)


class Rates(NamedTuple):
    tpr: Optional[float]
    fpr: Optional[float]
    tnr: Optional[float]
    fnr: Optional[float]


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den else None


def merge_counts(a: ConfusionCounts, b: ConfusionCounts) -> ConfusionCounts:
    """Sum two disjoint accumulations"""
    return ConfusionCounts(
        tp=a.tp + b.tp, fp=a.fp + b.fp, tn=a.tn + b.tn, fn=a.fn + b.fn,
        evaluated_pixels=a.evaluated_pixels + b.evaluated_pixels,
        total_pixels=a.total_pixels + b.total_pixels,
        truth_valid_pixels=a.truth_valid_pixels + b.truth_valid_pixels,
    )


def accumulate(pred: SafetyMap, truth: SafetyMap, counts: ConfusionCounts = None) -> ConfusionCounts:
    """
    Add one prediction/ground-truth pair to the running counts

    Args:
        pred: Predicted labels
        truth: Ground-truth labels
        counts: Running totals (zero when omitted)

    Returns:
        Updated counts
    """
    require_same_shape(pred, truth, 'prediction and ground truth')
    counts = counts or ConfusionCounts()
    truth_valid = truth.labels != Label.INVALID
    valid = truth_valid & (pred.labels != Label.INVALID)
    pred_safe = pred.labels == Label.SAFE
    truth_safe = truth.labels == Label.SAFE
    update = ConfusionCounts(
        tp=int(np.count_nonzero(valid & pred_safe & truth_safe)),
        fp=int(np.count_nonzero(valid & pred_safe & ~truth_safe)),
        tn=int(np.count_nonzero(valid & ~pred_safe & ~truth_safe)),
        fn=int(np.count_nonzero(valid & ~pred_safe & truth_safe)),
        evaluated_pixels=int(np.count_nonzero(valid)),
        total_pixels=int(truth.labels.size),
        truth_valid_pixels=int(np.count_nonzero(truth_valid)),
    )
    return merge_counts(counts, update)


def rates(counts: ConfusionCounts) -> Rates:
    """TPR, FPR, TNR, FNR"""
    positives = counts.tp + counts.fn
    negatives = counts.fp + counts.tn
    return Rates(
        tpr=_ratio(counts.tp, positives),
        fpr=_ratio(counts.fp, negatives),
        tnr=_ratio(counts.tn, negatives),
        fnr=_ratio(counts.fn, positives),
    )


def pixel_accuracy(counts: ConfusionCounts) -> Optional[float]:
    return _ratio(counts.tp + counts.tn, counts.evaluated_pixels)


def mean_iou(counts: ConfusionCounts) -> Optional[float]:
    """Mean of per-class IoU over the classes present in prediction or truth"""
    ious = []
    safe_union = counts.tp + counts.fp + counts.fn
    unsafe_union = counts.tn + counts.fn + counts.fp
    if safe_union:
        ious.append(counts.tp / safe_union)
    if unsafe_union:
        ious.append(counts.tn / unsafe_union)
    if not ious:
        return None
    return sum(ious) / len(ious)


def valid_certain_fraction(counts: ConfusionCounts) -> Optional[float]:
    """Share of ground-truth-valid pixels the prediction kept"""
    return _ratio(counts.evaluated_pixels, counts.truth_valid_pixels)
