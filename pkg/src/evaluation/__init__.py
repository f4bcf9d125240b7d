"""
Evaluation package: confusion counts, segmentation metrics, suite and reports.
"""

from src.evaluation.metrics import (ConfusionCounts, Rates, accumulate, mean_iou, merge_counts,
                                    pixel_accuracy, rates, valid_certain_fraction)
from src.evaluation.suite import (BASE_NET, BASELINE, UNCERTAINTY_AWARE, EvalItem, EvalMethod,
                                  EvalSet, MetricsReport, MetricsRow, SiteRow, average_reports,
                                  evaluate_suite, ordering_checks)
from src.evaluation.report import format_records, format_site_records, format_table

__all__ = [
    'ConfusionCounts', 'Rates', 'accumulate', 'mean_iou', 'merge_counts', 'pixel_accuracy',
    'rates', 'valid_certain_fraction',
    'BASE_NET', 'BASELINE', 'UNCERTAINTY_AWARE', 'EvalItem', 'EvalMethod', 'EvalSet',
    'MetricsReport', 'MetricsRow', 'SiteRow', 'average_reports', 'evaluate_suite',
    'ordering_checks',
    'format_records', 'format_site_records', 'format_table',
]
