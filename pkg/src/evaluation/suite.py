"""
Evaluation suite: per (method, noise level) metrics and landing-site safety,
seed averaging, and the qualitative ordering checks.
"""

import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from src.core.errors import InvalidParameterError
from src.evaluation.metrics import (ConfusionCounts, accumulate, mean_iou, pixel_accuracy,
                                    rates, valid_certain_fraction)
from src.hazard.maps import Label, SafetyMap
from src.site_selection.selector import propose_site
from src.terrain.dem import DEM

logger = logging.getLogger(__name__)

BASELINE = 'baseline'
BASE_NET = 'base_net'
UNCERTAINTY_AWARE = 'uncertainty_aware'


@dataclass
class EvalItem:
    """One test DEM (already noised) and its clean-DEM ground truth"""
    key: str
    dem: DEM
    truth: SafetyMap


@dataclass
class EvalSet:
    train_sigma: Optional[float]
    test_sigma: float
    items: List[EvalItem]


@dataclass
class EvalMethod:
    """
    A predictor under evaluation

    Args:
        name: Report label
        predict: Maps (item, test set) to a SafetyMap aligned with item.truth
        trained: False for methods with no training noise level (the oracle baseline)
    """
    name: str
    predict: Callable[[EvalItem, EvalSet], SafetyMap]
    trained: bool = True


@dataclass
class MetricsRow:
    method: str
    train_sigma: Optional[float]
    test_sigma: float
    counts: ConfusionCounts
    vc_fraction: Optional[float]
    pa: Optional[float]
    miou: Optional[float]
    tpr: Optional[float]
    fpr: Optional[float]
    tnr: Optional[float]
    fnr: Optional[float]

    @classmethod
    def from_counts(cls, method: str, train_sigma: Optional[float], test_sigma: float,
                    counts: ConfusionCounts) -> 'MetricsRow':
        r = rates(counts)
        return cls(method, train_sigma, test_sigma, counts, valid_certain_fraction(counts),
                   pixel_accuracy(counts), mean_iou(counts), r.tpr, r.fpr, r.tnr, r.fnr)


@dataclass
class SiteRow:
    """Landing-site outcome counts for one (method, noise level)"""
    method: str
    train_sigma: Optional[float]
    test_sigma: float
    dems: int = 0
    proposed: int = 0
    safe: int = 0
    unsafe: int = 0
    no_site: int = 0

    @property
    def safe_rate(self) -> Optional[float]:
        """Share of proposed sites that are safe under ground truth"""
        return self.safe / self.proposed if self.proposed else None

    def share(self, value: int) -> Optional[float]:
        return value / self.dems if self.dems else None


@dataclass
class MetricsReport:
    rows: List[MetricsRow] = field(default_factory=list)
    site_rows: List[SiteRow] = field(default_factory=list)

    def row(self, method: str, test_sigma: float) -> Optional[MetricsRow]:
        for r in self.rows:
            if r.method == method and r.test_sigma == test_sigma:
                return r
        return None

    def site_row(self, method: str, test_sigma: float) -> Optional[SiteRow]:
        for r in self.site_rows:
            if r.method == method and r.test_sigma == test_sigma:
                return r
        return None


def evaluate_suite(methods: Sequence[EvalMethod], datasets: Sequence[EvalSet]) -> MetricsReport:
    """
    Score every method on every test set

    Args:
        methods: Predictors to compare
        datasets: One test set per noise level

    Returns:
        MetricsReport with one metrics row and one site row per (method, test set)
    """
    if not datasets or any(not ds.items for ds in datasets):
        raise InvalidParameterError("Evaluation needs at least one non-empty test set")
    report = MetricsReport()
    for method in methods:
        for ds in datasets:
            train_sigma = ds.train_sigma if method.trained else None
            counts = ConfusionCounts()
            sites = SiteRow(method.name, train_sigma, ds.test_sigma)
            for item in ds.items:
                pred = method.predict(item, ds)
                counts = accumulate(pred, item.truth, counts)
                sites.dems += 1
                site = propose_site(pred)
                if site is None:
                    sites.no_site += 1
                elif item.truth.labels[site.row, site.col] == Label.SAFE:
                    sites.proposed += 1
                    sites.safe += 1
                else:
                    sites.proposed += 1
                    sites.unsafe += 1
            row = MetricsRow.from_counts(method.name, train_sigma, ds.test_sigma, counts)
            report.rows.append(row)
            report.site_rows.append(sites)
            logger.info(f"{method.name} @ sigma {ds.test_sigma}: PA {row.pa}, mIoU {row.miou}, "
                        f"V/C {row.vc_fraction}, sites {sites.safe}/{sites.proposed} safe")
    return report


def _mean(values) -> Optional[float]:
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def average_reports(reports: Sequence[MetricsReport]) -> MetricsReport:
    """
    Average metric rows over repeated runs (e.g. seeds)

    Rates are averaged per run, undefined values skipped; counts and site
    tallies are summed.
    """
    grouped: Dict[tuple, List[MetricsRow]] = OrderedDict()
    for report in reports:
        for row in report.rows:
            grouped.setdefault((row.method, row.train_sigma, row.test_sigma), []).append(row)
    averaged = MetricsReport()
    for (method, train_sigma, test_sigma), rows in grouped.items():
        counts = ConfusionCounts()
        for row in rows:
            counts = counts + row.counts
        averaged.rows.append(MetricsRow(
            method, train_sigma, test_sigma, counts,
            vc_fraction=_mean(r.vc_fraction for r in rows),
            pa=_mean(r.pa for r in rows),
            miou=_mean(r.miou for r in rows),
            tpr=_mean(r.tpr for r in rows),
            fpr=_mean(r.fpr for r in rows),
            tnr=_mean(r.tnr for r in rows),
            fnr=_mean(r.fnr for r in rows),
        ))

    site_groups: Dict[tuple, SiteRow] = OrderedDict()
    for report in reports:
        for s in report.site_rows:
            key = (s.method, s.train_sigma, s.test_sigma)
            total = site_groups.setdefault(key, SiteRow(*key))
            total.dems += s.dems
            total.proposed += s.proposed
            total.safe += s.safe
            total.unsafe += s.unsafe
            total.no_site += s.no_site
    averaged.site_rows = list(site_groups.values())
    return averaged


def ordering_checks(report: MetricsReport, vc_slack: float = 0.05,
                    min_safe_rate: float = 0.8) -> Dict[str, bool]:
    """
    Qualitative orderings expected from the comparison

    - uncertainty-aware PA beats base-net PA at every noise level
    - baseline TPR at the highest noise is below its TPR at the lowest noise
    - uncertainty-aware valid/certain fraction does not grow with noise (within slack)
    - proposed uncertainty-aware sites are safe at least min_safe_rate of the time
    """
    sigmas = sorted({r.test_sigma for r in report.rows})
    checks: Dict[str, bool] = {}

    def pa(method, sigma):
        row = report.row(method, sigma)
        return row.pa if row is not None else None

    pairs = [(pa(UNCERTAINTY_AWARE, s), pa(BASE_NET, s)) for s in sigmas]
    checks['uncertainty_aware_pa_above_base_net'] = bool(pairs) and all(
        a is not None and b is not None and a > b for a, b in pairs)

    low = report.row(BASELINE, sigmas[0]) if sigmas else None
    high = report.row(BASELINE, sigmas[-1]) if sigmas else None
    checks['baseline_tpr_degrades_with_noise'] = (
        low is not None and high is not None and low.tpr is not None and high.tpr is not None
        and len(sigmas) > 1 and high.tpr < low.tpr)

    fractions = [report.row(UNCERTAINTY_AWARE, s) for s in sigmas]
    fractions = [r.vc_fraction for r in fractions if r is not None and r.vc_fraction is not None]
    checks['valid_fraction_non_increasing'] = len(fractions) == len(sigmas) and all(
        later <= earlier + vc_slack for earlier, later in zip(fractions, fractions[1:]))

    proposed = sum(s.proposed for s in report.site_rows if s.method == UNCERTAINTY_AWARE)
    safe = sum(s.safe for s in report.site_rows if s.method == UNCERTAINTY_AWARE)
    checks['site_safe_rate'] = proposed > 0 and safe / proposed >= min_safe_rate
    return checks
