"""
Report rendering: aligned text tables and machine-readable records.
"""

from typing import Dict, List, Optional

from src.evaluation.suite import MetricsReport

RECORD_HEADER = 'method,train_sigma,test_sigma,vc_frac,pa,miou,tpr,fpr,tnr,fnr'
SITE_HEADER = 'method,train_sigma,test_sigma,dems,proposed,safe,unsafe,no_site,safe_rate'


def _num(value: Optional[float], digits: int = 4) -> str:
    return 'n/a' if value is None else f"{value:.{digits}f}"


def _sigma(value: Optional[float]) -> str:
    return '--' if value is None else f"{value:g}"


def _pct(value: Optional[float]) -> str:
    return 'n/a' if value is None else f"{100.0 * value:.1f}%"


def _align(header: List[str], body: List[List[str]]) -> List[str]:
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
    lines = ['  '.join(cell.ljust(w) for cell, w in zip(header, widths)).rstrip()]
    lines.append('  '.join('-' * w for w in widths))
    for row in body:
        lines.append('  '.join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return lines


def format_table(report: MetricsReport, checks: Dict[str, bool] = None) -> str:
    """Human-readable metrics and landing-site tables"""
    header = ['Method', 'Train', 'Test', 'V/C Pix', 'PA', 'mIoU', 'TPR', 'FPR', 'TNR', 'FNR']
    body = [[r.method, _sigma(r.train_sigma), _sigma(r.test_sigma), _pct(r.vc_fraction),
             _num(r.pa), _num(r.miou), _num(r.tpr), _num(r.fpr), _num(r.tnr), _num(r.fnr)]
            for r in report.rows]
    lines = _align(header, body)

    lines.append('')
    site_header = ['Method', 'Train', 'Test', 'DEMs', 'Proposed', 'Safe', 'Unsafe', 'No site',
                   'Safe rate']
    site_body = [[s.method, _sigma(s.train_sigma), _sigma(s.test_sigma), str(s.dems),
                  str(s.proposed), str(s.safe), str(s.unsafe), str(s.no_site), _pct(s.safe_rate)]
                 for s in report.site_rows]
    lines.extend(_align(site_header, site_body))

    if checks:
        lines.append('')
        for name, passed in checks.items():
            lines.append(f"{'PASS' if passed else 'FAIL'}  {name}")
    return '\n'.join(lines) + '\n'


def format_records(report: MetricsReport) -> str:
    """One CSV record per metrics row"""
    lines = [RECORD_HEADER]
    for r in report.rows:
        lines.append(','.join([r.method, _sigma(r.train_sigma), _sigma(r.test_sigma),
                               _num(r.vc_fraction, 6), _num(r.pa, 6), _num(r.miou, 6),
                               _num(r.tpr, 6), _num(r.fpr, 6), _num(r.tnr, 6), _num(r.fnr, 6)]))
    return '\n'.join(lines) + '\n'


def format_site_records(report: MetricsReport) -> str:
    lines = [SITE_HEADER]
    for s in report.site_rows:
        lines.append(','.join([s.method, _sigma(s.train_sigma), _sigma(s.test_sigma), str(s.dems),
                               str(s.proposed), str(s.safe), str(s.unsafe), str(s.no_site),
                               _num(s.safe_rate, 6)]))
    return '\n'.join(lines) + '\n'
