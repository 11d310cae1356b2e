"""
Report rendering for FairForge.

This module ranks runs per metric and renders report bundles and pruning
sweep grids as Markdown, JSON or CSV.

Markdown and CSV show values with a fixed number of decimals (4 by
default); JSON carries full precision and a schema_version field.
"""
import csv
import io
import json
import logging
from typing import Dict, Iterable, List, Optional

from core.errors import FairForgeError
from models import (
    FAIRNESS_KEYS, FairnessReport, METRIC_GROUPS, ReportBundle, SweepGrid, SweepRow, UTILITY_KEYS,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FORMATS = ("markdown", "json", "csv")

DISPLAY_NAMES = {
    "dpd": "DPD", "deodds": "DEOdds", "deo": "DEO", "std": "STD",
    "aadpd": "AADPD", "aadeodds": "AADEOdds", "aadeo": "AADEO", "aastd": "AASTD",
    "urdpd": "URDPD", "urdeodds": "URDEOdds", "urdeo": "URDEO", "urstd": "URSTD",
    "auc": "AUC", "acc": "ACC",
}

GROUP_TITLES = {
    "naive": "Naive",
    "approach_averaged": "Approach-Averaged",
    "utility_regularized": "Utility-Regularized",
    "utility": "Utility",
}

# Markdown table rows: 12 fairness metrics then AUC
MARKDOWN_ROWS = [
    (group, key) for group, keys in METRIC_GROUPS for key in keys if key != "acc"
]


def rank(bundle: ReportBundle) -> Dict[str, List[str]]:
    """
    Order run names per metric.

    Fairness metrics rank ascending (lower is fairer), utility metrics
    descending; equal values fall back to name order.
    """
    rankings = {}
    names = sorted(bundle.reports)
    for key in FAIRNESS_KEYS + UTILITY_KEYS:
        sign = -1.0 if key in UTILITY_KEYS else 1.0
        rankings[key] = sorted(names, key=lambda name: (sign * bundle.reports[name].metric(key), name))
    return rankings


def make_bundle(reports: Dict[str, FairnessReport]) -> ReportBundle:
    """Bundle named reports and compute their rankings."""
    bundle = ReportBundle(reports=dict(reports))
    bundle.rankings = rank(bundle)
    return bundle


def merge_bundles(bundles: Iterable[ReportBundle]) -> ReportBundle:
    """
    Combine several bundles into one with fresh rankings.

    Raises:
        FairForgeError: If two bundles contain the same run name
    """
    merged: Dict[str, FairnessReport] = {}
    for bundle in bundles:
        for name, report in bundle.reports.items():
            if name in merged:
                raise FairForgeError(f"run '{name}' appears in more than one bundle")
            merged[name] = report
    return make_bundle(merged)


def _fmt(value: Optional[float], decimals: int) -> str:
    return "-" if value is None else f"{value:.{decimals}f}"


def _render_markdown(bundle: ReportBundle, decimals: int, breakdown: bool) -> str:
    names = list(bundle.reports)
    lines = [
        "| Family | Metric | " + " | ".join(names) + " |",
        "|---|---|" + "---:|" * len(names),
    ]
    previous_group = None
    for group, key in MARKDOWN_ROWS:
        title = GROUP_TITLES[group] if group != previous_group else ""
        previous_group = group
        values = [_fmt(bundle.reports[name].metric(key), decimals) for name in names]
        lines.append(f"| {title} | {DISPLAY_NAMES[key]} | " + " | ".join(values) + " |")

    if breakdown:
        for name in names:
            report = bundle.reports[name]
            lines.extend(["", f"### {name}", "", f"Threshold: {_threshold_text(report, decimals)}", ""])
            lines.append("| Race | ACC | TPR | TNR | P(fake) |")
            lines.append("|---|---:|---:|---:|---:|")
            for race, stats in report.per_race.items():
                cells = [_fmt(stats.get(k), decimals) for k in ("acc", "tpr", "tnr", "positive_rate")]
                lines.append(f"| {race} | " + " | ".join(cells) + " |")
            lines.append(f"\nPooled AccGap: {_fmt(report.pooled_acc_gap, decimals)}")
    return "\n".join(lines) + "\n"


def _threshold_text(report: FairnessReport, decimals: int) -> str:
    if isinstance(report.threshold_used, dict):
        return ", ".join(f"{race} {t:.{decimals}f}" for race, t in report.threshold_used.items())
    return f"{report.threshold_used:.{decimals}f}"


def _render_json(bundle: ReportBundle) -> str:
    data = {
        "schema_version": SCHEMA_VERSION,
        "reports": {name: report.to_dict() for name, report in bundle.reports.items()},
        "rankings": bundle.rankings,
    }
    return json.dumps(data, indent=2) + "\n"


def _render_csv(bundle: ReportBundle, decimals: int) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["run"] + list(FAIRNESS_KEYS) + list(UTILITY_KEYS))
    for name, report in bundle.reports.items():
        writer.writerow([name] + [_fmt(report.metric(key), decimals) for key in FAIRNESS_KEYS + UTILITY_KEYS])
    return buffer.getvalue()


def render(bundle: ReportBundle, fmt: str = "markdown", decimals: int = 4, breakdown: bool = False) -> str:
    """
    Render a report bundle.

    Args:
        bundle: Named runs
        fmt: "markdown", "json" or "csv"
        decimals: Digits shown in markdown and CSV
        breakdown: Append per-race tables to markdown output

    Returns:
        Rendered text ending in a newline

    Raises:
        FairForgeError: For an empty bundle
        ValueError: For an unknown format
    """
    if len(bundle) == 0:
        raise FairForgeError("nothing to render: report bundle is empty")
    if not bundle.rankings:
        bundle.rankings = rank(bundle)

    if fmt == "markdown":
        return _render_markdown(bundle, decimals, breakdown)
    if fmt == "json":
        return _render_json(bundle)
    if fmt == "csv":
        return _render_csv(bundle, decimals)
    raise ValueError(f"Unknown format '{fmt}'. Available: {', '.join(FORMATS)}")


def parse_bundle(text: str) -> ReportBundle:
    """
    Parse a JSON-rendered bundle.

    Raises:
        FairForgeError: For an unsupported schema version or a malformed bundle
    """
    data = json.loads(text)
    if not isinstance(data, dict) or data.get("schema_version") != SCHEMA_VERSION:
        raise FairForgeError(f"unsupported report schema version: {data.get('schema_version') if isinstance(data, dict) else None!r}")
    try:
        reports = {name: FairnessReport.from_dict(entry) for name, entry in data["reports"].items()}
    except (KeyError, TypeError, AttributeError) as e:
        raise FairForgeError(f"malformed report bundle: {e}")
    return ReportBundle(reports=reports, rankings={k: list(v) for k, v in data.get("rankings", {}).items()})


# --- Sweep grids -----------------------------------------------------------

SWEEP_COLUMNS = ["method", "rate"] + list(FAIRNESS_KEYS) + ["auc", "acc", "fairness_mean"]


def _sweep_rows(grid: SweepGrid) -> List[SweepRow]:
    """Baseline first; rate-0 rows repeat the baseline and are left out."""
    return [grid.baseline] + [row for row in grid.rows if row.rate > 0.0]


def _sweep_values(row: SweepRow) -> Dict[str, Optional[float]]:
    """Column -> value; metrics of unusable rows are None, AUC is always kept."""
    values: Dict[str, Optional[float]] = {key: None for key in FAIRNESS_KEYS}
    values.update({"auc": row.auc, "acc": None, "fairness_mean": None})
    if row.usable and row.report is not None:
        values.update({key: row.report.metric(key) for key in FAIRNESS_KEYS})
        values["acc"] = row.acc
        values["fairness_mean"] = row.fairness_mean
    return values


def render_sweep(grid: SweepGrid, fmt: str = "csv", decimals: int = 4) -> str:
    """
    Render a pruning sweep grid, one row per (method, rate).

    Unusable rows show "-" (null in JSON) for everything but AUC.
    """
    rows = _sweep_rows(grid)

    if fmt == "json":
        data = {
            "schema_version": SCHEMA_VERSION,
            "rows": [
                {"method": row.method, "rate": row.rate, "usable": row.usable,
                 "pruned": {str(k): v for k, v in row.pruned.items()}, **_sweep_values(row)}
                for row in rows
            ],
        }
        return json.dumps(data, indent=2) + "\n"

    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            values = _sweep_values(row)
            writer.writerow([row.method, f"{row.rate:g}"] + [_fmt(values[k], decimals) for k in SWEEP_COLUMNS[2:]])
        return buffer.getvalue()

    if fmt == "markdown":
        header = ["Method", "Rate"] + [DISPLAY_NAMES[k] for k in FAIRNESS_KEYS] + ["AUC", "ACC", "Mean"]
        lines = ["| " + " | ".join(header) + " |", "|---|---:|" + "---:|" * (len(header) - 2)]
        for row in rows:
            values = _sweep_values(row)
            cells = [row.method, f"{row.rate:g}"] + [_fmt(values[k], decimals) for k in SWEEP_COLUMNS[2:]]
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"

    raise ValueError(f"Unknown format '{fmt}'. Available: {', '.join(FORMATS)}")
