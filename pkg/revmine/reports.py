"""Plain-text, markdown and CSV tables for stats, removal reports and results.

Percentages are printed with one decimal; JSON carries full precision.
"""

from __future__ import annotations

import csv
import io
from typing import Any, Dict, List, Mapping, Optional, Sequence

from .corpus import DatasetStats
from .errors import ConfigError
from .evaluation import MODE_KEYS, MODE_TITLES, EvalReport

TABLE_FORMATS = ("text", "markdown", "csv")
REPORT_SCHEMA = "revmine-report/1"

STATS_COLUMNS = ("category", "reviews", "sents", "tokens", "types", "single", "multi", "TTR", "feats/review")
REMOVAL_COLUMNS = (
    "step", "reviews_before", "reviews_after", "reviews_removed",
    "tokens_before", "tokens_after", "spans_removed", "types_before", "types_after",
)
METRIC_COLUMNS = tuple(f"{key}_{m}" for key in MODE_KEYS for m in ("p", "r", "f1"))


def pct(value: float) -> str:
    return f"{100.0 * value:.1f}"


def render_table(headers: Sequence[str], rows: Sequence[Sequence[Any]], format: str = "text",
                 bold_rows: Sequence[int] = ()) -> str:
    """Render rows under headers; ``bold_rows`` only affects markdown."""
    if format not in TABLE_FORMATS:
        raise ConfigError(f"Unknown table format {format!r} (expected one of {', '.join(TABLE_FORMATS)})")
    cells = [[str(c) for c in row] for row in rows]
    if format == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(headers)
        writer.writerows(cells)
        return buffer.getvalue()
    if format == "markdown":
        lines = ["| " + " | ".join(headers) + " |", "|" + "|".join("---" for _ in headers) + "|"]
        for i, row in enumerate(cells):
            if i in bold_rows:
                row = [f"**{c}**" for c in row]
            lines.append("| " + " | ".join(row) + " |")
        return "\n".join(lines) + "\n"
    widths = [len(h) for h in headers]
    for row in cells:
        widths = [max(w, len(c)) for w, c in zip(widths, row)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in cells:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(line.rstrip() for line in lines) + "\n"


# ============================================================================
# DATASET STATISTICS
# ============================================================================

def _stats_row(label: str, stats: DatasetStats) -> List[Any]:
    return [
        label, stats.n_reviews, stats.n_sentences, stats.feature_tokens, stats.feature_types,
        stats.single_word, stats.multi_word, f"{stats.type_token_ratio:.2f}",
        f"{stats.features_per_review:.2f}",
    ]


def stats_table(stats: DatasetStats, per_category: bool = False, format: str = "text") -> str:
    rows = []
    if per_category:
        rows.extend(_stats_row(c, s) for c, s in sorted(stats.per_category.items()))
    rows.append(_stats_row("Total", stats))
    return render_table(STATS_COLUMNS, rows, format, bold_rows=(len(rows) - 1,) if per_category else ())


# ============================================================================
# REMOVAL REPORTS
# ============================================================================

def removal_table(reports: Sequence[Any], format: str = "text") -> str:
    """Before/after counts for each simulation step."""
    rows = [
        [
            r.step_name, r.stats_before.n_reviews, r.stats_after.n_reviews, r.reviews_removed,
            r.stats_before.feature_tokens, r.stats_after.feature_tokens, r.spans_removed,
            r.stats_before.feature_types, r.stats_after.feature_types,
        ]
        for r in reports
    ]
    return render_table(REMOVAL_COLUMNS, rows, format)


# ============================================================================
# EVALUATION RESULTS
# ============================================================================

def metric_headers(format: str) -> List[str]:
    if format == "csv":
        return list(METRIC_COLUMNS)
    return [f"{MODE_TITLES[key]} {m}" for key in MODE_KEYS for m in ("P", "R", "F1")]


def metric_cells(reports: Mapping[str, EvalReport]) -> List[str]:
    cells = []
    for key in MODE_KEYS:
        report = reports[key]
        cells.extend([pct(report.precision), pct(report.recall), pct(report.f1)])
    return cells


def result_table(per_category: Mapping[str, Mapping[str, EvalReport]],
                 average: Mapping[str, EvalReport], format: str = "text",
                 label: str = "category") -> str:
    """One row per category plus the macro Average row."""
    rows = [[category] + metric_cells(reports) for category, reports in sorted(per_category.items())]
    rows.append(["Average"] + metric_cells(average))
    return render_table([label] + metric_headers(format), rows, format, bold_rows=(len(rows) - 1,))


def summary_table(labelled: Sequence[tuple], format: str = "text", label: str = "procedure") -> str:
    """One row per (label, aggregate reports) pair."""
    rows = [[name] + metric_cells(reports) for name, reports in labelled]
    return render_table([label] + metric_headers(format), rows, format)


def report_payload(results: Sequence[Any], extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    payload: Dict[str, Any] = {"schema": REPORT_SCHEMA, "results": [r.to_dict() for r in results]}
    if extra:
        payload.update(extra)
    return payload
