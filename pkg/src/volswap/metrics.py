"""Pricing-error statistics for model quotes against market quotes, and report output.

Two formula sets are available. ``printed`` follows the published definitions
literally: ARPE = (1/N) * sum|err| / N and RMSE = sqrt(sum|err| / N), neither of
which is a relative error or a root mean square. ``standard`` uses
ARPE = (1/N) * sum(|err| / market) and RMSE = sqrt(sum(err^2) / N). APE, AAE
and RSE are shared.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

METRICS = ("APE", "AAE", "ARPE", "RMSE", "RSE")
BUCKETS = ("all", "T<=30", "30<T<=90", "T>90")


class MetricsVariant(str, Enum):
    PRINTED = "printed"
    STANDARD = "standard"


@dataclass(frozen=True)
class ErrorMetrics:
    APE: float
    AAE: float
    ARPE: float
    RMSE: float
    RSE: float
    SSE: float
    n: int
    k: int

    def as_dict(self) -> dict[str, float]:
        return {m: getattr(self, m) for m in METRICS}


def compute_errors(
    market: Sequence[float],
    model: Sequence[float],
    k: int = 0,
    variant: MetricsVariant | str = MetricsVariant.STANDARD,
) -> ErrorMetrics:
    """Error statistics of ``model`` against ``market``.

    Args:
        market: observed prices.
        model: model prices, same length.
        k: number of fitted parameters, used by RSE = sqrt(SSE / (n - k)).
        variant: ``"printed"`` or ``"standard"``.

    Raises:
        ValueError: "length mismatch", empty input, or "k ≥ n".
    """
    mk = np.asarray(market, dtype=float)
    md = np.asarray(model, dtype=float)
    if mk.shape != md.shape:
        raise ValueError(f"length mismatch: {mk.size} market vs {md.size} model prices")
    n = mk.size
    if n == 0:
        raise ValueError("need at least one price")
    if k < 0:
        raise ValueError("k must be >= 0")
    if k >= n:
        raise ValueError(f"k ≥ n ({k} >= {n})")
    variant = MetricsVariant(variant)
    err = mk - md
    abs_err = np.abs(err)
    aae = abs_err.sum() / n
    sse = float(err @ err)
    if variant is MetricsVariant.PRINTED:
        arpe = aae / n
        rmse = math.sqrt(aae)
    else:
        arpe = float(np.mean(abs_err / mk))
        rmse = math.sqrt(sse / n)
    return ErrorMetrics(
        APE=float(aae / mk.mean()),
        AAE=float(aae),
        ARPE=float(arpe),
        RMSE=float(rmse),
        RSE=math.sqrt(sse / (n - k)),
        SSE=sse,
        n=n,
        k=k,
    )


def bucket_mask(days: np.ndarray, bucket: str) -> np.ndarray:
    days = np.asarray(days)
    if bucket == "all":
        return np.ones(days.shape, dtype=bool)
    if bucket == "T<=30":
        return days <= 30
    if bucket == "30<T<=90":
        return (days > 30) & (days <= 90)
    if bucket == "T>90":
        return days > 90
    raise ValueError(f"unknown bucket {bucket!r}")


# ---------------------------------------------------------------------------
# comparisons and reports


@dataclass(frozen=True)
class Comparison:
    """Market prices and model series on a common set of maturities.

    ``series`` maps ``(model, method)`` to prices aligned with ``days``.
    """

    days: np.ndarray
    market: np.ndarray
    series: dict[tuple[str, str], np.ndarray]

    def __post_init__(self) -> None:
        for key, values in self.series.items():
            if len(values) != len(self.days):
                raise ValueError(f"length mismatch for {key[0]}:{key[1]}")
        if len(self.market) != len(self.days):
            raise ValueError("length mismatch between days and market")

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["days_to_expiry", "market"] + [f"{m}:{meth}" for m, meth in self.series])
            for i, d in enumerate(self.days):
                w.writerow([int(d), repr(float(self.market[i]))] + [repr(float(v[i])) for v in self.series.values()])

    @classmethod
    def read_csv(cls, path: str | Path) -> "Comparison":
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][:2] != ["days_to_expiry", "market"]:
            raise ValueError(f"{path}: expected header starting with days_to_expiry,market")
        keys = []
        for col in rows[0][2:]:
            model, sep, method = col.partition(":")
            if not sep:
                raise ValueError(f"{path}: series column {col!r} must look like model:method")
            keys.append((model, method))
        data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float).reshape(-1, len(rows[0]))
        return cls(data[:, 0], data[:, 1], {key: data[:, 2 + i] for i, key in enumerate(keys)})


@dataclass(frozen=True)
class ReportRow:
    model: str
    method: str
    bucket: str
    metrics: ErrorMetrics | None  # None when the bucket holds no quotes


@dataclass(frozen=True)
class ErrorReport:
    rows: list[ReportRow]
    variant: MetricsVariant
    comparison: Comparison | None = field(default=None, repr=False)

    def get(self, model: str, method: str, bucket: str) -> ErrorMetrics | None:
        for r in self.rows:
            if (r.model, r.method, r.bucket) == (model, method, bucket):
                return r.metrics
        raise KeyError((model, method, bucket))


def build_report(
    comparison: Comparison, k: int = 0, variant: MetricsVariant | str = MetricsVariant.STANDARD
) -> ErrorReport:
    """Error metrics per (model, method, maturity bucket).

    A bucket with no quotes gets ``None``; one with ``n <= k`` reports RSE as NaN.
    """
    variant = MetricsVariant(variant)
    rows = []
    for (model, method), values in comparison.series.items():
        for bucket in BUCKETS:
            mask = bucket_mask(comparison.days, bucket)
            if not mask.any():
                rows.append(ReportRow(model, method, bucket, None))
                continue
            n = int(mask.sum())
            m = compute_errors(comparison.market[mask], values[mask], min(k, n - 1), variant)
            if k >= n:
                m = ErrorMetrics(m.APE, m.AAE, m.ARPE, m.RMSE, float("nan"), m.SSE, n, k)
            rows.append(ReportRow(model, method, bucket, m))
    return ErrorReport(rows, variant, comparison)


# ---------------------------------------------------------------------------
# output


def _fmt(x: float | None) -> str:
    return "-" if x is None or math.isnan(x) else f"{x:.4f}"


def format_table(report: ErrorReport) -> str:
    """Aligned text: one block per metric, one line per series, one column per bucket."""
    labels = list(dict.fromkeys((r.model, r.method) for r in report.rows))
    names = [f"{m} ({meth})" for m, meth in labels]
    w0 = max(len("Pricing error"), max((len(n) for n in names), default=0))
    cols = [max(len(b), 10) for b in BUCKETS]
    head = "  ".join([f"{'Pricing error':<{w0}}"] + [f"{b:>{w}}" for b, w in zip(BUCKETS, cols)])
    lines = [f"variant: {report.variant.value}", head, "-" * len(head)]
    for metric in METRICS:
        lines.append(metric)
        for (model, method), name in zip(labels, names):
            vals = []
            for b, w in zip(BUCKETS, cols):
                m = report.get(model, method, b)
                vals.append(f"{_fmt(getattr(m, metric) if m else None):>{w}}")
            lines.append("  ".join([f"{name:<{w0}}"] + vals))
    return "\n".join(lines) + "\n"


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def render_svg(comparison: Comparison, width: int = 720, height: int = 420) -> str:
    """Price against days to expiry: one polyline for the market and one per series."""
    left, right, top, bottom = 60, 170, 20, 50
    x = np.asarray(comparison.days, dtype=float)
    ys = [np.asarray(comparison.market, dtype=float)] + [np.asarray(v, dtype=float) for v in comparison.series.values()]
    labels = ["market"] + [f"{m} ({meth})" for m, meth in comparison.series]
    xmin, xmax = float(x.min()), float(x.max())
    ymin = min(float(y.min()) for y in ys)
    ymax = max(float(y.max()) for y in ys)
    xspan = xmax - xmin or 1.0
    yspan = ymax - ymin or 1.0
    pw, ph = width - left - right, height - top - bottom

    def px(v: float) -> float:
        return left + (v - xmin) / xspan * pw

    def py(v: float) -> float:
        return top + (ymax - v) / yspan * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
        f'<text x="{left + pw / 2}" y="{height - 12}" text-anchor="middle" font-size="12">days to expiry</text>',
        f'<text x="14" y="{top + ph / 2}" font-size="12" transform="rotate(-90 14 {top + ph / 2})"'
        ' text-anchor="middle">price</text>',
    ]
    for v in (xmin, xmax):
        out.append(f'<text x="{px(v):.1f}" y="{top + ph + 16}" text-anchor="middle" font-size="10">{v:g}</text>')
    for v in (ymin, ymax):
        out.append(f'<text x="{left - 6}" y="{py(v) + 3:.1f}" text-anchor="end" font-size="10">{v:.2f}</text>')
    order = np.argsort(x, kind="stable")
    for i, (y, label) in enumerate(zip(ys, labels)):
        color = "black" if i == 0 else _COLORS[(i - 1) % len(_COLORS)]
        pts = " ".join(f"{px(x[j]):.2f},{py(y[j]):.2f}" for j in order)
        dash = "" if i == 0 else ' stroke-dasharray="6 3"'
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{pts}"/>')
        ly = top + 14 + 16 * i
        out.append(f'<text x="{left + pw + 12}" y="{ly}" font-size="11" fill="{color}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_report(report: ErrorReport, fmt: str, path: str | Path | None = None) -> str:
    """Render ``report`` as ``table``, ``csv`` or ``svg`` and optionally write it.

    Returns:
        The rendered text.
    """
    if not report.rows:
        raise ValueError("empty report")
    if fmt == "table":
        text = format_table(report)
    elif fmt == "csv":
        buf = io.StringIO()
        _write_rows(report, buf)
        text = buf.getvalue()
    elif fmt == "svg":
        if report.comparison is None:
            raise ValueError("svg output needs the price comparison")
        text = render_svg(report.comparison)
    else:
        raise ValueError(f"unknown format {fmt!r}; expected table, csv or svg")
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def _write_rows(report: ErrorReport, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["model", "method", "bucket", *METRICS, "SSE", "n", "k"])
    for r in report.rows:
        m = r.metrics
        if m is None:
            w.writerow([r.model, r.method, r.bucket, *([""] * len(METRICS)), "", 0, ""])
        else:
            w.writerow([r.model, r.method, r.bucket, *(repr(getattr(m, x)) for x in METRICS), repr(m.SSE), m.n, m.k])


__all__ = [
    "BUCKETS",
    "Comparison",
    "ErrorMetrics",
    "ErrorReport",
    "METRICS",
    "MetricsVariant",
    "ReportRow",
    "bucket_mask",
    "build_report",
    "compute_errors",
    "emit_report",
    "format_table",
    "render_svg",
]
