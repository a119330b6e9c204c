import csv
import io
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from volswap.metrics import (
    BUCKETS,
    METRICS,
    Comparison,
    ErrorReport,
    MetricsVariant,
    ReportRow,
    bucket_mask,
    build_report,
    compute_errors,
    emit_report,
    render_svg,
)

SVG = "{http://www.w3.org/2000/svg}"
DAYS = np.array([5, 33, 68, 96, 124])
MARKET = np.array([12.1, 14.2, 15.9, 16.8, 17.5])


def _comparison(days=DAYS, market=MARKET):
    return Comparison(
        np.asarray(days, dtype=float),
        np.asarray(market, dtype=float),
        {("heston", "convexity"): market + 1.0, ("bates", "laplace"): market - 0.5},
    )


@pytest.mark.parametrize("variant", list(MetricsVariant))
def test_perfect_fit_is_zero(variant):
    m = compute_errors([10, 10], [10, 10], variant=variant)
    assert all(v == 0.0 for v in m.as_dict().values()) and m.SSE == 0.0


def test_standard_hand_example():
    m = compute_errors([10, 20], [11, 18], 0, "standard")
    assert m.AAE == 1.5 and m.APE == 0.1
    assert m.ARPE == pytest.approx(0.1, rel=1e-15)
    assert m.RMSE == pytest.approx(math.sqrt(2.5), rel=1e-15)
    assert m.RSE == pytest.approx(math.sqrt(2.5), rel=1e-15)


def test_printed_hand_example():
    m = compute_errors([10, 20], [11, 18], 0, MetricsVariant.PRINTED)
    assert (m.AAE, m.APE, m.ARPE) == (1.5, 0.1, 0.75)
    assert m.RMSE == pytest.approx(1.2247, abs=1e-4)
    assert m.RSE == pytest.approx(math.sqrt(5 / 2))


def test_rse_uses_parameter_count():
    m = compute_errors([10, 20, 30], [11, 18, 30], k=1)
    assert m.RSE == pytest.approx(math.sqrt(5 / 2)) and m.k == 1 and m.n == 3


prices = st.lists(st.floats(1.0, 100.0), min_size=1, max_size=20)


@given(prices, st.floats(-5.0, 5.0))
def test_variants_agree_on_aae(market, shift):
    model = [p + shift for p in market]
    a = compute_errors(market, model, variant="printed")
    b = compute_errors(market, model, variant="standard")
    assert a.AAE == b.AAE and a.APE == b.APE and a.RSE == b.RSE
    assert all(v >= 0.0 for v in (*a.as_dict().values(), *b.as_dict().values()))


@pytest.mark.parametrize(
    "args, message",
    [(([1, 2], [1]), "length mismatch"), (([1, 2], [1, 2], 2), "k ≥ n"), (([], []), "at least one"), (([1], [1], -1), "k")],
)
def test_errors(args, message):
    with pytest.raises(ValueError, match=message):
        compute_errors(*args)


def test_bucket_boundaries():
    days = np.array([0, 30, 31, 90, 91])
    assert bucket_mask(days, "T<=30").tolist() == [True, True, False, False, False]
    assert bucket_mask(days, "30<T<=90").tolist() == [False, False, True, True, False]
    assert bucket_mask(days, "T>90").tolist() == [False, False, False, False, True]
    assert bucket_mask(days, "all").all()
    with pytest.raises(ValueError):
        bucket_mask(days, "T>365")


def test_report_buckets_and_empty_bucket():
    comp = _comparison(days=[5, 20, 60], market=np.array([12.0, 13.0, 15.0]))
    report = build_report(comp)
    assert len(report.rows) == 2 * len(BUCKETS)
    assert report.get("heston", "convexity", "T>90") is None
    assert report.get("heston", "convexity", "T<=30").n == 2
    assert report.get("bates", "laplace", "all").AAE == pytest.approx(0.5)
    with pytest.raises(KeyError):
        report.get("merton", "analytic", "all")


def test_report_single_quote_bucket_has_nan_rse():
    report = build_report(_comparison(), k=1)
    m = report.get("heston", "convexity", "T<=30")
    assert m.n == 1 and math.isnan(m.RSE) and m.AAE == pytest.approx(1.0)


def test_csv_one_row():
    row = ReportRow("heston", "laplace", "all", compute_errors([12.1], [12.6]))
    report = ErrorReport([row], MetricsVariant.STANDARD)
    rows = list(csv.reader(io.StringIO(emit_report(report, "csv"))))
    assert rows[0] == ["model", "method", "bucket", *METRICS, "SSE", "n", "k"]
    assert len(rows) == 2 and rows[1][:3] == ["heston", "laplace", "all"]
    assert float(rows[1][3 + METRICS.index("AAE")]) == pytest.approx(0.5)


def test_csv_marks_empty_bucket():
    text = emit_report(build_report(_comparison(days=[5, 20, 60, 70, 80])), "csv")
    rows = {(r["model"], r["bucket"]): r for r in csv.DictReader(io.StringIO(text))}
    assert rows[("heston", "T>90")]["AAE"] == "" and rows[("heston", "T>90")]["n"] == "0"


def test_svg_has_one_polyline_per_series():
    text = emit_report(build_report(_comparison()), "svg")
    root = ET.fromstring(text)
    lines = root.findall(f"{SVG}polyline")
    assert len(lines) == 3
    assert all(len(p.get("points").split()) == len(DAYS) for p in lines)


def test_svg_constant_prices():
    comp = Comparison(np.array([30.0]), np.array([15.0]), {("a", "b"): np.array([15.0])})
    assert len(ET.fromstring(render_svg(comp)).findall(f"{SVG}polyline")) == 2


def test_table_layout():
    text = emit_report(build_report(_comparison(), variant="printed"), "table")
    lines = text.splitlines()
    assert lines[0] == "variant: printed"
    assert all(b in lines[1] for b in BUCKETS)
    blocks = [i for i, line in enumerate(lines) if line in METRICS]
    assert [lines[i] for i in blocks] == list(METRICS)
    # two series per block, four bucket columns each
    for i in blocks:
        for row in lines[i + 1:i + 3]:
            assert len(row.split()) - 2 == len(BUCKETS)


def test_emit_writes_file(tmp_path):
    report = build_report(_comparison())
    out = tmp_path / "r.csv"
    assert emit_report(report, "csv", out) == out.read_text(encoding="utf-8")
    with pytest.raises(ValueError, match="unknown format"):
        emit_report(report, "pdf")


def test_comparison_csv_round_trip(tmp_path):
    comp = _comparison()
    comp.write_csv(tmp_path / "c.csv")
    back = Comparison.read_csv(tmp_path / "c.csv")
    assert np.array_equal(back.days, comp.days) and np.array_equal(back.market, comp.market)
    assert all(np.array_equal(back.series[k], comp.series[k]) for k in comp.series)


def test_comparison_validation(tmp_path):
    with pytest.raises(ValueError, match="length mismatch"):
        Comparison(DAYS, MARKET, {("a", "b"): MARKET[:2]})
    bad = tmp_path / "bad.csv"
    bad.write_text("days,price\n5,12.1\n")
    with pytest.raises(ValueError, match="header"):
        Comparison.read_csv(bad)
