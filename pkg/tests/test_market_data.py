import csv
import math

import numpy as np
import pytest

from volswap.market_data import (
    FuturesQuote,
    MarketDataError,
    PriceSeries,
    load_futures,
    load_prices,
    write_futures,
    write_prices,
)


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_two_rows(tmp_path):
    s = load_prices(_write(tmp_path, "p.csv", "date,close\n2017-01-12,100\n2017-01-13,110\n"))
    assert len(s) == 2
    assert s.log_returns == pytest.approx([math.log(1.1)], rel=1e-15)
    assert s.log_returns[0] == pytest.approx(0.09531, abs=1e-5)


def test_fixture_statistics(data_dir):
    s = load_prices(data_dir / "prices_505.csv")
    with open(data_dir / "prices_505_stats.csv", newline="") as fh:
        ref = next(csv.DictReader(fh))
    r = s.log_returns
    assert len(s) == 505 and r.size == int(ref["n_returns"]) == 504
    assert r.mean() == pytest.approx(float(ref["mean"]), rel=1e-10)
    assert r.std(ddof=1) == pytest.approx(float(ref["sd"]), rel=1e-12)


def test_out_of_order_dates(tmp_path):
    path = _write(tmp_path, "p.csv", "date,close\n2017-01-12,100\n2017-01-13,101\n2017-01-13,102\n")
    with pytest.raises(MarketDataError, match="line 4"):
        load_prices(path)


@pytest.mark.parametrize(
    "body, message",
    [
        ("2017-01-12,abc\n", "line 2"),
        ("2017-13-01,100\n", "line 2: invalid ISO-8601 date"),
        ("2017-01-12,100\n2017-01-13,-1\n", "line 3: close must be positive"),
        ("2017-01-12,100,1\n", "line 2: expected 2 fields"),
    ],
)
def test_price_parse_errors(tmp_path, body, message):
    with pytest.raises(MarketDataError, match=message):
        load_prices(_write(tmp_path, "p.csv", "date,close\n" + body))


def test_price_header_required(tmp_path):
    with pytest.raises(MarketDataError, match="line 1: expected header"):
        load_prices(_write(tmp_path, "p.csv", "day,price\n2017-01-12,100\n"))


def test_published_first_futures_row(data_dir):
    (q,) = load_futures(data_dir / "vix_futures_20170113.csv")
    assert q.quote_date == "2017-01-13" and q.days_to_expiry == 5
    assert q.settlement == 12.10 and q.volume == 110184
    assert q.maturity_years == 5 / 365


def test_empty_futures_file(tmp_path):
    assert load_futures(_write(tmp_path, "f.csv", "")) == []
    assert load_futures(_write(tmp_path, "f.csv", "quote_date,days_to_expiry,settlement,volume\n")) == []


def test_futures_sorted_with_stable_ties(tmp_path):
    text = (
        "quote_date,days_to_expiry,settlement,volume\n"
        "2017-01-13,33,14.0,1\n2017-01-13,5,12.0,2\n2017-01-13,33,14.5,3\n2017-01-13,5,12.5,4\n"
    )
    quotes = load_futures(_write(tmp_path, "f.csv", text))
    assert [(q.days_to_expiry, q.volume) for q in quotes] == [(5, 2), (5, 4), (33, 1), (33, 3)]


@pytest.mark.parametrize(
    "row, message",
    [
        ("2017-01-13,5,-12.1,1", "line 2: negative or zero settlement"),
        ("2017-01-13,-5,12.1,1", "line 2: days_to_expiry"),
        ("2017-01-13,5,12.1,-1", "line 2: volume"),
        ("2017-01-13,5.5,12.1,1", "line 2: cannot parse"),
        ("13/01/2017,5,12.1,1", "line 2: invalid ISO-8601 date"),
    ],
)
def test_futures_errors(tmp_path, row, message):
    path = _write(tmp_path, "f.csv", "quote_date,days_to_expiry,settlement,volume\n" + row + "\n")
    with pytest.raises(MarketDataError, match=message):
        load_futures(path)


def test_round_trip_is_byte_exact(tmp_path, data_dir):
    for name, load, write in (
        ("prices_505.csv", load_prices, write_prices),
        ("futures_synthetic.csv", load_futures, write_futures),
    ):
        src = data_dir / name
        out = tmp_path / name
        write(load(src), out)
        assert out.read_bytes() == src.read_bytes()


def test_write_without_raw_text(tmp_path):
    s = PriceSeries(("2017-01-12", "2017-01-13"), np.array([100.0, 110.5]))
    write_prices(s, tmp_path / "p.csv")
    assert np.array_equal(load_prices(tmp_path / "p.csv").closes, s.closes)
    q = FuturesQuote("2017-01-13", 5, 12.1, 10)
    write_futures([q], tmp_path / "f.csv")
    assert load_futures(tmp_path / "f.csv") == [q]
