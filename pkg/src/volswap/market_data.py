"""Index price history and VIX futures quotes from CSV.

Files are UTF-8, comma separated, ``.`` decimal point. Loaders keep the raw
field text so that writing a loaded file back reproduces it.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DAYS_PER_YEAR = 365.0
PRICE_HEADER = ("date", "close")
FUTURES_HEADER = ("quote_date", "days_to_expiry", "settlement", "volume")


class MarketDataError(ValueError):
    """Malformed or inconsistent market data; the message names the line."""


@dataclass(frozen=True)
class PriceSeries:
    """Daily closes with strictly increasing dates."""

    dates: tuple[str, ...]
    closes: np.ndarray
    raw_closes: tuple[str, ...] = field(default=(), repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def log_returns(self) -> np.ndarray:
        """ln(close_i / close_{i-1}); one fewer entry than closes."""
        return np.diff(np.log(self.closes))


@dataclass(frozen=True)
class FuturesQuote:
    quote_date: str
    days_to_expiry: int
    settlement: float
    volume: int
    raw: tuple[str, ...] = field(default=(), repr=False, compare=False)

    @property
    def maturity_years(self) -> float:
        return self.days_to_expiry / DAYS_PER_YEAR


def _rows(path: str | Path, header: tuple[str, ...]) -> list[tuple[int, list[str]]]:
    text = Path(path).read_text(encoding="utf-8")
    rows = [(i, r) for i, r in enumerate(csv.reader(io.StringIO(text)), start=1) if any(c.strip() for c in r)]
    if not rows:
        return []
    line, first = rows[0]
    if tuple(c.strip() for c in first) != header:
        raise MarketDataError(f"line {line}: expected header {','.join(header)!r}, got {','.join(first)!r}")
    for line, r in rows[1:]:
        if len(r) != len(header):
            raise MarketDataError(f"line {line}: expected {len(header)} fields, got {len(r)}")
    return rows[1:]


def _date(text: str, line: int) -> _dt.date:
    try:
        return _dt.date.fromisoformat(text.strip())
    except ValueError:
        raise MarketDataError(f"line {line}: invalid ISO-8601 date {text!r}") from None


def _number(text: str, line: int, kind: type = float):
    try:
        return kind(text.strip())
    except ValueError:
        raise MarketDataError(f"line {line}: cannot parse {text!r} as {kind.__name__}") from None


def load_prices(path: str | Path) -> PriceSeries:
    """Read a ``date,close`` file.

    Raises:
        MarketDataError: on parse errors, non-positive closes, or dates that
            are not strictly increasing (naming the offending line).
    """
    dates, closes, raw = [], [], []
    prev: _dt.date | None = None
    for line, (d, c) in _rows(path, PRICE_HEADER):
        day = _date(d, line)
        close = _number(c, line)
        if not close > 0 or not np.isfinite(close):
            raise MarketDataError(f"line {line}: close must be positive, got {c!r}")
        if prev is not None and day <= prev:
            raise MarketDataError(f"line {line}: date {d.strip()} is not after {prev.isoformat()}")
        prev = day
        dates.append(d.strip())
        closes.append(close)
        raw.append(c)
    return PriceSeries(tuple(dates), np.asarray(closes, dtype=float), tuple(raw))


def load_futures(path: str | Path) -> list[FuturesQuote]:
    """Read a ``quote_date,days_to_expiry,settlement,volume`` file.

    Quotes are returned sorted by ``days_to_expiry``; ties keep file order.
    An empty file gives an empty list.
    """
    quotes = []
    for line, row in _rows(path, FUTURES_HEADER):
        d, days, settle, vol = row
        _date(d, line)
        q = FuturesQuote(
            d.strip(), _number(days, line, int), _number(settle, line), _number(vol, line, int), tuple(row)
        )
        if q.days_to_expiry < 0:
            raise MarketDataError(f"line {line}: days_to_expiry must be >= 0")
        if not q.settlement > 0:
            raise MarketDataError(f"line {line}: negative or zero settlement {settle!r}")
        if q.volume < 0:
            raise MarketDataError(f"line {line}: volume must be >= 0")
        quotes.append(q)
    return sorted(quotes, key=lambda q: q.days_to_expiry)


def write_prices(series: PriceSeries, path: str | Path) -> None:
    raw = series.raw_closes if len(series.raw_closes) == len(series) else [repr(float(c)) for c in series.closes]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PRICE_HEADER)
        w.writerows(zip(series.dates, raw))


def write_futures(quotes: list[FuturesQuote], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FUTURES_HEADER)
        for q in quotes:
            w.writerow(q.raw or (q.quote_date, q.days_to_expiry, repr(q.settlement), q.volume))


__all__ = [
    "DAYS_PER_YEAR",
    "FuturesQuote",
    "MarketDataError",
    "PriceSeries",
    "load_futures",
    "load_prices",
    "write_futures",
    "write_prices",
]
