"""Reading historical quotes and building aligned price panels.

Quote files are UTF-8 text, one security per file, two comma-separated
columns ``date,price`` with an optional ``date,price`` header line. A panel
listing maps security ids to quote files, one ``security_id,path`` per line
(relative paths resolve against the listing's directory).
"""

from __future__ import annotations

import datetime as dt
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np

from .market_model import PricePanel, PriceSeries

log = logging.getLogger(__name__)

HEADER = "date,price"
STOCK_DATE_RANGE = ("2000-01-01", "2006-05-12")


class DataError(ValueError):
    """Malformed or unusable input data."""


@dataclass(frozen=True)
class RawQuoteTable:
    security_id: Hashable
    dates: Tuple[str, ...]
    prices: Tuple[float, ...]

    def __post_init__(self):
        if len(self.dates) != len(self.prices):
            raise DataError("dates and prices differ in length")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise DataError(f"{self.security_id}: dates must be strictly increasing")
        if any(not p > 0 for p in self.prices):
            raise DataError(f"{self.security_id}: non-positive price")

    def __len__(self) -> int:
        return len(self.dates)

    def restrict(self, start: Optional[str] = None, end: Optional[str] = None) -> "RawQuoteTable":
        keep = [i for i, d in enumerate(self.dates) if (start is None or d >= start) and (end is None or d <= end)]
        return RawQuoteTable(self.security_id, tuple(self.dates[i] for i in keep), tuple(self.prices[i] for i in keep))


@dataclass(frozen=True)
class CoveragePolicy:
    min_coverage: float = 0.99
    date_range: Optional[Tuple[Optional[str], Optional[str]]] = None

    def __post_init__(self):
        if not 0 < self.min_coverage <= 1:
            raise ValueError("min_coverage must lie in (0, 1]")


def _parse_date(text: str, where: str) -> str:
    try:
        return dt.date.fromisoformat(text).isoformat()
    except ValueError:
        raise DataError(f"bad date {text!r} at {where}") from None


def parse_quotes(text: str, security_id: Hashable = "X1", source: str = "line") -> RawQuoteTable:
    """Parse ``date,price`` rows; the result is sorted by date.

    Errors name the 1-based line number, prefixed by ``source`` when given
    (e.g. a file name).
    """
    rows: Dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        where = f"line {lineno}" if source == "line" else f"{source}:{lineno}"
        if lineno == 1 and line.replace(" ", "").lower() == HEADER:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise DataError(f"malformed row at {where}: expected 'date,price'")
        date = _parse_date(parts[0], where)
        try:
            price = float(parts[1])
        except ValueError:
            raise DataError(f"malformed price {parts[1]!r} at {where}") from None
        if not math.isfinite(price) or price <= 0:
            raise DataError(f"non-positive price at {where}")
        if date in rows:
            raise DataError(f"duplicate date {date} at {where}")
        rows[date] = price
    dates = tuple(sorted(rows))
    return RawQuoteTable(security_id, dates, tuple(rows[d] for d in dates))


def format_quotes(table: RawQuoteTable, header: bool = True) -> str:
    lines = [HEADER] if header else []
    lines += [f"{d},{p!r}" for d, p in zip(table.dates, table.prices)]
    return "\n".join(lines) + "\n"


def read_quotes(path, security_id: Optional[Hashable] = None) -> RawQuoteTable:
    path = Path(path)
    sid = path.stem if security_id is None else security_id
    return parse_quotes(path.read_text(encoding="utf-8"), sid, source=str(path))


def read_listing(path) -> List[RawQuoteTable]:
    """Load every security named in a ``security_id,path`` listing file."""
    path = Path(path)
    tables = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2 or not parts[0]:
            raise DataError(f"malformed listing row at {path}:{lineno}: expected 'security_id,path'")
        file = Path(parts[1])
        if not file.is_absolute():
            file = path.parent / file
        if not file.exists():
            raise DataError(f"missing quote file {file} named at {path}:{lineno}")
        tables.append(read_quotes(file, parts[0]))
    if not tables:
        raise DataError(f"listing {path} names no securities")
    return tables


def coverage(tables: Sequence[RawQuoteTable], policy: CoveragePolicy = CoveragePolicy()) -> Dict[Hashable, float]:
    """Fraction of the union of quote dates (inside the policy range) each security covers."""
    start, end = policy.date_range or (None, None)
    restricted = [t.restrict(start, end) for t in tables]
    union = set().union(*(t.dates for t in restricted))
    if not union:
        return {t.security_id: 0.0 for t in tables}
    return {t.security_id: len(t) / len(union) for t in restricted}


def filter_coverage(tables: Sequence[RawQuoteTable], policy: CoveragePolicy = CoveragePolicy()) -> List[RawQuoteTable]:
    """Drop irregularly quoted securities; survivors are cut to the policy date range."""
    if not tables:
        raise DataError("no quote tables given")
    start, end = policy.date_range or (None, None)
    fractions = coverage(tables, policy)
    kept = [t.restrict(start, end) for t in tables if fractions[t.security_id] >= policy.min_coverage]
    dropped = [t.security_id for t in tables if fractions[t.security_id] < policy.min_coverage]
    log.info("coverage filter kept %d, dropped %d %s", len(kept), len(dropped), dropped)
    if not kept:
        raise DataError("no securities pass coverage")
    return kept


def align_panel(tables: Sequence[RawQuoteTable]) -> PricePanel:
    """Restrict every security to the dates on which all of them are quoted."""
    if not tables:
        raise DataError("no quote tables given")
    common = set(tables[0].dates)
    for t in tables[1:]:
        common &= set(t.dates)
    if not common:
        raise DataError("no common quote dates")
    dates = tuple(sorted(common))
    series = []
    for t in tables:
        lookup = dict(zip(t.dates, t.prices))
        series.append(PriceSeries(t.security_id, np.array([lookup[d] for d in dates]), dates))
    return PricePanel(tuple(series))


def currency_pair(rates: RawQuoteTable) -> PriceSeries:
    """Treat an exchange-rate series as the price of one currency in the other."""
    return PriceSeries(rates.security_id, np.array(rates.prices, dtype=np.float64), rates.dates or None)


def invert_series(series: PriceSeries, security_id: Optional[Hashable] = None) -> PriceSeries:
    """The reciprocal view of a rate series (the other currency as security)."""
    sid = f"1/{series.security_id}" if security_id is None else security_id
    return PriceSeries(sid, 1.0 / series.prices, series.labels)


def years_spanned(labels: Optional[Sequence[str]]) -> Optional[float]:
    if not labels or len(labels) < 2:
        return None
    days = (dt.date.fromisoformat(labels[-1]) - dt.date.fromisoformat(labels[0])).days
    return days / 365.25 if days > 0 else None
