"""Price histories and return series.

A price series is a dated sequence of positive closes.  From it we derive
simple returns P_t/P_{t-1} - 1 and log returns ln(P_t/P_{t-1}); log
returns add across time while simple returns compound multiplicatively.
Several price series are joined on their common dates into a panel of
simple returns, the joint input for covariance estimation.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import date

import numpy as np

from .errors import (
    DuplicateDate,
    MalformedRow,
    MixedKinds,
    NoCommonDates,
    NonPositivePrice,
    SeriesTooShort,
)

SIMPLE = "simple"
LOG = "log"


@dataclass(frozen=True)
class PriceSeries:
    """Dated closes for one asset; dates strictly increasing, closes > 0."""

    asset_id: str
    dates: tuple[date, ...]
    closes: tuple[float, ...]

    def __post_init__(self):
        if len(self.dates) != len(self.closes):
            raise ValueError("dates and closes must have equal length")
        for d0, d1 in zip(self.dates, self.dates[1:]):
            if d1 <= d0:
                raise DuplicateDate(0, f"dates not strictly increasing at {d1}")
        for p in self.closes:
            if not p > 0:
                raise NonPositivePrice(0, f"non-positive close {p}")

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class ReturnSeries:
    """Per-period returns derived from a PriceSeries (one fewer point)."""

    asset_id: str
    kind: str  # SIMPLE or LOG
    dates: tuple[date, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in (SIMPLE, LOG):
            raise ValueError(f"unknown return kind {self.kind!r}")
        if self.kind == SIMPLE and any(v <= -1 for v in self.values):
            raise ValueError("simple returns must exceed -1")

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class AlignedReturnPanel:
    """Simple returns on the date intersection of several series.

    Rows are dates (ascending), columns follow ``asset_ids`` order.
    """

    asset_ids: tuple[str, ...]
    dates: tuple[date, ...]
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.matrix.shape != (len(self.dates), len(self.asset_ids)):
            raise ValueError("panel shape inconsistent with dates/assets")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("panel contains non-finite entries")

    @property
    def n_assets(self) -> int:
        return len(self.asset_ids)

    @property
    def n_dates(self) -> int:
        return len(self.dates)


def load_prices(csv_source, asset_id: str) -> PriceSeries:
    """Parse a `date,close` CSV (UTF-8, ISO dates) into a PriceSeries.

    Accepts bytes, str, or a binary/text file object.  Rows are sorted by
    date; malformed rows, non-positive prices and duplicate dates raise
    with the offending line number.
    """
    if isinstance(csv_source, bytes):
        text = csv_source.decode("utf-8")
    elif isinstance(csv_source, str):
        text = csv_source
    else:
        raw = csv_source.read()
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw

    reader = csv.reader(io.StringIO(text))
    rows: list[tuple[date, float]] = []
    seen: set[date] = set()
    for line_no, row in enumerate(reader, start=1):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if line_no == 1 and [c.strip().lower() for c in row] == ["date", "close"]:
            continue
        if len(row) != 2:
            raise MalformedRow(line_no, f"expected 2 fields, got {len(row)}")
        try:
            d = date.fromisoformat(row[0].strip())
        except ValueError as exc:
            raise MalformedRow(line_no, f"bad date {row[0]!r}: {exc}") from exc
        try:
            close = float(row[1])
        except ValueError as exc:
            raise MalformedRow(line_no, f"bad price {row[1]!r}") from exc
        if not math.isfinite(close) or close <= 0:
            raise NonPositivePrice(line_no, f"non-positive price {row[1]}")
        if d in seen:
            raise DuplicateDate(line_no, f"duplicate date {d.isoformat()}")
        seen.add(d)
        rows.append((d, close))

    if not rows:
        raise MalformedRow(0, "no data rows")
    rows.sort(key=lambda r: r[0])
    return PriceSeries(
        asset_id=asset_id,
        dates=tuple(d for d, _ in rows),
        closes=tuple(p for _, p in rows),
    )


def simple_returns(p: PriceSeries) -> ReturnSeries:
    """Per-period rate of return P_t/P_{t-1} - 1."""
    if len(p) < 2:
        raise SeriesTooShort(f"{p.asset_id}: need >= 2 prices, have {len(p)}")
    values = tuple(b / a - 1.0 for a, b in zip(p.closes, p.closes[1:]))
    return ReturnSeries(p.asset_id, SIMPLE, p.dates[1:], values)


def log_returns(p: PriceSeries) -> ReturnSeries:
    """Per-period log return ln(P_t/P_{t-1}); additive across time."""
    if len(p) < 2:
        raise SeriesTooShort(f"{p.asset_id}: need >= 2 prices, have {len(p)}")
    values = tuple(math.log(b / a) for a, b in zip(p.closes, p.closes[1:]))
    return ReturnSeries(p.asset_id, LOG, p.dates[1:], values)


def compound(returns: ReturnSeries) -> float:
    """Total return over the series: product for simple, sum for log."""
    if len(returns) == 0:
        raise SeriesTooShort("cannot compound an empty return series")
    if returns.kind == LOG:
        return float(sum(returns.values))
    total = 1.0
    for r in returns.values:
        total *= 1.0 + r
    return total - 1.0


def panel_slice(panel: AlignedReturnPanel, start: int, stop: int
                ) -> AlignedReturnPanel:
    """Contiguous date-range slice of a panel (same assets)."""
    return AlignedReturnPanel(
        panel.asset_ids, panel.dates[start:stop], panel.matrix[start:stop]
    )


def align(series: list[ReturnSeries]) -> AlignedReturnPanel:
    """Join return series on their common dates, columns in input order."""
    if not series:
        raise NoCommonDates("no series supplied")
    kinds = {s.kind for s in series}
    if len(kinds) > 1:
        raise MixedKinds(f"cannot align mixed kinds {sorted(kinds)}")
    common = set(series[0].dates)
    for s in series[1:]:
        common &= set(s.dates)
    if not common:
        raise NoCommonDates("the series share no dates")
    dates = tuple(sorted(common))
    cols = []
    for s in series:
        lookup = dict(zip(s.dates, s.values))
        cols.append([lookup[d] for d in dates])
    matrix = np.array(cols, dtype=np.float64).T
    return AlignedReturnPanel(
        asset_ids=tuple(s.asset_id for s in series),
        dates=dates,
        matrix=matrix,
    )
