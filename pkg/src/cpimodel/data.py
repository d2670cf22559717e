"""Monthly time-series primitives, wide-CSV catalog ingestion, window checks.

Series are aligned by calendar month, never by array position: every
``MonthlySeries`` carries its own start month and lookups go through
``MonthKey`` arithmetic.
"""

from __future__ import annotations

import csv
import io
import math
import re
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from .errors import (
    DataError,
    DuplicateCode,
    EmptyCatalog,
    EmptyIntersection,
    InteriorGap,
    MalformedRow,
    MissingMonth,
    NonMonotoneDates,
    NonPositivePeak,
    TooShort,
    UnknownCode,
)

_MONTH_RE = re.compile(r"^\s*(\d{4})-(\d{1,2})\s*$")


@dataclass(frozen=True, order=True)
class MonthKey:
    """A calendar month. Ordering follows the calendar."""

    year: int
    month: int

    def __post_init__(self) -> None:
        if not 1 <= self.month <= 12:
            raise ValueError(f"month must be in 1..12, got {self.month}")

    @classmethod
    def parse(cls, text: str) -> MonthKey:
        m = _MONTH_RE.match(text)
        if not m:
            raise ValueError(f"expected YYYY-MM, got {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))

    @classmethod
    def from_ordinal(cls, k: int) -> MonthKey:
        year, month0 = divmod(k, 12)
        return cls(year, month0 + 1)

    @property
    def ordinal(self) -> int:
        """Months since year 0, January."""
        return self.year * 12 + self.month - 1

    def __add__(self, months: int) -> MonthKey:
        if not isinstance(months, (int, np.integer)):
            return NotImplemented
        return MonthKey.from_ordinal(self.ordinal + int(months))

    def __sub__(self, other):
        if isinstance(other, MonthKey):
            return self.ordinal - other.ordinal
        if isinstance(other, (int, np.integer)):
            return MonthKey.from_ordinal(self.ordinal - int(other))
        return NotImplemented

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


def month_range(first: MonthKey, last: MonthKey) -> list[MonthKey]:
    """Inclusive list of months from ``first`` to ``last``."""
    return [MonthKey.from_ordinal(k) for k in range(first.ordinal, last.ordinal + 1)]


def trend_time(m: MonthKey) -> float:
    """Trend regressor in fractional years since January 2000."""
    return (m.year - 2000) + (m.month - 1) / 12.0


def trend_vector(first: MonthKey, n: int) -> np.ndarray:
    k = np.arange(first.ordinal, first.ordinal + n, dtype=np.int64)
    return (k // 12 - 2000) + (k % 12) / 12.0


@dataclass(frozen=True, eq=False)
class MonthlySeries:
    """Gap-free monthly values; ``values[k]`` belongs to ``start + k``."""

    start: MonthKey
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=np.float64, copy=True).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise DataError("series values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MonthlySeries):
            return NotImplemented
        return self.start == other.start and np.array_equal(self.values, other.values)

    def __repr__(self) -> str:
        if len(self) == 0:
            return f"MonthlySeries(start={self.start}, n=0)"
        return f"MonthlySeries({self.start}..{self.end}, n={len(self)})"

    @property
    def end(self) -> MonthKey:
        return self.start + (len(self) - 1)

    def covers(self, first: MonthKey, last: MonthKey) -> bool:
        return len(self) > 0 and self.start <= first and last <= self.end

    def at(self, m: MonthKey) -> float:
        k = m - self.start
        if k < 0 or k >= len(self):
            raise MissingMonth(f"no value for {m} (series spans {self.start}..{self.end})")
        return float(self.values[k])

    def window(self, first: MonthKey, last: MonthKey) -> np.ndarray:
        """Values for ``first..last`` inclusive as a read-only view."""
        if last < first:
            raise ValueError(f"empty window {first}..{last}")
        if not self.covers(first, last):
            span = f"{self.start}..{self.end}" if len(self) else "empty"
            raise MissingMonth(f"series ({span}) does not cover {first}..{last}")
        i = first - self.start
        return self.values[i : i + (last - first) + 1]

    def slice(self, first: MonthKey, last: MonthKey) -> MonthlySeries:
        return MonthlySeries(first, self.window(first, last))

    def items(self) -> Iterator[tuple[MonthKey, float]]:
        for k, v in enumerate(self.values):
            yield self.start + k, float(v)


def overlap(a: MonthlySeries, b: MonthlySeries) -> tuple[MonthKey, MonthKey] | None:
    """Common calendar span of two series, or None."""
    first = max(a.start, b.start)
    last = min(a.end, b.end)
    if last < first:
        return None
    return first, last


class CpiCatalog(Mapping[str, MonthlySeries]):
    """Named collection of CPI series; insertion order is preserved."""

    def __init__(self, entries: Mapping[str, MonthlySeries] | Iterable[tuple[str, MonthlySeries]]):
        items = list(entries.items()) if isinstance(entries, Mapping) else list(entries)
        data: dict[str, MonthlySeries] = {}
        for code, series in items:
            if not isinstance(code, str) or not code.strip():
                raise DataError(f"invalid series code {code!r}")
            if code in data:
                raise DuplicateCode(f"duplicate series code {code!r}")
            if len(series) == 0:
                raise DataError(f"series {code!r} is empty")
            data[code] = series
        if len(data) < 2:
            raise EmptyCatalog(f"catalog needs at least 2 series, got {len(data)}")
        self._data = data

    def __getitem__(self, code: str) -> MonthlySeries:
        try:
            return self._data[code]
        except KeyError:
            raise UnknownCode(f"unknown CPI code {code!r}") from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._data)

    def __len__(self) -> int:
        return len(self._data)

    def __repr__(self) -> str:
        return f"CpiCatalog({list(self._data)})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CpiCatalog):
            return NotImplemented
        return list(self._data) == list(other._data) and all(
            self._data[k] == other._data[k] for k in self._data
        )

    @property
    def codes(self) -> list[str]:
        return list(self._data)

    @property
    def latest(self) -> MonthKey:
        """Most recent month present in any series."""
        return max(s.end for s in self._data.values())

    def subset(self, codes: Iterable[str]) -> CpiCatalog:
        return CpiCatalog([(c, self[c]) for c in codes])


def lookup(series_map: Mapping[str, MonthlySeries], code: str) -> MonthlySeries:
    try:
        return series_map[code]
    except UnknownCode:
        raise
    except KeyError:
        raise UnknownCode(f"unknown CPI code {code!r}") from None


# --------------------------------------------------------------------- CSV


def read_wide_csv(text: str | TextIO) -> dict[str, MonthlySeries]:
    """Parse a wide monthly CSV with any number (>= 1) of columns."""
    stream = io.StringIO(text) if isinstance(text, str) else text
    reader = csv.reader(stream)
    header = None
    for row in reader:
        if row and any(cell.strip() for cell in row):
            header = [cell.strip() for cell in row]
            break
    if header is None:
        raise MalformedRow("empty CSV: no header")
    if header[0].lower() != "date":
        raise MalformedRow(f"header must start with 'date', got {header[0]!r}")
    codes = header[1:]
    if not codes:
        raise MalformedRow("header has no series columns")
    seen: set[str] = set()
    for code in codes:
        if not code:
            raise MalformedRow("empty series code in header")
        if code in seen:
            raise DuplicateCode(f"duplicate series code {code!r} in header")
        seen.add(code)

    first_month: MonthKey | None = None
    prev: MonthKey | None = None
    columns: list[list[float | None]] = [[] for _ in codes]
    for row in reader:
        if not row or not any(cell.strip() for cell in row):
            continue
        line = reader.line_num
        if len(row) != len(header):
            raise MalformedRow(f"line {line}: expected {len(header)} fields, got {len(row)}")
        try:
            month = MonthKey.parse(row[0])
        except ValueError as exc:
            raise MalformedRow(f"line {line}: {exc}") from None
        if prev is not None:
            if month <= prev:
                raise NonMonotoneDates(f"line {line}: {month} does not follow {prev}")
            if month - prev != 1:
                raise NonMonotoneDates(f"line {line}: {month} skips months after {prev}")
        else:
            first_month = month
        prev = month
        for j, cell in enumerate(row[1:]):
            cell = cell.strip()
            if not cell:
                columns[j].append(None)
                continue
            try:
                value = float(cell)
            except ValueError:
                raise MalformedRow(f"line {line}: non-numeric value {cell!r} for {codes[j]}") from None
            if not math.isfinite(value):
                raise MalformedRow(f"line {line}: non-finite value for {codes[j]}")
            columns[j].append(value)

    if first_month is None:
        raise MalformedRow("CSV has a header but no data rows")

    out: dict[str, MonthlySeries] = {}
    for code, col in zip(codes, columns):
        present = [k for k, v in enumerate(col) if v is not None]
        if not present:
            raise DataError(f"column {code!r} has no values")
        lo, hi = present[0], present[-1]
        if hi - lo + 1 != len(present):
            gap = next(k for k in range(lo, hi + 1) if col[k] is None)
            raise InteriorGap(f"column {code!r} is empty at {first_month + gap}")
        out[code] = MonthlySeries(first_month + lo, col[lo : hi + 1])
    return out


def parse_catalog_csv(text: str | TextIO) -> CpiCatalog:
    """Parse a wide ``date,CODE1,CODE2,...`` CSV into a catalog.

    Each column is trimmed to its own non-empty span; leading and trailing
    empty cells are allowed, interior ones raise ``InteriorGap``.
    """
    return CpiCatalog(read_wide_csv(text))


def parse_price_csv(text: str | TextIO, column: str | None = None) -> tuple[str, MonthlySeries]:
    """Read a price file (same wide format). Returns ``(ticker, series)``.

    With several columns, ``column`` picks one; default is the first.
    """
    data = read_wide_csv(text)
    if column is None:
        column = next(iter(data))
    if column not in data:
        raise UnknownCode(f"price column {column!r} not found; have {list(data)}")
    return column, data[column]


def format_catalog_csv(series: Mapping[str, MonthlySeries]) -> str:
    """Inverse of :func:`parse_catalog_csv`; floats are written with ``repr``."""
    codes = list(series)
    if not codes:
        raise EmptyCatalog("nothing to write")
    first = min(s.start for s in series.values())
    last = max(s.end for s in series.values())
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["date", *codes])
    for m in month_range(first, last):
        row = [str(m)]
        for code in codes:
            s = series[code]
            row.append(repr(s.at(m)) if s.start <= m <= s.end else "")
        writer.writerow(row)
    return buf.getvalue()


# -------------------------------------------------------------- operations


def lag_shift(s: MonthlySeries, tau: int) -> MonthlySeries:
    """Series whose value at month m is ``s`` at ``m - tau``.

    Positive ``tau`` is a lag (older CPI readings), negative a lead.
    """
    return MonthlySeries(s.start + int(tau), s.values)


def first_difference(s: MonthlySeries) -> MonthlySeries:
    if len(s) < 2:
        raise TooShort(f"first difference needs at least 2 values, got {len(s)}")
    return MonthlySeries(s.start + 1, np.diff(s.values))


def normalize_to_peak(s: MonthlySeries, first: MonthKey, last: MonthKey) -> MonthlySeries:
    """Divide the whole series by its maximum inside ``first..last``."""
    lo = max(first, s.start)
    hi = min(last, s.end)
    if hi < lo:
        raise EmptyIntersection(f"window {first}..{last} misses series span {s.start}..{s.end}")
    peak = float(np.max(s.window(lo, hi)))
    if peak <= 0:
        raise NonPositivePeak(f"peak over {lo}..{hi} is {peak}, must be positive")
    return MonthlySeries(s.start, s.values / peak)


@dataclass(frozen=True)
class CoverageCheck:
    code: str
    required_first: MonthKey
    required_last: MonthKey
    ok: bool


@dataclass(frozen=True)
class WindowReport:
    start: MonthKey
    anchor: MonthKey
    allowed_lead: int
    price_ok: bool
    cpi: tuple[CoverageCheck, ...]

    @property
    def passed(self) -> bool:
        return self.price_ok and all(c.ok for c in self.cpi)

    @property
    def passing_codes(self) -> list[str]:
        return [c.code for c in self.cpi if c.ok]


def effective_lead(max_lead: int, latest_cpi: MonthKey, anchor: MonthKey) -> int:
    """Number of future CPI months usable at ``anchor``."""
    return max(0, min(max_lead, latest_cpi - anchor))


def validate_window(
    catalog: Mapping[str, MonthlySeries],
    price: MonthlySeries,
    start: MonthKey,
    anchor: MonthKey,
    max_lag: int,
    max_lead: int,
    latest_cpi: MonthKey | None = None,
) -> WindowReport:
    """Check that every CPI covers the lag/lead reach of the sample window."""
    if anchor < start:
        raise ValueError(f"start {start} is after anchor {anchor}")
    if latest_cpi is None:
        latest_cpi = max(s.end for s in catalog.values())
    lead = effective_lead(max_lead, latest_cpi, anchor)
    need_first = start - max_lag
    need_last = anchor + lead
    checks = tuple(
        CoverageCheck(code, need_first, need_last, s.covers(need_first, need_last))
        for code, s in catalog.items()
    )
    return WindowReport(start, anchor, lead, price.covers(start, anchor), checks)
