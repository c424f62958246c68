"""Monthly time-series types, aggregation, z-scoring and design-matrix alignment.

Z-scores use the *population* standard deviation (``ddof=0``) throughout.
Missing values are represented as NaN and are never imputed.
"""

from __future__ import annotations

import calendar
import datetime as dt
import math
from dataclasses import dataclass, field
from functools import total_ordering
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyInput,
    EmptyIntersection,
    IncompleteMonth,
    InsufficientData,
    MissingValue,
    MissingVariable,
    ZeroVariance,
)


@total_ordering
@dataclass(frozen=True)
class MonthStamp:
    year: int
    month: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise ValueError(f"month must be in 1..12, got {self.month}")

    @classmethod
    def from_ordinal(cls, ordinal: int) -> "MonthStamp":
        year, m0 = divmod(int(ordinal), 12)
        return cls(year, m0 + 1)

    @classmethod
    def parse(cls, text: str) -> "MonthStamp":
        """Parse ``YYYY-MM`` (a trailing ``-DD`` is ignored)."""
        parts = text.strip().split("-")
        if len(parts) < 2:
            raise ValueError(f"bad month stamp {text!r}")
        return cls(int(parts[0]), int(parts[1]))

    @classmethod
    def of(cls, date) -> "MonthStamp":
        return cls(date.year, date.month)

    @property
    def ordinal(self) -> int:
        return self.year * 12 + self.month - 1

    def __add__(self, k: int) -> "MonthStamp":
        return MonthStamp.from_ordinal(self.ordinal + int(k))

    def __sub__(self, other):
        if isinstance(other, MonthStamp):
            return self.ordinal - other.ordinal
        return MonthStamp.from_ordinal(self.ordinal - int(other))

    def __lt__(self, other: "MonthStamp") -> bool:
        return self.ordinal < other.ordinal

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"

    def days(self) -> int:
        return calendar.monthrange(self.year, self.month)[1]


def month_range(start: MonthStamp, end: MonthStamp) -> list[MonthStamp]:
    """Inclusive list of months from ``start`` to ``end``."""
    return [MonthStamp.from_ordinal(o) for o in range(start.ordinal, end.ordinal + 1)]


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MonthlySeries:
    """Contiguous monthly values of one variable; NaN marks a missing month."""

    variable_id: str
    unit: str
    start: MonthStamp
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1:
            raise DimensionMismatch("MonthlySeries values must be one-dimensional")
        object.__setattr__(self, "values", _frozen(arr))

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def end(self) -> MonthStamp:
        return self.start + (len(self) - 1)

    @property
    def stamps(self) -> list[MonthStamp]:
        return [self.start + i for i in range(len(self))]

    @property
    def calendar_months(self) -> np.ndarray:
        """Calendar month (1..12) of every entry."""
        return (self.start.ordinal + np.arange(len(self))) % 12 + 1

    def with_values(self, values, variable_id: str | None = None, unit: str | None = None) -> "MonthlySeries":
        return MonthlySeries(
            variable_id if variable_id is not None else self.variable_id,
            unit if unit is not None else self.unit,
            self.start,
            values,
        )

    def slice(self, start: MonthStamp | None = None, end: MonthStamp | None = None) -> "MonthlySeries":
        """Restrict to the inclusive window ``[start, end]`` (clipped to the record)."""
        lo = self.start if start is None else max(start, self.start)
        hi = self.end if end is None else min(end, self.end)
        if hi < lo:
            raise EmptyIntersection(f"{self.variable_id}: window {start}..{end} does not overlap {self.start}..{self.end}")
        i0 = lo - self.start
        return MonthlySeries(self.variable_id, self.unit, lo, self.values[i0 : i0 + (hi - lo) + 1])

    def value_at(self, stamp: MonthStamp) -> float:
        return float(self.values[stamp - self.start])


@dataclass(frozen=True)
class BasinTable:
    basin_id: str
    series: Mapping[str, MonthlySeries]

    def __post_init__(self):
        for key, s in self.series.items():
            if key != s.variable_id:
                raise ValueError(f"series keyed {key!r} has variable_id {s.variable_id!r}")
        object.__setattr__(self, "series", dict(self.series))

    @classmethod
    def from_series(cls, basin_id: str, series: Iterable[MonthlySeries]) -> "BasinTable":
        out: dict[str, MonthlySeries] = {}
        for s in series:
            if s.variable_id in out:
                raise ValueError(f"duplicate variable_id {s.variable_id!r}")
            out[s.variable_id] = s
        return cls(basin_id, out)

    def __getitem__(self, variable_id: str) -> MonthlySeries:
        try:
            return self.series[variable_id]
        except KeyError:
            raise MissingVariable(f"basin {self.basin_id!r} has no variable {variable_id!r}") from None

    def __contains__(self, variable_id: str) -> bool:
        return variable_id in self.series

    @property
    def variables(self) -> list[str]:
        return list(self.series)

    def with_series(self, *extra: MonthlySeries) -> "BasinTable":
        merged = dict(self.series)
        for s in extra:
            merged[s.variable_id] = s
        return BasinTable(self.basin_id, merged)


@dataclass(frozen=True)
class ZScoreParams:
    mean: float
    std: float

    def __post_init__(self):
        if not (np.isfinite(self.mean) and np.isfinite(self.std)) or self.std <= 0:
            raise ZeroVariance(f"invalid z-score params mean={self.mean} std={self.std}")

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.mean) / self.std

    def invert(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float) * self.std + self.mean


@dataclass(frozen=True)
class DesignMatrix:
    start: MonthStamp
    column_ids: tuple[str, ...]
    values: np.ndarray
    params: tuple[ZScoreParams, ...]

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != len(self.column_ids) or len(self.params) != len(self.column_ids):
            raise DimensionMismatch("design matrix shape does not match its column ids / params")
        if not np.all(np.isfinite(arr)):
            raise MissingValue("design matrix contains missing or non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "column_ids", tuple(self.column_ids))
        object.__setattr__(self, "params", tuple(self.params))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def stamps(self) -> list[MonthStamp]:
        return [self.start + i for i in range(self.n_rows)]

    @property
    def end(self) -> MonthStamp:
        return self.start + (self.n_rows - 1)

    def column(self, variable_id: str) -> np.ndarray:
        return self.values[:, self.column_ids.index(variable_id)]


@dataclass(frozen=True)
class DatedValues:
    """Sub-monthly (daily, hourly) observations with their timestamps."""

    dates: tuple
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        dates = tuple(self.dates)
        if arr.ndim != 1 or len(dates) != arr.shape[0]:
            raise DimensionMismatch("dates and values differ in length")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", _frozen(arr))


def aggregate_daily_to_monthly(
    daily: DatedValues,
    method: str,
    missing_policy: str = "reject",
    variable_id: str = "",
    unit: str = "",
) -> MonthlySeries:
    """Collapse daily values into one value per calendar month.

    ``method`` is ``"sum"`` for fluxes and ``"mean"`` for states. Under the
    ``"reject"`` policy a month with an absent day or a NaN value raises
    :class:`IncompleteMonth`; under ``"skip"`` the month is computed from the
    days that are present (NaN if none are).
    """
    if method not in ("sum", "mean"):
        raise ValueError(f"method must be 'sum' or 'mean', got {method!r}")
    if missing_policy not in ("reject", "skip"):
        raise ValueError(f"missing_policy must be 'reject' or 'skip', got {missing_policy!r}")
    if len(daily.dates) == 0:
        raise EmptyInput("no daily values to aggregate")

    days: dict[dt.date, float] = {}
    for d, v in zip(daily.dates, daily.values):
        d = _as_date(d)
        if d in days:
            raise ValueError(f"duplicate date {d}")
        days[d] = float(v)

    first = MonthStamp.of(min(days))
    last = MonthStamp.of(max(days))
    out = []
    for stamp in month_range(first, last):
        vals = []
        absent = []
        for day in range(1, stamp.days() + 1):
            v = days.get(dt.date(stamp.year, stamp.month, day))
            if v is None or np.isnan(v):
                absent.append(day)
            else:
                vals.append(v)
        if absent and missing_policy == "reject":
            raise IncompleteMonth(f"{variable_id or 'series'} {stamp}: missing day(s) {absent[:5]}")
        if not vals:
            out.append(np.nan)
        elif method == "sum":
            out.append(math.fsum(vals))
        else:
            out.append(math.fsum(vals) / len(vals))
    return MonthlySeries(variable_id, unit, first, out)


def _as_date(d) -> dt.date:
    if isinstance(d, dt.datetime):
        return d.date()
    if isinstance(d, dt.date):
        return d
    if isinstance(d, np.datetime64):
        return d.astype("datetime64[D]").item()
    return dt.date.fromisoformat(str(d)[:10])


def standardize(series: MonthlySeries, params: ZScoreParams | None = None) -> tuple[MonthlySeries, ZScoreParams]:
    """Z-score a series.

    Without ``params`` the mean and population std are estimated from the
    finite values of ``series`` (training mode); with ``params`` they are
    applied as given (evaluation mode).
    """
    vals = series.values
    finite = vals[np.isfinite(vals)]
    if params is None:
        if finite.size < 2:
            raise InsufficientData(f"{series.variable_id}: need at least 2 values to standardize")
        std = float(np.std(finite))
        if std == 0.0:
            raise ZeroVariance(f"{series.variable_id}: constant series cannot be standardized")
        params = ZScoreParams(float(np.mean(finite)), std)
    return series.with_values(params.apply(vals)), params


@dataclass(frozen=True)
class ClimatologyParams:
    """One :class:`ZScoreParams` per calendar month, January first."""

    monthly: tuple[ZScoreParams, ...]

    def __post_init__(self):
        if len(self.monthly) != 12:
            raise ValueError("need exactly 12 monthly parameter sets")

    def apply(self, series: MonthlySeries) -> np.ndarray:
        out = np.array(series.values, dtype=float)
        months = series.calendar_months
        for m, p in enumerate(self.monthly, start=1):
            sel = months == m
            out[sel] = p.apply(out[sel])
        return out


def climatological_zscore(
    series: MonthlySeries,
    params: ClimatologyParams | None = None,
    window: tuple[MonthStamp | None, MonthStamp | None] | None = None,
) -> tuple[MonthlySeries, ClimatologyParams]:
    """Standardize each value against its own calendar month.

    Statistics come from ``window`` (default: the whole series) unless
    ``params`` is given; they are applied to every month of ``series``.
    """
    if params is None:
        fit = series if window is None else series.slice(window[0], window[1])
        months = fit.calendar_months
        monthly = []
        for m in range(1, 13):
            v = fit.values[(months == m) & np.isfinite(fit.values)]
            if v.size < 2:
                raise InsufficientData(f"{series.variable_id}: fewer than 2 values for calendar month {m}")
            sd = float(np.std(v))
            if sd == 0.0:
                raise ZeroVariance(f"{series.variable_id}: calendar month {m} is constant")
            monthly.append(ZScoreParams(float(np.mean(v)), sd))
        params = ClimatologyParams(tuple(monthly))
    return series.with_values(params.apply(series)), params


def monthly_climatology_anomaly(series: MonthlySeries) -> MonthlySeries:
    """Subtract from each value the mean of all same-calendar-month values."""
    if len(series) == 0:
        raise EmptyInput(f"{series.variable_id}: empty series")
    vals = series.values
    months = series.calendar_months
    out = np.full_like(vals, np.nan)
    for m in range(1, 13):
        sel = months == m
        good = sel & np.isfinite(vals)
        if good.any():
            out[sel] = vals[sel] - np.mean(vals[good])
    return series.with_values(out, variable_id=f"{series.variable_id}_ANOM")


def _trim(s: MonthlySeries) -> MonthlySeries:
    ok = np.flatnonzero(np.isfinite(s.values))
    if ok.size == 0:
        raise EmptyInput(f"{s.variable_id}: no finite values")
    return s.slice(s.start + int(ok[0]), s.start + int(ok[-1]))


def align(
    table: BasinTable,
    variables: Sequence[str],
    standardize_with: Sequence[ZScoreParams] | Mapping[str, ZScoreParams] | None = None,
    window: tuple[MonthStamp | None, MonthStamp | None] | None = None,
    trim_edges: bool = False,
) -> DesignMatrix:
    """Build a standardized months x variables matrix.

    Rows cover the intersection of the requested series' stamp ranges,
    optionally narrowed to ``window``. With ``trim_edges`` the leading and
    trailing missing values of each series (e.g. an SPI warm-up) are dropped
    first. Any missing value inside the resulting range is an error. Columns
    follow the order of ``variables``.
    """
    if not variables:
        raise ValueError("no variables requested")
    series = [table[v] for v in variables]
    if trim_edges:
        series = [_trim(s) for s in series]
    lo = max(s.start for s in series)
    hi = min(s.end for s in series)
    if window is not None:
        if window[0] is not None:
            lo = max(lo, window[0])
        if window[1] is not None:
            hi = min(hi, window[1])
    if hi < lo:
        raise EmptyIntersection(f"basin {table.basin_id!r}: requested series share no months")

    if isinstance(standardize_with, Mapping):
        stored = [standardize_with[v] for v in variables]
    elif standardize_with is not None:
        stored = list(standardize_with)
        if len(stored) != len(variables):
            raise DimensionMismatch("one ZScoreParams per requested variable is required")
    else:
        stored = [None] * len(variables)

    cols = []
    params = []
    for s, p in zip(series, stored):
        part = s.slice(lo, hi)
        bad = ~np.isfinite(part.values)
        if bad.any():
            first = part.start + int(np.argmax(bad))
            raise MissingValue(f"basin {table.basin_id!r}: {s.variable_id} missing at {first}")
        z, used = standardize(part, p)
        cols.append(z.values)
        params.append(used)
    return DesignMatrix(lo, tuple(variables), np.column_stack(cols), tuple(params))
