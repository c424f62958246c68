"""CSV readers and writers for basin tables, weights and index series.

Basin files have a header ``date,<var1>,<var2>,...``; dates are ``YYYY-MM``
(monthly) or ``YYYY-MM-DD`` (daily). Empty cells are missing values. Lines
starting with ``#`` are comments.
"""

from __future__ import annotations

import csv
import datetime as dt
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DataError, TimestampMismatch
from .index import IndexSeries
from .mi import WeightVector
from .timeseries import (
    BasinTable,
    DatedValues,
    MonthlySeries,
    MonthStamp,
    ZScoreParams,
    aggregate_daily_to_monthly,
)


@dataclass(frozen=True)
class NativeTable:
    """A basin file as read, before any monthly aggregation."""

    basin_id: str
    daily: bool
    dates: tuple
    columns: dict

    def dated(self, variable_id: str) -> DatedValues:
        if variable_id not in self.columns:
            raise DataError(f"basin {self.basin_id!r} has no column {variable_id!r}")
        return DatedValues(self.dates, self.columns[variable_id])


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            yield [c.strip() for c in row]


def _parse_float(cell: str, where: str) -> float:
    if cell == "":
        return np.nan
    try:
        return float(cell)
    except ValueError:
        raise DataError(f"{where}: cannot parse {cell!r} as a number") from None


def read_native(path, basin_id: str | None = None) -> NativeTable:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"input file not found: {path}")
    rows = _rows(path)
    try:
        header = next(rows)
    except StopIteration:
        raise DataError(f"{path}: empty file") from None
    if not header or header[0].lower() != "date":
        raise DataError(f"{path}: first column must be 'date'")
    names = header[1:]
    if len(set(names)) != len(names):
        raise DataError(f"{path}: duplicate column names")
    dates = []
    cols = [[] for _ in names]
    daily = None
    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        text = row[0]
        is_daily = len(text.split("-")) == 3
        if daily is None:
            daily = is_daily
        elif daily != is_daily:
            raise DataError(f"{path}:{lineno}: mixed monthly and daily dates")
        try:
            stamp = dt.date.fromisoformat(text) if is_daily else MonthStamp.parse(text)
        except ValueError:
            raise DataError(f"{path}:{lineno}: bad date {text!r}") from None
        dates.append(stamp)
        for k, cell in enumerate(row[1:]):
            cols[k].append(_parse_float(cell, f"{path}:{lineno}"))
    if not dates:
        raise DataError(f"{path}: no data rows")
    for a, b in zip(dates, dates[1:]):
        if not b > a:
            raise DataError(f"{path}: dates not strictly increasing at {b}")
    if not daily:
        for a, b in zip(dates, dates[1:]):
            if b - a != 1:
                raise TimestampMismatch(f"{path}: months not contiguous between {a} and {b}")
    return NativeTable(
        basin_id or path.stem,
        bool(daily),
        tuple(dates),
        {n: np.array(c, dtype=float) for n, c in zip(names, cols)},
    )


def to_basin_table(
    native: NativeTable,
    aggregation: Mapping[str, str] | None = None,
    missing_policy: str = "reject",
    units: Mapping[str, str] | None = None,
) -> BasinTable:
    """Monthly table from a native file; daily columns need an aggregation method."""
    units = units or {}
    series = []
    for name, values in native.columns.items():
        unit = units.get(name, "")
        if native.daily:
            method = (aggregation or {}).get(name)
            if method is None:
                raise ConfigError(
                    f"basin {native.basin_id!r}: daily column {name!r} has no aggregation method (sum or mean)"
                )
            series.append(
                aggregate_daily_to_monthly(DatedValues(native.dates, values), method, missing_policy, name, unit)
            )
        else:
            series.append(MonthlySeries(name, unit, native.dates[0], values))
    return BasinTable.from_series(native.basin_id, series)


def read_basin(path, aggregation=None, missing_policy="reject", basin_id=None) -> BasinTable:
    return to_basin_table(read_native(path, basin_id), aggregation, missing_policy)


def _fmt(x: float) -> str:
    return "" if not np.isfinite(x) else repr(float(x))


def _open_out(path):
    path = Path(path)
    if path.parent and not path.parent.exists():
        os.makedirs(path.parent, exist_ok=True)
    return open(path, "w", newline="", encoding="utf-8")


def write_monthly_csv(path, series: Sequence[MonthlySeries], comments: Iterable[str] = ()) -> None:
    """Write series side by side over the union of their stamps."""
    if not series:
        raise ValueError("nothing to write")
    lo = min(s.start for s in series)
    hi = max(s.end for s in series)
    with _open_out(path) as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date"] + [s.variable_id for s in series])
        for o in range(lo.ordinal, hi.ordinal + 1):
            stamp = MonthStamp.from_ordinal(o)
            row = [str(stamp)]
            for s in series:
                row.append(_fmt(s.value_at(stamp)) if s.start <= stamp <= s.end else "")
            w.writerow(row)


def write_basin_csv(path, table: BasinTable, comments: Iterable[str] = ()) -> None:
    write_monthly_csv(path, list(table.series.values()), comments)


def write_index_csv(path, idx: IndexSeries, comments: Iterable[str] = ()) -> None:
    with _open_out(path) as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "snodri", "raw_weighted_sum"])
        for i, stamp in enumerate(idx.stamps):
            w.writerow([str(stamp), repr(float(idx.values[i])), repr(float(idx.raw[i]))])


def read_comments(path) -> dict[str, str]:
    """``key=value`` pairs from leading ``#`` comment lines."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            for tok in line[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    out[k] = v
    return out


def read_index_csv(path) -> IndexSeries:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"index file not found: {path}")
    rows = list(_rows(path))
    if not rows or rows[0] != ["date", "snodri", "raw_weighted_sum"]:
        raise DataError(f"{path}: unexpected index header")
    stamps = [MonthStamp.parse(r[0]) for r in rows[1:]]
    vals = np.array([float(r[1]) for r in rows[1:]])
    raw = np.array([float(r[2]) for r in rows[1:]])
    meta = read_comments(path)
    if "raw_mean" in meta and "raw_std" in meta:
        params = ZScoreParams(float(meta["raw_mean"]), float(meta["raw_std"]))
    else:
        params = ZScoreParams(float(np.mean(raw)), float(np.std(raw)))
    return IndexSeries(stamps[0], vals, raw, params, meta)


def write_weights_csv(path, w: WeightVector, comments: Iterable[str] = ()) -> None:
    ranks = w.ranks()
    with _open_out(path) as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["variable", "mi_nats", "mi_bits", "rank"])
        for v, x, r in zip(w.variable_ids, w.weights.tolist(), ranks):
            out.writerow([v, repr(x), repr(x / np.log(2.0)), r])


def read_weights_csv(path) -> WeightVector:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"weights file not found: {path}")
    rows = list(_rows(path))
    if not rows or rows[0][:2] != ["variable", "mi_nats"]:
        raise DataError(f"{path}: unexpected weights header")
    meta = read_comments(path)
    return WeightVector([r[0] for r in rows[1:]], [float(r[1]) for r in rows[1:]], int(meta.get("bins", 0)))
