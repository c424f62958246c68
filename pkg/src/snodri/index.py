"""Weighted-sum index and its evaluation against indicator series.

``raw(t) = sum_i w_i z_i(t)`` is z-scored with training-period parameters to
give SnoDRI; negative values indicate drier-than-normal snow conditions.
Evaluation-period rows reuse the stored training parameters.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InsufficientData
from .mi import WeightVector
from .timeseries import DesignMatrix, MonthlySeries, MonthStamp, ZScoreParams

SIGN_THRESHOLD = 0.1  # fraction of the anomaly std below which months are ignored
MIN_OVERLAP = 12


def weight_hash(w: WeightVector) -> str:
    text = ",".join(f"{v}={x!r}" for v, x in zip(w.variable_ids, w.weights.tolist()))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class IndexSeries:
    start: MonthStamp
    values: np.ndarray
    raw: np.ndarray
    params: ZScoreParams
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def stamps(self) -> list[MonthStamp]:
        return [self.start + i for i in range(len(self))]

    @property
    def end(self) -> MonthStamp:
        return self.start + (len(self) - 1)

    def as_monthly(self) -> MonthlySeries:
        return MonthlySeries("SNODRI", "1", self.start, self.values)

    def concat(self, later: "IndexSeries") -> "IndexSeries":
        if later.start != self.end + 1:
            raise ValueError("index segments are not contiguous")
        return IndexSeries(
            self.start,
            np.concatenate([self.values, later.values]),
            np.concatenate([self.raw, later.raw]),
            self.params,
            self.provenance,
        )


def compose_index(
    z: DesignMatrix,
    w: WeightVector,
    params: ZScoreParams | None = None,
    provenance: dict | None = None,
) -> IndexSeries:
    """Weight, sum and standardize the design-matrix columns.

    Without ``params`` the final z-score is fitted on ``z`` itself (training
    period); otherwise the given parameters are applied.
    """
    if tuple(z.column_ids) != tuple(w.variable_ids):
        raise DimensionMismatch(f"weight ids {w.variable_ids} do not match columns {z.column_ids}")
    if not np.any(w.weights > 0):
        raise ValueError("at least one weight must be positive")
    raw = z.values @ w.weights
    if params is None:
        std = float(np.std(raw))
        if std == 0.0:
            raise InsufficientData("weighted sum is constant")
        params = ZScoreParams(float(np.mean(raw)), std)
    prov = {"weight_hash": weight_hash(w)}
    if provenance:
        prov.update(provenance)
    return IndexSeries(z.start, params.apply(raw), raw, params, prov)


@dataclass(frozen=True)
class EvaluationReport:
    start: MonthStamp
    end: MonthStamp
    n_months: int
    pearson_corr_swe_anomaly: float
    pearson_corr_discharge: float
    sign_coincidence: float
    n_sign_months: int
    events: tuple[tuple[MonthStamp, MonthStamp, float, int], ...]
    mean_inside_events: float
    mean_outside_events: float

    @property
    def event_contrast(self) -> float:
        """Mean index outside events minus mean inside (positive = events are drier)."""
        return self.mean_outside_events - self.mean_inside_events


def _window_values(series: MonthlySeries, lo: MonthStamp, hi: MonthStamp) -> np.ndarray:
    return series.slice(lo, hi).values


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    ok = np.isfinite(a) & np.isfinite(b)
    a, b = a[ok], b[ok]
    if a.size < 2 or np.std(a) == 0 or np.std(b) == 0:
        return float("nan")
    return float(np.clip(np.corrcoef(a, b)[0, 1], -1.0, 1.0))


def evaluate_index(
    idx: IndexSeries | MonthlySeries,
    swe_anomaly: MonthlySeries,
    discharge: MonthlySeries,
    event_windows: Sequence[tuple[MonthStamp, MonthStamp]] = (),
) -> EvaluationReport:
    """Compare the index with the SWE anomaly and discharge over their overlap.

    Months whose |SWE anomaly| is below 0.1 of the anomaly's std are left out
    of the sign-coincidence count.
    """
    s = idx.as_monthly() if isinstance(idx, IndexSeries) else idx
    lo = max(s.start, swe_anomaly.start, discharge.start)
    hi = min(s.end, swe_anomaly.end, discharge.end)
    n = (hi - lo) + 1
    if n < MIN_OVERLAP:
        raise InsufficientData(f"only {max(n, 0)} overlapping months; need {MIN_OVERLAP}")
    x = _window_values(s, lo, hi)
    a = _window_values(swe_anomaly, lo, hi)
    q = _window_values(discharge, lo, hi)

    finite_a = a[np.isfinite(a)]
    thr = SIGN_THRESHOLD * (np.std(finite_a) if finite_a.size else 0.0)
    counted = np.isfinite(a) & np.isfinite(x) & (np.abs(a) >= thr) & (np.abs(a) > 0)
    n_sign = int(counted.sum())
    coincidence = float(np.mean(np.sign(x[counted]) == np.sign(a[counted]))) if n_sign else float("nan")

    ordinals = lo.ordinal + np.arange(n)
    inside = np.zeros(n, dtype=bool)
    events = []
    for start, end in event_windows:
        sel = (ordinals >= start.ordinal) & (ordinals <= end.ordinal) & np.isfinite(x)
        inside |= sel
        events.append((start, end, float(np.mean(x[sel])) if sel.any() else float("nan"), int(sel.sum())))
    finite = np.isfinite(x)
    mean_in = float(np.mean(x[inside & finite])) if (inside & finite).any() else float("nan")
    mean_out = float(np.mean(x[~inside & finite])) if (~inside & finite).any() else float("nan")

    return EvaluationReport(
        start=lo,
        end=hi,
        n_months=n,
        pearson_corr_swe_anomaly=_pearson(x, a),
        pearson_corr_discharge=_pearson(x, q),
        sign_coincidence=coincidence,
        n_sign_months=n_sign,
        events=tuple(events),
        mean_inside_events=mean_in,
        mean_outside_events=mean_out,
    )
