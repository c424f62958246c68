"""Plug-in mutual information from equal-width joint histograms.

Weights are reported in nats and are *not* normalised: the index is
re-standardised after weighting, so any positive rescaling of the weights
cancels out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InsufficientData
from .timeseries import DesignMatrix, MonthlySeries

MIN_BINS = 4
MAX_BINS = 32
EDGE_INFLATION = 1e-9


def default_bins(n: int) -> int:
    """``ceil(sqrt(n / 5))`` clamped to [4, 32]."""
    return int(min(MAX_BINS, max(MIN_BINS, math.ceil(math.sqrt(n / 5.0)))))


@dataclass(frozen=True)
class JointHistogram:
    edges_x: np.ndarray
    edges_y: np.ndarray
    counts: np.ndarray
    degenerate_x: bool = False
    degenerate_y: bool = False

    @property
    def bins_x(self) -> int:
        return self.counts.shape[0]

    @property
    def bins_y(self) -> int:
        return self.counts.shape[1]

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    def transposed(self) -> "JointHistogram":
        return JointHistogram(self.edges_y, self.edges_x, self.counts.T.copy(), self.degenerate_y, self.degenerate_x)


def _axis(values: np.ndarray, bins: int):
    lo = float(values.min())
    hi = float(values.max())
    if hi == lo:
        return np.array([lo - 0.5, lo + 0.5]), np.zeros(values.shape[0], dtype=np.int64), True
    hi = hi + EDGE_INFLATION * (hi - lo)
    width = (hi - lo) / bins
    idx = np.floor((values - lo) / width).astype(np.int64)
    np.clip(idx, 0, bins - 1, out=idx)
    return np.linspace(lo, hi, bins + 1), idx, False


def joint_histogram(x, y, bins: int, bins_y: int | None = None) -> JointHistogram:
    """Tally ``(x, y)`` pairs on equal-width bins spanning each axis' range.

    A constant axis collapses to a single bin and is flagged degenerate.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    by = bins if bins_y is None else bins_y
    if x.shape != y.shape:
        raise DimensionMismatch(f"length mismatch: {x.size} vs {y.size}")
    if bins < 2 or by < 2:
        raise ValueError("need at least 2 bins per axis")
    if x.size < 4 * max(bins, by):
        raise InsufficientData(f"{x.size} samples is fewer than 4 per bin")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite sample")
    ex, ix, dx = _axis(x, bins)
    ey, iy, dy = _axis(y, by)
    nx, ny = len(ex) - 1, len(ey) - 1
    counts = np.bincount(ix * ny + iy, minlength=nx * ny).reshape(nx, ny)
    return JointHistogram(ex, ey, counts, dx, dy)


def mutual_information(h: JointHistogram) -> float:
    """Plug-in mutual information of a joint count table, in nats."""
    c = np.asarray(h.counts, dtype=np.int64)
    n = int(c.sum())
    if n <= 0:
        raise ValueError("empty histogram")
    rows = c.sum(axis=1)
    cols = c.sum(axis=0)
    i, j = np.nonzero(c)
    cij = c[i, j].astype(float)
    # count ratio c*n / (r*s) is exact in float64 well beyond realistic n
    ratio = (cij * n) / (rows[i].astype(float) * cols[j].astype(float))
    mi = float(np.sum(cij / n * np.log(ratio)))
    return max(mi, 0.0)


@dataclass(frozen=True)
class WeightVector:
    variable_ids: tuple[str, ...]
    weights: np.ndarray
    bins: int = 0

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.shape != (len(self.variable_ids),):
            raise DimensionMismatch("one weight per variable required")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        w.setflags(write=False)
        object.__setattr__(self, "variable_ids", tuple(self.variable_ids))
        object.__setattr__(self, "weights", w)

    def scaled(self, c: float) -> "WeightVector":
        return WeightVector(self.variable_ids, self.weights * c, self.bins)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.variable_ids, self.weights.tolist()))

    def ranks(self) -> list[int]:
        """1-based rank of each weight (1 = largest); ties by position."""
        order = sorted(range(len(self.weights)), key=lambda i: (-self.weights[i], i))
        out = [0] * len(order)
        for r, i in enumerate(order, start=1):
            out[i] = r
        return out


def compute_weights(inputs: DesignMatrix, bottleneck, bins: int | None = None) -> WeightVector:
    """MI between every design-matrix column and the bottleneck series."""
    z = bottleneck.values if isinstance(bottleneck, MonthlySeries) else np.asarray(bottleneck, dtype=float)
    if z.shape[0] != inputs.n_rows:
        raise DimensionMismatch(f"bottleneck has {z.shape[0]} values, matrix has {inputs.n_rows} rows")
    b = default_bins(inputs.n_rows) if not bins else int(bins)
    w = [mutual_information(joint_histogram(inputs.values[:, k], z, b)) for k in range(len(inputs.column_ids))]
    return WeightVector(inputs.column_ids, w, b)

