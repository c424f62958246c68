"""Standardized Precipitation Index.

Accumulated precipitation is fitted per calendar month with a mixed
distribution: a point mass ``q0`` at zero plus a two-parameter gamma on the
positive part. The cumulative probability

    H(x) = q0 + (1 - q0) * G(x)    for x > 0
    H(0) = q0 / 2

is clamped to ``[1e-6, 1 - 1e-6]`` and mapped through the standard normal
quantile. Placing zero-precipitation months at the centre of the zero mass
keeps them finite and unbiased.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import special

from .errors import AllZero, DataError, DegenerateFit, InsufficientData
from .timeseries import MonthlySeries, MonthStamp

_logger = logging.getLogger(__name__)

PROB_CLAMP = 1e-6
MIN_FIT_SAMPLES = 10
NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 100


# Wichura (1988), algorithm AS241 PPND16; relative accuracy about 1e-16.
_A = (3.387132872796366608, 133.14166789178437745, 1971.5909503065514427,
      13731.693765509461125, 45921.953931549871457, 67265.770927008700853,
      33430.575583588128105, 2509.0809287301226727)
_B = (1.0, 42.313330701600911252, 687.1870074920579083, 5394.1960214247511077,
      21213.794301586595867, 39307.89580009271061, 28729.085735721942674,
      5226.495278852545925)
_C = (1.42343711074968357734, 4.6303378461565452959, 5.7694972214606914055,
      3.64784832476320460504, 1.27045825245236838258, 0.24178072517745061177,
      0.0227238449892691845833, 7.7454501427834140764e-4)
_D = (1.0, 2.05319162663775882187, 1.6763848301838038494, 0.68976733498510000455,
      0.14810397642748007459, 0.0151986665636164571966, 5.475938084995344946e-4,
      1.05075007164441684324e-9)
_E = (6.6579046435011037772, 5.4637849111641143699, 1.7848265399172913358,
      0.29656057182850489123, 0.026532189526576123093, 0.0012426609473880784386,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 0.59983220655588793769, 0.13692988092273580531, 0.0148753612908506148525,
      7.868691311456132591e-4, 1.8463183175100546818e-5, 1.4215117583164458887e-7,
      2.04426310338993978564e-15)


def _poly(coefs, x):
    out = np.zeros_like(x)
    for c in reversed(coefs):
        out = out * x + c
    return out


def normal_quantile(p):
    """Inverse of the standard normal CDF.

    Accepts scalars or arrays with entries in the open interval (0, 1);
    0 and 1 map to -inf and +inf.
    """
    scalar = np.isscalar(p)
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise ValueError("probabilities must lie in [0, 1]")
    q = p - 0.5
    z = np.empty_like(p)

    central = np.abs(q) <= 0.425
    if central.any():
        qc = q[central]
        r = 0.180625 - qc * qc
        z[central] = qc * _poly(_A, r) / _poly(_B, r)

    tail = ~central
    if tail.any():
        qt = q[tail]
        r = np.where(qt < 0, p[tail], 1.0 - p[tail])
        with np.errstate(divide="ignore"):
            r = np.sqrt(-np.log(r))
        near = r <= 5.0
        val = np.empty_like(r)
        rn = r[near] - 1.6
        val[near] = _poly(_C, rn) / _poly(_D, rn)
        far = ~near & np.isfinite(r)
        rf = r[far] - 5.0
        val[far] = _poly(_E, rf) / _poly(_F, rf)
        z[tail] = np.where(qt < 0, -val, val)
    z[p == 0.0] = -np.inf
    z[p == 1.0] = np.inf

    return float(z) if scalar else z


@dataclass(frozen=True)
class GammaMixedFit:
    q0: float
    shape: float
    scale: float
    n_samples: int
    converged: bool = True

    def __post_init__(self):
        if not (0.0 <= self.q0 < 1.0):
            raise DegenerateFit(f"zero probability {self.q0} outside [0, 1)")
        if not (np.isfinite(self.shape) and np.isfinite(self.scale) and self.shape > 0 and self.scale > 0):
            raise DegenerateFit(f"invalid gamma parameters shape={self.shape} scale={self.scale}")

    def cdf(self, x):
        """Mixed cumulative probability with the zero-mass centre convention."""
        x = np.asarray(x, dtype=float)
        pos = self.q0 + (1.0 - self.q0) * special.gammainc(self.shape, np.maximum(x, 0.0) / self.scale)
        return np.where(x > 0, pos, 0.5 * self.q0)

    def median(self) -> float:
        """Accumulation at which the mixed CDF equals 0.5."""
        if self.q0 >= 0.5:
            return 0.0
        target = (0.5 - self.q0) / (1.0 - self.q0)
        return float(special.gammaincinv(self.shape, target) * self.scale)


def accumulate(precip: MonthlySeries, k: int) -> MonthlySeries:
    """Trailing ``k``-month sums; the first ``k - 1`` entries are NaN."""
    if k < 1:
        raise ValueError(f"timescale must be >= 1, got {k}")
    n = len(precip)
    if k > n:
        raise InsufficientData(f"timescale {k} exceeds series length {n}")
    if k == 1:
        return precip.with_values(precip.values)
    out = np.full(n, np.nan)
    out[k - 1 :] = sliding_window_view(precip.values, k).sum(axis=1)
    return precip.with_values(out)


def _thom_shape(a_stat: float) -> float:
    return (1.0 + np.sqrt(1.0 + 4.0 * a_stat / 3.0)) / (4.0 * a_stat)


def fit_gamma_mixed(samples) -> GammaMixedFit:
    """Fit the zero-inflated gamma by maximum likelihood.

    The shape starts from Thom's approximation of the log-moment statistic
    ``A = ln(mean) - mean(ln x)`` and is refined with Newton steps on
    ``ln(a) - digamma(a) = A``. If Newton does not reach a relative step of
    1e-10 within 100 iterations the Thom estimate is kept and the fit is
    flagged ``converged=False``.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise DataError("non-finite precipitation sample")
    if x.size < MIN_FIT_SAMPLES:
        raise InsufficientData(f"need at least {MIN_FIT_SAMPLES} samples, got {x.size}")
    if np.any(x < 0):
        raise DataError("negative precipitation sample")
    pos = x[x > 0]
    if pos.size == 0:
        raise AllZero("all samples are zero")
    q0 = 1.0 - pos.size / x.size

    mean = float(np.mean(pos))
    a_stat = float(np.log(mean) - np.mean(np.log(pos)))
    if not a_stat > 0:
        raise DegenerateFit("positive samples are all equal; gamma shape undefined")

    thom = _thom_shape(a_stat)
    alpha = thom
    converged = False
    for _ in range(NEWTON_MAX_ITER):
        f = np.log(alpha) - special.digamma(alpha) - a_stat
        fprime = 1.0 / alpha - special.polygamma(1, alpha)
        step = f / fprime
        new = alpha - step
        while new <= 0:
            step *= 0.5
            new = alpha - step
        if abs(new - alpha) <= NEWTON_TOL * alpha:
            alpha = new
            converged = True
            break
        alpha = new
    if not converged or not np.isfinite(alpha):
        _logger.warning("gamma shape Newton iteration did not converge; using Thom estimate")
        alpha = thom
        converged = False
    return GammaMixedFit(q0=q0, shape=float(alpha), scale=mean / float(alpha), n_samples=int(x.size), converged=converged)


@dataclass(frozen=True)
class SpiSeries:
    timescale: int
    start: MonthStamp
    values: np.ndarray
    fits: dict = field(repr=False)
    fit_window: tuple[MonthStamp, MonthStamp] = None

    @property
    def variable_id(self) -> str:
        return f"SPI{self.timescale}"

    def as_monthly(self) -> MonthlySeries:
        return MonthlySeries(self.variable_id, "1", self.start, self.values)


def spi_from_fit(accumulated, fit: GammaMixedFit):
    prob = np.clip(fit.cdf(accumulated), PROB_CLAMP, 1.0 - PROB_CLAMP)
    return normal_quantile(prob)


def compute_spi(
    precip: MonthlySeries,
    k: int,
    fit_window: tuple[MonthStamp | None, MonthStamp | None] | None = None,
) -> SpiSeries:
    """SPI-``k`` for every month of ``precip``.

    One distribution is fitted per calendar month to the ``k``-month
    accumulations ending in that month. By default the whole record is used;
    ``fit_window`` restricts fitting to a training period while the fitted
    distributions are still applied to every month.
    """
    acc = accumulate(precip, k)
    vals = acc.values
    if np.any(vals[np.isfinite(vals)] < 0):
        raise DataError(f"{precip.variable_id}: negative precipitation")
    months = acc.calendar_months
    lo = precip.start if fit_window is None or fit_window[0] is None else max(fit_window[0], precip.start)
    hi = precip.end if fit_window is None or fit_window[1] is None else min(fit_window[1], precip.end)
    ordinals = precip.start.ordinal + np.arange(len(acc))
    in_window = (ordinals >= lo.ordinal) & (ordinals <= hi.ordinal)

    fits = {}
    out = np.full(len(acc), np.nan)
    for m in range(1, 13):
        sel = months == m
        train = vals[sel & in_window & np.isfinite(vals)]
        if train.size < MIN_FIT_SAMPLES:
            raise InsufficientData(
                f"{precip.variable_id} SPI-{k}: only {train.size} accumulations for calendar month {m} "
                f"(need {MIN_FIT_SAMPLES})"
            )
        fit = fit_gamma_mixed(train)
        fits[m] = fit
        target = sel & np.isfinite(vals)
        out[target] = spi_from_fit(vals[target], fit)
    return SpiSeries(timescale=k, start=precip.start, values=out, fits=fits, fit_window=(lo, hi))
