"""Wet-bulb temperature and sigmoid rain/snow partitioning.

Saturation vapour pressure uses the Magnus form with Bolton (1980) constants

    e_s(T) = 611.2 * exp(17.67 * (T - 273.15) / (T - 29.65))      [Pa, T in K]

and the wet-bulb temperature solves the psychrometric balance

    e_s(Tw) - e = A * p * (T - Tw),   A = 6.62e-4 1/K

with vapour pressure ``e = q p / (0.622 + 0.378 q)`` from specific humidity.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import OutOfRange, TimestampMismatch
from .timeseries import DatedValues, MonthlySeries, MonthStamp, _as_date, month_range

MAGNUS_E0 = 611.2
MAGNUS_A = 17.67
MAGNUS_B = 29.65  # K, i.e. 243.5 degC
T_FREEZE = 273.15
PSYCHROMETRIC_A = 6.62e-4
EPSILON = 0.622

TW_TOLERANCE = 1e-4
BRACKET_WIDTH = 60.0


@dataclass(frozen=True)
class SigmoidParams:
    """Snow fraction ``1 / (1 + exp(steepness * (tw - midpoint_tw)))``.

    The defaults only satisfy the qualitative shape (half snow just above
    freezing, transition over a few kelvin). Override them with a published
    fit where one is available.
    """

    midpoint_tw: float = 273.65
    steepness: float = 1.2
    allow_any_midpoint: bool = False

    def __post_init__(self):
        if not self.steepness > 0:
            raise ValueError(f"steepness must be positive, got {self.steepness}")
        if not self.allow_any_midpoint and not 250.0 <= self.midpoint_tw <= 290.0:
            raise ValueError(
                f"midpoint {self.midpoint_tw} K outside 250..290 K; set allow_any_midpoint to override"
            )


def saturation_vapor_pressure(t):
    """Magnus saturation vapour pressure over water, Pa."""
    t = np.asarray(t, dtype=float)
    return MAGNUS_E0 * np.exp(MAGNUS_A * (t - T_FREEZE) / (t - MAGNUS_B))


def vapor_pressure(q, p):
    q = np.asarray(q, dtype=float)
    return q * p / (EPSILON + (1.0 - EPSILON) * q)


def specific_humidity(e, p):
    """Inverse of :func:`vapor_pressure`."""
    e = np.asarray(e, dtype=float)
    return EPSILON * e / (p - (1.0 - EPSILON) * e)


def _check_ranges(t, q, p):
    if np.any(~((t > 180.0) & (t < 340.0))):
        raise OutOfRange("air temperature must lie in (180, 340) K")
    if np.any(~((q >= 0.0) & (q < 0.05))):
        raise OutOfRange("specific humidity must lie in [0, 0.05) kg/kg")
    if np.any(~((p > 1.0e4) & (p < 1.1e5))):
        raise OutOfRange("pressure must lie in (10000, 110000) Pa")


def wet_bulb_temperature(t_air, q, p):
    """Wet-bulb temperature (K) by bisection to 1e-4 K.

    Works element-wise on arrays. The search starts on ``[t_air - 60, t_air]``
    and widens downward only in the very dry, low-pressure corner where the
    root lies below that bracket.
    """
    scalar = np.ndim(t_air) == 0 and np.ndim(q) == 0 and np.ndim(p) == 0
    t, q, p = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (t_air, q, p)))
    _check_ranges(t, q, p)
    e = vapor_pressure(q, p)
    es_air = saturation_vapor_pressure(t)
    if np.any(e > es_air * (1.0 + 1e-6)):
        raise OutOfRange("vapour pressure exceeds saturation (supersaturated input)")

    def balance(tw):
        return saturation_vapor_pressure(tw) - e - PSYCHROMETRIC_A * p * (t - tw)

    hi = t.copy()
    lo = t - BRACKET_WIDTH
    for _ in range(4):
        above = balance(lo) > 0
        if not above.any():
            break
        lo = np.where(above, lo - BRACKET_WIDTH, lo)
    if np.any(balance(lo) > 0):
        raise OutOfRange("wet-bulb root not bracketed within 300 K of the air temperature")

    n_iter = int(math.ceil(math.log2(float(np.max(hi - lo, initial=BRACKET_WIDTH)) / TW_TOLERANCE)))
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        pos = balance(mid) > 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
    tw = 0.5 * (lo + hi)
    # saturated air: the balance is non-positive over the whole bracket
    tw = np.where(e >= es_air, t, np.minimum(tw, t))
    return float(tw) if scalar else tw


def snow_fraction(tw, params: SigmoidParams = SigmoidParams()):
    """Fraction of precipitation falling as snow at wet-bulb temperature ``tw``."""
    scalar = np.ndim(tw) == 0
    out = expit(-params.steepness * (np.asarray(tw, dtype=float) - params.midpoint_tw))
    return float(out) if scalar else out


def monthly_snow_fraction(
    precip: DatedValues,
    tw: DatedValues,
    params: SigmoidParams = SigmoidParams(),
    variable_id: str = "SNOWFRAC",
) -> tuple[MonthlySeries, list[MonthStamp]]:
    """Precipitation-weighted monthly snow fraction.

    Returns the series and the months with zero total precipitation, whose
    value falls back to the unweighted mean fraction.
    """
    pd_ = [_as_date_or_time(d) for d in precip.dates]
    td_ = [_as_date_or_time(d) for d in tw.dates]
    if pd_ != td_:
        raise TimestampMismatch("precipitation and wet-bulb series have different timestamps")
    if np.any(precip.values < 0):
        raise OutOfRange("negative precipitation")
    frac = snow_fraction(np.asarray(tw.values, dtype=float), params)

    groups: dict[MonthStamp, list[int]] = defaultdict(list)
    for i, d in enumerate(pd_):
        groups[MonthStamp(d.year, d.month)].append(i)
    first, last = min(groups), max(groups)
    out = []
    flagged = []
    for stamp in month_range(first, last):
        idx = groups.get(stamp)
        if not idx:
            out.append(np.nan)
            continue
        w = precip.values[idx]
        f = frac[idx]
        total = w.sum()
        if total > 0:
            out.append(float(np.sum(w * f) / total))
        else:
            out.append(float(np.mean(f)))
            flagged.append(stamp)
    return MonthlySeries(variable_id, "1", first, out), flagged


def _as_date_or_time(d):
    if isinstance(d, np.datetime64):
        return d.astype("datetime64[s]").item()
    if hasattr(d, "year") and hasattr(d, "month"):
        return d
    return _as_date(d)
