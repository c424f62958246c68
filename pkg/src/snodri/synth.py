"""Deterministic synthetic basin with planted snow-drought winters.

Generative equations (t = month index, m = calendar month, c = cos(2 pi (m - 1) / 12),
e_V = unit-variance AR(1) noise with lag-one correlation 0.5, one stream per
variable, s = noise_std, d = severity of the drought winter covering month t,
else 0; a drought winter ``Y`` covers December of ``Y - 1`` through April of ``Y``):

    TMP   = 278 - 9 c + 1.5 s e_T + 3 d                               K
    APCP  = 80 (1 + 0.7 c) exp(0.35 s e_P - (0.35 s)^2 / 2) (1 - 0.75 d)   mm
    DSWRF = 200 - 110 c + 15 s e_S + 40 d                              W m-2
    PRES  = 80000 + 300 s e_p                                          Pa
    RH    = clip(0.65 + 0.08 s e_H - 0.15 d, 0.2, 0.98)
    SPFH  = specific humidity at RH * e_s(TMP) and PRES                kg/kg
    UGRD  = 2 + s e_U;  VGRD = 0.5 + 0.8 c + s e_V                    m s-1

Snow accounting uses the wet-bulb sigmoid (default parameters):

    snow  = APCP * snow_fraction(Tw(TMP, SPFH, PRES));  rain = APCP - snow
    melt  = min(SWE[t-1] + snow, 25 * max(TMP - 273.15, 0))
    SWE   = SWE[t-1] + snow - melt                                     mm
    W     = rain + melt
    Q     = (5 + 0.4 W[t] + 0.4 W[t-1] + 0.2 W[t-2]) exp(0.1 s e_Q)    mm

The drought mask flags the forcing-depressed months (December to April).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .snowpart import SigmoidParams, saturation_vapor_pressure, snow_fraction, specific_humidity, wet_bulb_temperature
from .timeseries import BasinTable, MonthlySeries, MonthStamp

ROSTER = {
    "APCP": "kg/m2",
    "TMP": "K",
    "DSWRF": "W/m2",
    "SPFH": "kg/kg",
    "PRES": "Pa",
    "UGRD": "m/s",
    "VGRD": "m/s",
    "SWE": "mm",
    "Q": "mm",
}

MELT_FACTOR = 25.0
AR_PHI = 0.5


@dataclass(frozen=True)
class SynthConfig:
    n_years: int = 30
    seed: int = 0
    drought_winters: tuple[tuple[int, float], ...] = ()
    noise_std: float = 1.0
    start_year: int = 1981
    basin_id: str = "synthetic"
    sigmoid: SigmoidParams = field(default_factory=SigmoidParams)

    def __post_init__(self):
        if self.n_years < 5:
            raise ValueError("n_years must be >= 5")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        seen = set()
        for year, sev in self.drought_winters:
            if not 0.0 < sev <= 1.0:
                raise ValueError(f"severity {sev} for {year} outside (0, 1]")
            if not self.start_year < year < self.start_year + self.n_years:
                raise ValueError(f"drought winter {year} outside the generated record")
            if year in seen:
                raise ValueError(f"duplicate drought winter {year}")
            seen.add(year)
        object.__setattr__(self, "drought_winters", tuple((int(y), float(s)) for y, s in self.drought_winters))


def drought_window(year: int) -> tuple[MonthStamp, MonthStamp]:
    return MonthStamp(year - 1, 12), MonthStamp(year, 4)


def _ar1(rng: np.random.Generator, n: int) -> np.ndarray:
    eta = rng.standard_normal(n)
    out = np.empty(n)
    out[0] = eta[0]
    scale = np.sqrt(1.0 - AR_PHI**2)
    for i in range(1, n):
        out[i] = AR_PHI * out[i - 1] + scale * eta[i]
    return out


def generate_synthetic_basin(cfg: SynthConfig) -> tuple[BasinTable, MonthlySeries]:
    """Return the basin table and a 0/1 drought-mask series."""
    n = 12 * cfg.n_years
    start = MonthStamp(cfg.start_year, 1)
    months = np.arange(n) % 12 + 1
    c = np.cos(2.0 * np.pi * (months - 1) / 12.0)
    ordinals = start.ordinal + np.arange(n)

    d = np.zeros(n)
    for year, sev in cfg.drought_winters:
        lo, hi = drought_window(year)
        d[(ordinals >= lo.ordinal) & (ordinals <= hi.ordinal)] = sev

    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x5EED]))
    e = {k: _ar1(rng, n) for k in ("T", "P", "S", "p", "H", "U", "V", "Q")}
    s = cfg.noise_std

    tmp = 278.0 - 9.0 * c + 1.5 * s * e["T"] + 3.0 * d
    sp = 0.35 * s
    apcp = 80.0 * (1.0 + 0.7 * c) * np.exp(sp * e["P"] - 0.5 * sp * sp) * (1.0 - 0.75 * d)
    dswrf = 200.0 - 110.0 * c + 15.0 * s * e["S"] + 40.0 * d
    pres = 80000.0 + 300.0 * s * e["p"]
    rh = np.clip(0.65 + 0.08 * s * e["H"] - 0.15 * d, 0.2, 0.98)
    spfh = specific_humidity(rh * saturation_vapor_pressure(tmp), pres)
    ugrd = 2.0 + s * e["U"]
    vgrd = 0.5 + 0.8 * c + s * e["V"]

    frac = snow_fraction(wet_bulb_temperature(tmp, spfh, pres), cfg.sigmoid)
    snow = apcp * frac
    rain = apcp - snow
    swe = np.empty(n)
    melt = np.empty(n)
    prev = 0.0
    for i in range(n):
        avail = prev + snow[i]
        melt[i] = min(avail, MELT_FACTOR * max(tmp[i] - 273.15, 0.0))
        prev = avail - melt[i]
        swe[i] = prev
    w = rain + melt
    w1 = np.concatenate([[w[0]], w[:-1]])
    w2 = np.concatenate([[w[0], w[0]], w[:-2]])
    q = (5.0 + 0.4 * w + 0.4 * w1 + 0.2 * w2) * np.exp(0.1 * s * e["Q"])

    values = {"APCP": apcp, "TMP": tmp, "DSWRF": dswrf, "SPFH": spfh, "PRES": pres,
              "UGRD": ugrd, "VGRD": vgrd, "SWE": swe, "Q": q}
    table = BasinTable.from_series(cfg.basin_id, (MonthlySeries(k, ROSTER[k], start, values[k]) for k in ROSTER))
    mask = MonthlySeries("DROUGHT_MASK", "1", start, (d > 0).astype(float))
    return table, mask
