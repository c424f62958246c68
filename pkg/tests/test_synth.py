import numpy as np
import pytest

from snodri.synth import ROSTER, SynthConfig, drought_window, generate_synthetic_basin
from snodri.timeseries import MonthStamp

WINTERS = ((1985, 1.0), (1990, 0.3), (1995, 1.0), (2000, 0.3), (2005, 1.0))


@pytest.fixture(scope="module")
def basin():
    return generate_synthetic_basin(SynthConfig(n_years=30, seed=4, drought_winters=WINTERS))


def winter_mean(table, var, year):
    lo, hi = drought_window(year)
    return float(np.mean(table[var].slice(lo, hi).values))


class TestGenerator:
    def test_deterministic(self, basin):
        table, mask = generate_synthetic_basin(SynthConfig(n_years=30, seed=4, drought_winters=WINTERS))
        for v in ROSTER:
            np.testing.assert_array_equal(table[v].values, basin[0][v].values)
        np.testing.assert_array_equal(mask.values, basin[1].values)

    def test_seed_changes_output(self, basin):
        table, _ = generate_synthetic_basin(SynthConfig(n_years=30, seed=5, drought_winters=WINTERS))
        assert not np.array_equal(table["TMP"].values, basin[0]["TMP"].values)

    def test_shape_and_stamps(self, basin):
        table, mask = basin
        assert set(table.variables) == set(ROSTER)
        for v in ROSTER:
            s = table[v]
            assert s.start == MonthStamp(1981, 1) and len(s) == 360 and s.unit == ROSTER[v]
            assert np.all(np.isfinite(s.values))
        assert mask.start == MonthStamp(1981, 1) and len(mask) == 360

    def test_nonnegative(self, basin):
        table, _ = basin
        for v in ("APCP", "SWE", "Q", "SPFH", "DSWRF"):
            assert np.all(table[v].values >= 0), v

    def test_mask_covers_december_to_april(self, basin):
        _, mask = basin
        assert mask.values.sum() == 5 * len(WINTERS)
        lo, hi = drought_window(1995)
        assert lo == MonthStamp(1994, 12) and hi == MonthStamp(1995, 4)
        np.testing.assert_array_equal(mask.slice(lo, hi).values, 1.0)

    def test_drought_winters_have_less_snow(self, basin):
        table, _ = basin
        dry = {y for y, _ in WINTERS}
        normal = [winter_mean(table, "SWE", y) for y in range(1982, 2011) if y not in dry]
        severe = [winter_mean(table, "SWE", y) for y, s in WINTERS if s == 1.0]
        mild = [winter_mean(table, "SWE", y) for y, s in WINTERS if s == 0.3]
        assert max(severe) < min(mild)
        assert np.mean(severe) < 0.5 * np.mean(normal)

    def test_no_droughts_mask_empty(self):
        _, mask = generate_synthetic_basin(SynthConfig(n_years=6))
        assert mask.values.sum() == 0

    def test_noiseless_is_periodic_before_snow_memory(self):
        table, _ = generate_synthetic_basin(SynthConfig(n_years=6, noise_std=0.0))
        t = table["TMP"].values
        np.testing.assert_allclose(t[:12], t[12:24], rtol=0, atol=1e-12)


class TestConfig:
    @pytest.mark.parametrize("kw", [
        {"n_years": 4},
        {"noise_std": -1.0},
        {"drought_winters": ((1990, 0.0),)},
        {"drought_winters": ((1990, 1.5),)},
        {"drought_winters": ((1981, 1.0),)},
        {"drought_winters": ((2030, 1.0),)},
        {"drought_winters": ((1990, 1.0), (1990, 0.5))},
    ])
    def test_rejected(self, kw):
        with pytest.raises(ValueError):
            SynthConfig(**kw)
