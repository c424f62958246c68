import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from snodri.errors import (
    EmptyIntersection,
    IncompleteMonth,
    InsufficientData,
    MissingValue,
    MissingVariable,
    ZeroVariance,
)
from snodri.timeseries import (
    BasinTable,
    DatedValues,
    MonthlySeries,
    MonthStamp,
    ZScoreParams,
    aggregate_daily_to_monthly,
    align,
    climatological_zscore,
    month_range,
    monthly_climatology_anomaly,
    standardize,
)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def days_of(year, month, value):
    n = MonthStamp(year, month).days()
    return DatedValues([dt.date(year, month, d) for d in range(1, n + 1)], np.full(n, value))


def series(var, start, values):
    return MonthlySeries(var, "", start, np.asarray(values, dtype=float))


class TestMonthStamp:
    def test_arithmetic(self):
        s = MonthStamp(1999, 11)
        assert s + 3 == MonthStamp(2000, 2)
        assert MonthStamp(2000, 2) - s == 3
        assert s - 11 == MonthStamp(1998, 12)

    def test_parse_and_format(self):
        assert MonthStamp.parse("2004-07") == MonthStamp(2004, 7)
        assert MonthStamp.parse("2004-07-19") == MonthStamp(2004, 7)
        assert str(MonthStamp(987, 3)) == "0987-03"

    def test_bad_month(self):
        with pytest.raises(ValueError):
            MonthStamp(2000, 13)

    def test_range_inclusive(self):
        r = month_range(MonthStamp(2000, 11), MonthStamp(2001, 2))
        assert [str(m) for m in r] == ["2000-11", "2000-12", "2001-01", "2001-02"]

    @given(st.integers(0, 30000), st.integers(-500, 500))
    def test_ordinal_round_trip(self, o, k):
        s = MonthStamp.from_ordinal(o)
        assert s.ordinal == o
        assert (s + k) - s == k


class TestAggregate:
    def test_constant_sum(self):
        m = aggregate_daily_to_monthly(days_of(2001, 1, 2.0), "sum")
        assert m.values.tolist() == [62.0]

    def test_constant_mean(self):
        m = aggregate_daily_to_monthly(days_of(2001, 2, 270.0), "mean")
        assert m.values.tolist() == [270.0]

    def test_missing_day_rejected(self):
        d = days_of(2001, 1, 1.0)
        keep = [i for i in range(31) if i != 13]
        gappy = DatedValues([d.dates[i] for i in keep], d.values[keep])
        with pytest.raises(IncompleteMonth):
            aggregate_daily_to_monthly(gappy, "sum", "reject")

    def test_missing_day_skipped(self):
        d = days_of(2001, 1, 1.0)
        vals = d.values.copy()
        vals[13] = np.nan
        m = aggregate_daily_to_monthly(DatedValues(d.dates, vals), "mean", "skip")
        assert m.values[0] == 1.0

    def test_spans_months(self):
        a, b = days_of(2001, 12, 1.0), days_of(2002, 1, 3.0)
        m = aggregate_daily_to_monthly(DatedValues(a.dates + b.dates, np.r_[a.values, b.values]), "sum")
        assert m.start == MonthStamp(2001, 12)
        assert m.values.tolist() == [31.0, 93.0]

    @settings(max_examples=50)
    @given(arrays(float, 30, elements=st.floats(0, 1e4, allow_nan=False)))
    def test_sum_is_exact(self, v):
        dates = [dt.date(2003, 4, d) for d in range(1, 31)]
        m = aggregate_daily_to_monthly(DatedValues(dates, v), "sum")
        assert m.values[0] == math.fsum(v.tolist())


class TestStandardize:
    def test_population_std(self):
        z, p = standardize(series("x", MonthStamp(2000, 1), [1, 2, 3]))
        np.testing.assert_allclose(z.values, [-1.224744871391589, 0.0, 1.224744871391589], atol=1e-12)
        assert p.std == pytest.approx(math.sqrt(2 / 3), abs=1e-15)

    def test_constant(self):
        with pytest.raises(ZeroVariance):
            standardize(series("x", MonthStamp(2000, 1), [5, 5, 5]))

    def test_stored_params_applied(self):
        z, _ = standardize(series("x", MonthStamp(2000, 1), [1, 2]), ZScoreParams(1.0, 2.0))
        assert z.values.tolist() == [0.0, 0.5]

    @settings(max_examples=60)
    @given(arrays(float, st.integers(3, 40), elements=finite))
    def test_idempotent_and_invertible(self, v):
        s = series("x", MonthStamp(2000, 1), v)
        if np.std(v) < 1e-6 * max(1.0, np.max(np.abs(v))):
            return
        z, p = standardize(s)
        z2, _ = standardize(z)
        np.testing.assert_allclose(z2.values, z.values, atol=1e-12)
        np.testing.assert_allclose(p.invert(z.values), v, atol=1e-12 * max(1.0, np.max(np.abs(v))) * 10)


class TestClimatology:
    def test_january_example(self):
        s = series("x", MonthStamp(2000, 1), [10] + [0] * 11 + [14] + [0] * 11)
        a = monthly_climatology_anomaly(s)
        assert a.values[0] == -2.0 and a.values[12] == 2.0
        assert a.variable_id == "x_ANOM"

    def test_single_year_all_zero(self):
        s = series("x", MonthStamp(2000, 1), np.arange(12.0))
        assert np.all(monthly_climatology_anomaly(s).values == 0.0)

    def test_own_climatology_all_zero(self):
        s = series("x", MonthStamp(2000, 1), np.tile(np.arange(12.0) * 3.7, 5))
        np.testing.assert_allclose(monthly_climatology_anomaly(s).values, 0.0, atol=1e-12)

    @settings(max_examples=40)
    @given(arrays(float, st.integers(12, 80), elements=finite))
    def test_monthly_means_vanish(self, v):
        a = monthly_climatology_anomaly(series("x", MonthStamp(2000, 3), v))
        months = a.calendar_months
        for m in range(1, 13):
            assert abs(np.mean(a.values[months == m])) <= 1e-9 * max(1.0, np.max(np.abs(v)))

    def test_zscore_fit_window_only(self):
        rng = np.random.default_rng(0)
        v = rng.standard_normal(120)
        s = series("x", MonthStamp(2000, 1), v)
        window = (MonthStamp(2000, 1), MonthStamp(2004, 12))
        z, p = climatological_zscore(s, window=window)
        poisoned = v.copy()
        poisoned[60:] = 1e6
        z2, p2 = climatological_zscore(series("x", MonthStamp(2000, 1), poisoned), window=window)
        assert p == p2
        np.testing.assert_array_equal(z.values[:60], z2.values[:60])
        sel = z.calendar_months[:60] == 4
        assert np.mean(z.values[:60][sel]) == pytest.approx(0.0, abs=1e-12)
        assert np.std(z.values[:60][sel]) == pytest.approx(1.0, abs=1e-12)

    def test_zscore_needs_two_per_month(self):
        with pytest.raises(InsufficientData):
            climatological_zscore(series("x", MonthStamp(2000, 1), np.arange(12.0)))


class TestAlign:
    def table(self):
        a = series("A", MonthStamp(2000, 1), np.arange(132.0))
        b = series("B", MonthStamp(2005, 1), np.sin(np.arange(132.0)))
        return BasinTable.from_series("b1", [a, b])

    def test_intersection(self):
        dm = align(self.table(), ["A", "B"])
        assert dm.start == MonthStamp(2005, 1) and dm.end == MonthStamp(2010, 12)
        assert dm.values.shape == (72, 2)

    def test_identical_stamps(self):
        t = BasinTable.from_series("b", [series("A", MonthStamp(2000, 1), [1, 2, 3]),
                                         series("B", MonthStamp(2000, 1), [3, 1, 2])])
        dm = align(t, ["A", "B"])
        assert dm.n_rows == 3 and dm.column_ids == ("A", "B")

    def test_missing_variable(self):
        with pytest.raises(MissingVariable):
            align(self.table(), ["A", "XYZ"])

    def test_interior_gap(self):
        v = np.arange(24.0)
        v[5] = np.nan
        t = BasinTable.from_series("b", [series("A", MonthStamp(2000, 1), v)])
        with pytest.raises(MissingValue):
            align(t, ["A"])

    def test_trim_edges(self):
        v = np.arange(24.0)
        v[:3] = np.nan
        t = BasinTable.from_series("b", [series("A", MonthStamp(2000, 1), v)])
        dm = align(t, ["A"], trim_edges=True)
        assert dm.start == MonthStamp(2000, 4) and dm.n_rows == 21

    def test_window_outside(self):
        with pytest.raises(EmptyIntersection):
            align(self.table(), ["A", "B"], window=(MonthStamp(2020, 1), None))

    def test_stored_params_by_name(self):
        t = self.table()
        train = align(t, ["A", "B"], window=(None, MonthStamp(2007, 12)))
        later = align(t, ["A", "B"], standardize_with=dict(zip(train.column_ids, train.params)),
                      window=(MonthStamp(2008, 1), None))
        assert later.params == train.params
        np.testing.assert_allclose(later.column("A"), train.params[0].apply(np.arange(96.0, 132.0)))

    def test_no_missing_and_sorted(self):
        dm = align(self.table(), ["B", "A"])
        assert np.all(np.isfinite(dm.values))
        ords = [s.ordinal for s in dm.stamps]
        assert all(b == a + 1 for a, b in zip(ords, ords[1:]))


class TestBasinTable:
    def test_duplicate_variables(self):
        s = series("A", MonthStamp(2000, 1), [1.0])
        with pytest.raises(ValueError):
            BasinTable.from_series("b", [s, s])

    def test_series_read_only(self):
        s = series("A", MonthStamp(2000, 1), [1.0, 2.0])
        with pytest.raises(ValueError):
            s.values[0] = 3.0
