import numpy as np
import pytest

from snodri.errors import EmptyIntersection
from snodri.plotting import plot_emit
from snodri.timeseries import MonthlySeries, MonthStamp


def series(name, start, n, seed=0):
    return MonthlySeries(name, "mm", start, np.random.default_rng(seed).standard_normal(n))


def panels(svg):
    return svg.count('id="axes_')


class TestPlot:
    def test_panel_per_series(self, tmp_path):
        idx = series("SNODRI", MonthStamp(2000, 1), 48)
        out = plot_emit(idx, [series("A", MonthStamp(2000, 6), 60, 1), series("B", MonthStamp(1999, 1), 40, 2)],
                        tmp_path / "p.svg", title="t", description="config_hash=abc")
        svg = out.read_text()
        assert panels(svg) == 3 and "config_hash=abc" in svg

    def test_index_only(self, tmp_path):
        out = plot_emit(series("SNODRI", MonthStamp(2000, 1), 24), [], tmp_path / "sub" / "p.svg")
        assert panels(out.read_text()) == 1

    def test_deterministic(self, tmp_path):
        a = plot_emit(series("SNODRI", MonthStamp(2000, 1), 24), [], tmp_path / "a.svg")
        b = plot_emit(series("SNODRI", MonthStamp(2000, 1), 24), [], tmp_path / "b.svg")
        assert a.read_bytes() == b.read_bytes()

    def test_disjoint(self, tmp_path):
        with pytest.raises(EmptyIntersection):
            plot_emit(series("SNODRI", MonthStamp(2000, 1), 12), [series("A", MonthStamp(2005, 1), 12)],
                      tmp_path / "p.svg")
