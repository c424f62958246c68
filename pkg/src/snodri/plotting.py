"""Stacked SVG panels: the index on top, indicator series beneath."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import EmptyIntersection  # noqa: E402
from .index import IndexSeries  # noqa: E402
from .timeseries import MonthlySeries  # noqa: E402


def plot_emit(index, indicators: Sequence[MonthlySeries], out, title: str = "", description: str = "") -> Path:
    """Write a self-contained SVG with one panel per series over their common months."""
    s = index.as_monthly() if isinstance(index, IndexSeries) else index
    series = [s, *indicators]
    lo = max(x.start for x in series)
    hi = min(x.end for x in series)
    if hi < lo:
        raise EmptyIntersection("index and indicators share no months")
    n = (hi - lo) + 1
    t = lo.year + (lo.month - 1) / 12.0 + np.arange(n) / 12.0

    with plt.rc_context({"svg.hashsalt": "snodri", "svg.fonttype": "path"}):
        fig, axes = plt.subplots(len(series), 1, sharex=True, figsize=(9, 2.2 * len(series)), squeeze=False)
        for ax, ser in zip(axes[:, 0], series):
            ax.plot(t, ser.slice(lo, hi).values, lw=1.0, color="black" if ser is s else "tab:blue")
            label = ser.variable_id + (f" ({ser.unit})" if ser.unit and ser.unit != "1" else "")
            ax.set_ylabel(label)
        top = axes[0, 0]
        top.axhline(0.0, color="grey", lw=0.8, ls="--")
        if title:
            top.set_title(title)
        axes[-1, 0].set_xlabel("year")
        fig.tight_layout()
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, format="svg", metadata={"Date": None, "Description": description or None})
        plt.close(fig)
    return out
