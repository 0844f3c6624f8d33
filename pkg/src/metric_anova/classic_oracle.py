"""Classical one-way / two-way ANOVA and Levene's test on scalar data.

Used as the Euclidean reference for the distance-based statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import GroupLayout, StatisticValue, TwoWayLayout, scaled_ratio


@dataclass
class ScalarSample:
    values: np.ndarray
    layout: GroupLayout | TwoWayLayout

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or len(self.values) != len(self.layout):
            raise ValueError("values must be a vector matching the layout")


def _mean(x) -> float:
    return math.fsum(x) / len(x)


def _close_zero(x: float, scale: float) -> float:
    return 0.0 if abs(x) <= 1e-12 * scale else x


def one_way_f(sample: ScalarSample) -> StatisticValue:
    """One-way ANOVA ``F = (n-k)/(k-1) * MSS/RSS``."""
    layout = sample.layout
    layout.require(1)
    x = sample.values
    n, k = layout.n, layout.k
    grand = _mean(x)
    means = [_mean(x[g]) for g in layout.groups]
    tss = math.fsum((x - grand) ** 2)
    rss = math.fsum(math.fsum((x[g] - m) ** 2) for g, m in zip(layout.groups, means))
    mss = math.fsum(len(g) * (m - grand) ** 2 for g, m in zip(layout.groups, means))
    tss_scale = max(tss, math.fsum(x * x))
    rss, mss = _close_zero(rss, tss_scale), _close_zero(mss, tss_scale)
    value, flags = scaled_ratio((n - k) / (k - 1), mss, rss)
    return StatisticValue("one_way_f", value,
                          {"TSS": tss, "MSS": mss, "RSS": rss}, flags)


def levene_f(sample: ScalarSample) -> StatisticValue:
    """Levene's statistic: one-way F of absolute deviations from group means."""
    layout = sample.layout
    layout.require(2)
    z = np.empty_like(sample.values)
    for g in layout.groups:
        z[g] = np.abs(sample.values[g] - _mean(sample.values[g]))
    out = one_way_f(ScalarSample(z, layout))
    out.name = "levene_f"
    return out


def two_way_f(sample: ScalarSample) -> tuple[StatisticValue, StatisticValue, StatisticValue]:
    """Balanced two-way ANOVA with interaction: ``(Fa, Fb, Fi)``."""
    layout = sample.layout
    if not isinstance(layout, TwoWayLayout):
        raise TypeError("two_way_f needs a TwoWayLayout")
    if layout.cell_size < 2:
        raise ValueError("two-way ANOVA needs at least two observations per cell")
    x = sample.values
    k1, k2, nt, n = layout.k1, layout.k2, layout.cell_size, layout.n
    cell = np.array([_mean(x[g]) for g in layout.cells.groups]).reshape(k1, k2)
    grand = _mean(x)
    a = np.array([_mean(x[g]) for g in layout.a.groups])
    b = np.array([_mean(x[g]) for g in layout.b.groups])
    tss = math.fsum((x - grand) ** 2)
    rss = math.fsum(math.fsum((x[g] - m) ** 2)
                    for g, m in zip(layout.cells.groups, cell.ravel()))
    ssa = k2 * nt * math.fsum((a - grand) ** 2)
    ssb = k1 * nt * math.fsum((b - grand) ** 2)
    ssi = nt * math.fsum(((cell - a[:, None] - b[None, :] + grand) ** 2).ravel())
    scale = max(tss, math.fsum(x * x))
    rss, ssa, ssb, ssi = (_close_zero(v, scale) for v in (rss, ssa, ssb, ssi))
    comps = {"TSS": tss, "RSS": rss, "SSa": ssa, "SSb": ssb, "SSi": ssi}
    resid_df = n - k1 * k2
    out = []
    for name, ss, df in (("Fa", ssa, k1 - 1), ("Fb", ssb, k2 - 1), ("Fi", ssi, (k1 - 1) * (k2 - 1))):
        value, flags = scaled_ratio(resid_df / df, ss, rss)
        out.append(StatisticValue(name, value, dict(comps), flags))
    return tuple(out)


def abs_distance_matrix(values: Sequence[float]) -> np.ndarray:
    """``|x_a - x_b|`` for scalar data, the Euclidean metric on the line."""
    v = np.asarray(values, dtype=np.float64)
    return np.abs(v[:, None] - v[None, :])
