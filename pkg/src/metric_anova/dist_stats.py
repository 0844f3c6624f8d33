"""Test statistics computed from pairwise distances only.

Location: Anderson's pseudo-F (``anderson_f``) and its Brown-Forsythe
variant (``anderson_bf``). Dispersion: the Levene-type ``levene_l`` built on
half within-group distances, its covariance-normalised version
``levene_ltilde`` and the balanced two-way family ``two_way_levene``.

All functions take a :class:`~metric_anova.pattern_space.DistanceMatrix` (or
a plain square array) plus a layout, and use only the entries they need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (DEGENERATE, INVALID, NEGATIVE_COVARIANCE, GroupLayout,
                   StatisticValue, TwoWayLayout, scaled_ratio)
from .pattern_space import as_matrix


def _within(D: np.ndarray, idx: np.ndarray) -> np.ndarray:
    sub = D[np.ix_(idx, idx)]
    return sub[np.triu_indices(len(idx), 1)]


def _fsum(a) -> float:
    # Pairwise summation is numpy's default; switch to exact summation
    # only for large inputs where the error could matter.
    a = np.asarray(a)
    return math.fsum(a.ravel()) if a.size > 10_000 else float(a.sum())


def _snap(x: float, scale: float, rel: float = 1e-12) -> float:
    # Rounding residue of an exactly-zero term is reported as zero.
    return 0.0 if abs(x) <= rel * scale else x


def half_distances(D, layout: GroupLayout) -> list[np.ndarray]:
    """Per-group halves of the within-group distances, in upper-triangle order."""
    D = as_matrix(D)
    if D.shape[0] != layout.n:
        raise ValueError(f"layout has {layout.n} observations, matrix has {D.shape[0]}")
    return [0.5 * _within(D, g) for g in layout.groups]


# ---------------------------------------------------------------- location

def _anderson_terms(D: np.ndarray, layout: GroupLayout):
    D2 = D * D
    tss = _fsum(np.triu(D2, 1)) / layout.n
    within = np.array([_fsum(_within(D2, g)) for g in layout.groups])
    rss = float(np.sum(within / layout.sizes))
    return tss, rss, within


def anderson_f(D, layout: GroupLayout) -> StatisticValue:
    """Anderson's pseudo-F from squared pairwise distances.

    ``F_A = (n-k)/(k-1) * MSS / RSS`` with ``TSS = (1/n) sum_{a<b} d_ab^2``,
    ``RSS = sum_i (1/n_i) sum_{within i} d^2`` and ``MSS = TSS - RSS``.
    """
    D = as_matrix(D)
    layout.require(1)
    n, k = layout.n, layout.k
    tss, rss, _ = _anderson_terms(D, layout)
    mss = _snap(tss - rss, tss)
    value, flags = scaled_ratio((n - k) / (k - 1), mss, rss)
    return StatisticValue("anderson", value,
                          {"TSS": tss, "RSS": rss, "MSS": mss}, flags)


def anderson_bf(D, layout: GroupLayout) -> StatisticValue:
    """Brown-Forsythe variant: MSS over a heteroscedasticity-weighted denominator."""
    D = as_matrix(D)
    layout.require(2)
    n = layout.n
    tss, rss, within = _anderson_terms(D, layout)
    mss = _snap(tss - rss, tss)
    sizes = layout.sizes.astype(float)
    denom = float(np.sum((1 - sizes / n) * within / (sizes * (sizes - 1))))
    value, flags = scaled_ratio(1.0, mss, denom)
    return StatisticValue("anderson_bf", value,
                          {"TSS": tss, "RSS": rss, "MSS": mss, "denominator": denom}, flags)


# -------------------------------------------------------------- dispersion

def _levene_parts(D, layout: GroupLayout, min_size: int):
    D = as_matrix(D)
    layout.require(min_size)
    halves = half_distances(D, layout)
    means = np.array([h.mean() for h in halves])
    rss = sum(_fsum((h - m) ** 2) for h, m in zip(halves, means))
    sizes = layout.sizes.astype(float)
    diff = means[:, None] - means[None, :]
    iu = np.triu_indices(layout.k, 1)
    numerator = float(np.sum((sizes[:, None] * sizes[None, :] * diff ** 2)[iu])) / layout.n
    scale = sum(float(np.dot(h, h)) for h in halves)
    return D, halves, means, _snap(numerator, scale), _snap(rss, scale), scale


def _group_components(means) -> dict:
    return {f"dbar_{i}": float(m) for i, m in enumerate(means)}


def levene_l(D, layout: GroupLayout) -> StatisticValue:
    """Levene-type dispersion statistic on half within-group distances.

    ``L = (N-k)/(k-1) * [(1/n) sum_{i<j} n_i n_j (dbar_i - dbar_j)^2]
    / [sum_i sum_j (d_ij - dbar_i)^2]`` where ``d_ij`` runs over the ``N_i``
    half-distances of group ``i``.
    """
    _, _, means, numerator, rss, _ = _levene_parts(D, layout, 2)
    N, k = layout.N, layout.k
    value, flags = scaled_ratio((N - k) / (k - 1), numerator, rss)
    comps = {"numerator": numerator, "RSS": rss, **_group_components(means)}
    return StatisticValue("levene_l", value, comps, flags)


def levene_l_balanced(D, layout: GroupLayout) -> StatisticValue:
    """Balanced-design form ``sum_i n_i (dbar_i - dbar)^2`` of the numerator.

    Agrees with :func:`levene_l` on balanced layouts; kept as an independent
    cross-check.
    """
    if not layout.is_balanced:
        raise ValueError("levene_l_balanced requires equal group sizes")
    layout.require(2)
    halves = half_distances(D, layout)
    allh = np.concatenate(halves)
    grand = allh.mean()
    means = np.array([h.mean() for h in halves])
    scale = float(np.dot(allh, allh))
    numerator = _snap(float(np.sum(layout.sizes * (means - grand) ** 2)), scale)
    rss = _snap(sum(float(np.sum((h - m) ** 2)) for h, m in zip(halves, means)), scale)
    N, k = layout.N, layout.k
    value, flags = scaled_ratio((N - k) / (k - 1), numerator, rss)
    return StatisticValue("levene_l_balanced", value,
                          {"numerator": numerator, "RSS": rss}, flags)


@dataclass
class NullEstimates:
    """Plug-in estimates of the null covariance terms on the full-distance scale.

    ``gamma_sq_hat`` estimates ``Cov(d(X,Y), d(X,Z))`` and ``sigma_sq_hat``
    estimates ``Var d(X,Y)``; ``4 * gamma_sq_hat / sigma_sq_hat`` is the
    factor relating ``(k-1) L`` to a chi-square law.
    """

    gamma_sq_hat: float
    sigma_sq_hat: float

    @property
    def l_scale(self) -> float:
        return 4.0 * self.gamma_sq_hat / self.sigma_sq_hat if self.sigma_sq_hat > 0 else math.nan


def triple_sum(halves: np.ndarray, size: int) -> float:
    """Sum over ``j1 not in {j2, j3}`` of centred half-distance products.

    ``halves`` is the square matrix of half-distances of one group. The sum
    factorises into ``sum_j1 (sum_{j2 != j1} e_{j1 j2})^2``.
    """
    iu = np.triu_indices(size, 1)
    center = halves[iu].mean()
    e = halves - center
    np.fill_diagonal(e, 0.0)
    rows = e.sum(axis=1)
    return float(np.dot(rows, rows))


def levene_ltilde(D, layout: GroupLayout) -> tuple[StatisticValue, NullEstimates]:
    """Covariance-normalised Levene statistic.

    ``Ltilde = (N*-k)/(k-1) * numerator / (4 T_n)`` with
    ``N* = sum n_i (n_i-1)^2`` and ``T_n`` the within-group triple sum. Under
    the null ``(k-1) Ltilde`` is asymptotically chi-square with ``k-1``
    degrees of freedom. ``T_n <= 0`` makes the statistic invalid (value nan).
    """
    D, halves, means, numerator, rss, scale = _levene_parts(D, layout, 3)
    k = layout.k
    Ns, N = layout.N_star, layout.N
    t_n = 0.0
    for g in layout.groups:
        t_n += triple_sum(0.5 * D[np.ix_(g, g)], len(g))
    # T_n carries n_i-fold more terms than the squared half-distances.
    t_n = _snap(t_n, scale * float(layout.sizes.max()))
    comps = {"numerator": numerator, "T_n": t_n, "RSS": rss, **_group_components(means)}
    estimates = NullEstimates(4.0 * t_n / (Ns - k), 4.0 * rss / (N - k))
    if t_n > 0:
        value, flags = (Ns - k) / (k - 1) * numerator / (4.0 * t_n), ()
    elif t_n == 0 and numerator == 0:
        value, flags = math.nan, (DEGENERATE, INVALID)
    else:
        value, flags = math.nan, (NEGATIVE_COVARIANCE, INVALID)
    return StatisticValue("levene_ltilde", value, comps, flags), estimates


# ----------------------------------------------------------------- two-way

def two_way_levene(D, layout: TwoWayLayout) -> tuple[StatisticValue, ...]:
    """Balanced two-way Levene statistics ``(L, La, Lb, Li)``.

    Only distances within a factor combination enter; cross-cell entries of
    ``D`` are never read.
    """
    if not isinstance(layout, TwoWayLayout):
        raise TypeError("two_way_levene needs a TwoWayLayout")
    if layout.cell_size < 2:
        raise ValueError("two-way Levene needs at least two observations per cell")
    D = as_matrix(D)
    k1, k2, nt = layout.k1, layout.k2, layout.cell_size
    halves = half_distances(D, layout.cells)
    cell_means = np.array([h.mean() for h in halves]).reshape(k1, k2)
    scale = sum(float(np.dot(h, h)) for h in halves)
    rss = _snap(sum(float(np.sum((h - m) ** 2)) for h, m in zip(halves, cell_means.ravel())), scale)
    grand = cell_means.mean()
    a_means = cell_means.mean(axis=1)
    b_means = cell_means.mean(axis=0)
    mss = _snap(float(nt * np.sum((cell_means - grand) ** 2)), scale)
    ssa = _snap(float(k2 * nt * np.sum((a_means - grand) ** 2)), scale)
    ssb = _snap(float(k1 * nt * np.sum((b_means - grand) ** 2)), scale)
    inter = cell_means - a_means[:, None] - b_means[None, :] + grand
    ssi = _snap(float(nt * np.sum(inter ** 2)), scale)
    N = k1 * k2 * layout.cell_pairs
    resid_df = N - k1 * k2
    comps = {"RSS": rss, "MSS": mss, "SSa": ssa, "SSb": ssb, "SSi": ssi}
    out = []
    for name, ss, df in (("L", mss, k1 * k2 - 1), ("La", ssa, k1 - 1),
                         ("Lb", ssb, k2 - 1), ("Li", ssi, (k1 - 1) * (k2 - 1))):
        if df < 1:
            out.append(StatisticValue(name, math.nan, dict(comps), (INVALID,)))
            continue
        value, flags = scaled_ratio(resid_df / df, ss, rss)
        out.append(StatisticValue(name, value, dict(comps), flags))
    return tuple(out)


def two_way_anderson(D, layout: TwoWayLayout) -> tuple[StatisticValue, ...]:
    """Anderson-type two-way pseudo-F statistics ``(F, Fa, Fb, Fi)``.

    Sums of squares are built from squared distances: for any index set the
    centred sum of squares is ``(1/m) sum_{a<b} d_ab^2``; factor and
    interaction terms follow from the balanced decomposition.
    """
    D = as_matrix(D)
    if layout.cell_size < 2:
        raise ValueError("two-way Anderson needs at least two observations per cell")
    D2 = D * D

    def ss(groups):
        return sum(_fsum(_within(D2, g)) / len(g) for g in groups)

    k1, k2, n = layout.k1, layout.k2, layout.n
    tss = _fsum(np.triu(D2, 1)) / n
    rss = ss(layout.cells.groups)
    ssa = _snap(tss - ss(layout.a.groups), tss)
    ssb = _snap(tss - ss(layout.b.groups), tss)
    mss = _snap(tss - rss, tss)
    ssi = _snap(mss - ssa - ssb, tss)
    resid_df = n - k1 * k2
    comps = {"TSS": tss, "RSS": rss, "MSS": mss, "SSa": ssa, "SSb": ssb, "SSi": ssi}
    out = []
    for name, s, df in (("F", mss, k1 * k2 - 1), ("Fa", ssa, k1 - 1),
                        ("Fb", ssb, k2 - 1), ("Fi", ssi, (k1 - 1) * (k2 - 1))):
        value, flags = scaled_ratio(resid_df / df, s, rss)
        out.append(StatisticValue(name, value, dict(comps), flags))
    return tuple(out)


DISTANCE_STATISTICS = {
    "anderson": anderson_f,
    "anderson_bf": anderson_bf,
    "levene_l": levene_l,
    "levene_ltilde": lambda D, layout: levene_ltilde(D, layout)[0],
}
