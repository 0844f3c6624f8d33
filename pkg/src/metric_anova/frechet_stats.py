"""Fréchet means of point patterns and Fréchet-variance test statistics.

Exact Fréchet means under the TT metric are out of reach, so
:func:`frechet_mean` runs a local alternating heuristic:

1. start from one of the data patterns (chosen by a seeded RNG per restart);
2. optimally match the current candidate to every data pattern;
3. move each candidate point to the centroid of its matched partners;
4. drop candidate points that are matched in fewer than half the patterns;
5. when nothing else helps, try adding one point at the centre of the
   densest cluster of unmatched data points.

Every step is accepted only if the recomputed objective does not increase,
so the objective history is monotone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import INVALID, GroupLayout, StatisticValue, seed_sequence
from .pattern_space import MetricParams, PointPattern, as_pattern, distance, tt_match

DEFAULT_RESTARTS = 5


@dataclass
class BarycenterResult:
    pattern: PointPattern
    objective: float
    restarts_used: int
    converged: bool
    history: list = field(default_factory=list)

    def metadata(self) -> dict:
        return {"objective": self.objective, "restarts_used": self.restarts_used,
                "converged": self.converged}


@dataclass
class FrechetGroupSummary:
    V: float
    sigma_sq: float
    lam: float


def frechet_objective(candidate, patterns: Sequence[PointPattern], params: MetricParams) -> float:
    """Sum of squared distances from ``candidate`` to every pattern."""
    return math.fsum(distance(candidate, y, params) ** 2 for y in patterns)


def _key(p: PointPattern):
    return (len(p), p.points.tobytes())


def _canonical_order(patterns):
    # Sorting makes the result independent of the input order of patterns.
    return sorted((as_pattern(p) for p in patterns), key=_key)


def _position_step(zeta: np.ndarray, patterns, matches) -> np.ndarray:
    sums = np.zeros_like(zeta)
    counts = np.zeros(len(zeta))
    for y, m in zip(patterns, matches):
        hit = m.partner >= 0
        np.add.at(sums, np.flatnonzero(hit), y.points[m.partner[hit]])
        counts += hit
    out = zeta.copy()
    moved = counts > 0
    out[moved] = sums[moved] / counts[moved, None]
    return out


def _deletion_step(zeta: np.ndarray, patterns, matches) -> np.ndarray:
    counts = np.zeros(len(zeta))
    for m in matches:
        counts += m.partner >= 0
    keep = counts >= 0.5 * len(patterns)
    return zeta[keep]


def _insertion_candidate(patterns, matches, C: float):
    free = [y.points[m.unmatched_eta] for y, m in zip(patterns, matches) if len(m.unmatched_eta)]
    if not free:
        return None
    pts = np.vstack(free)
    diff = pts[:, None, :] - pts[None, :, :]
    close = np.einsum("ijk,ijk->ij", diff, diff) <= C * C
    centre = int(np.argmax(close.sum(axis=1)))
    return pts[close[centre]].mean(axis=0)


def _single_run(start: PointPattern, patterns, params: MetricParams,
                max_iter: int, tol: float):
    zeta = start.points.copy()
    obj = frechet_objective(zeta, patterns, params)
    history = [obj]
    converged = False

    def accept(candidate):
        nonlocal zeta, obj
        new = frechet_objective(candidate, patterns, params)
        if new <= obj:
            zeta, obj = candidate, new
            history.append(obj)
            return True
        return False

    for _ in range(max_iter):
        before = obj
        matches = [tt_match(zeta, y, params) for y in patterns]
        accept(_position_step(zeta, patterns, matches))
        matches = [tt_match(zeta, y, params) for y in patterns]
        trimmed = _deletion_step(zeta, patterns, matches)
        if len(trimmed) < len(zeta):
            accept(trimmed)
        if before - obj < tol:
            matches = [tt_match(zeta, y, params) for y in patterns]
            extra = _insertion_candidate(patterns, matches, params.C)
            grown = extra is not None and obj - frechet_objective(
                np.vstack([zeta, extra]), patterns, params) > tol
            if grown:
                accept(np.vstack([zeta, extra]))
            else:
                converged = True
                break
    return PointPattern(zeta), obj, converged, history


def frechet_mean(patterns: Sequence, params: MetricParams = MetricParams(),
                 restarts: int = DEFAULT_RESTARTS, seed=None,
                 max_iter: int = 100, tol: float = 1e-8) -> BarycenterResult:
    """Local minimiser of ``z -> sum_j d(y_j, z)**2`` over point patterns.

    Each restart begins at a data pattern drawn from its own child of
    ``SeedSequence(seed)``, so restart ``r`` is the same whatever the total
    number of restarts. The best restart wins; ties go to the lower index.
    """
    if restarts < 1:
        raise ValueError("need at least one restart")
    patterns = _canonical_order(patterns)
    if not patterns:
        raise ValueError("need at least one pattern")
    if len(patterns) == 1:
        return BarycenterResult(patterns[0], 0.0, 1, True, [0.0])
    best = None
    for r, child in enumerate(seed_sequence(seed).spawn(restarts)):
        start = patterns[int(np.random.default_rng(child).integers(len(patterns)))]
        pat, obj, conv, hist = _single_run(start, patterns, params, max_iter, tol)
        if best is None or obj < best.objective:
            best = BarycenterResult(pat, obj, restarts, conv, hist)
    return best


def group_summary(patterns, barycenter: PointPattern, params: MetricParams, n_total: int):
    d2 = np.array([distance(y, barycenter, params) ** 2 for y in patterns])
    V = float(d2.mean())
    sigma_sq = max(float(np.mean(d2 * d2)) - V * V, 0.0)
    return FrechetGroupSummary(V, sigma_sq, len(patterns) / n_total), d2


def frechet_statistics(groups: Sequence[Sequence], params: MetricParams = MetricParams(),
                       restarts: int = DEFAULT_RESTARTS, seed=None, pooled=None):
    """Fréchet-variance statistics ``(U_n, F_n, T_L, T_F, T)``.

    ``U_n`` compares group Fréchet variances, ``F_n`` is the pooled variance
    minus the weighted within-group variances, ``T_L = n U_n / sum(lam/s2)``,
    ``T_F = n F_n**2 / sum(lam**2 s2)`` and ``T = T_L + T_F``.

    ``pooled`` may pass a precomputed barycenter of all observations (it does
    not depend on the grouping).
    """
    groups = [_canonical_order(g) for g in groups]
    if len(groups) < 2:
        raise ValueError("need at least two groups")
    if any(len(g) == 0 for g in groups):
        raise ValueError("every group needs at least one pattern")
    everything = [p for g in groups for p in g]
    n = len(everything)
    seeds = seed_sequence(seed).spawn(len(groups) + 1)
    if pooled is None:
        pooled = frechet_mean(everything, params, restarts, seeds[-1]).pattern
    summaries = []
    for g, s in zip(groups, seeds):
        bary = frechet_mean(g, params, restarts, s).pattern
        summaries.append(group_summary(g, bary, params, n)[0])
    Vp = float(np.mean([distance(y, pooled, params) ** 2 for y in everything]))

    V = np.array([s.V for s in summaries])
    s2 = np.array([s.sigma_sq for s in summaries])
    lam = np.array([s.lam for s in summaries])
    comps = {"V_i": V.tolist(), "sigma_sq_i": s2.tolist(), "lambda_i": lam.tolist(), "V_p": Vp}
    F_n = Vp - float(np.sum(lam * V))
    comps["F_n"] = F_n
    scale = float(np.max(V * V)) if np.any(V > 0) else 0.0
    if np.any(s2 <= 1e-12 * scale) or scale == 0.0:
        nan = math.nan
        comps["U_n"] = nan
        return tuple(StatisticValue(name, nan, dict(comps), (INVALID,))
                     for name in ("U_n", "F_n", "T_L", "T_F", "T"))
    k = len(groups)
    U_n = 0.0
    for a in range(k):
        for b in range(a + 1, k):
            U_n += lam[a] * lam[b] / (s2[a] * s2[b]) * (V[a] - V[b]) ** 2
    comps["U_n"] = U_n
    T_L = n * U_n / float(np.sum(lam / s2))
    T_F = n * F_n ** 2 / float(np.sum(lam * lam * s2))
    comps.update(T_L=T_L, T_F=T_F)
    return (StatisticValue("U_n", U_n, dict(comps)),
            StatisticValue("F_n", F_n, dict(comps)),
            StatisticValue("frechet_tl", T_L, dict(comps)),
            StatisticValue("frechet_tf", T_F, dict(comps)),
            StatisticValue("frechet_t", T_L + T_F, dict(comps)))


class FrechetEvaluator:
    """Adapter for the permutation engine: ``evaluator(patterns, layout)``.

    Group barycenters are recomputed for each relabeling. The pooled
    barycenter does not depend on the labels and is cached; it is obtained
    with the same seed that :func:`frechet_statistics` would use, so the
    observed value equals a direct call.
    """

    def __init__(self, params: MetricParams = MetricParams(),
                 restarts: int = DEFAULT_RESTARTS, seed=0):
        self.params = params
        self.restarts = restarts
        self.seed = seed
        self._pooled = {}

    def __call__(self, patterns, layout: GroupLayout):
        patterns = [as_pattern(p) for p in patterns]
        key = (layout.k, tuple(sorted(_key(p) for p in patterns)))
        if key not in self._pooled:
            child = seed_sequence(self.seed).spawn(layout.k + 1)[-1]
            self._pooled[key] = frechet_mean(patterns, self.params, self.restarts, child).pattern
        groups = [[patterns[j] for j in g] for g in layout.groups]
        out = frechet_statistics(groups, self.params, self.restarts, self.seed,
                                 pooled=self._pooled[key])
        return {v.name: v for v in out if v.name.startswith("frechet_")}
