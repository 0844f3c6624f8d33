"""Permutation tests over observation labels and chi-square tail p-values."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy import special

from .core import INFINITE, StatisticValue, seed_sequence


@dataclass
class PermutationTestResult:
    """Outcome of one permutation test.

    ``rank`` counts from 1 at the largest value among observed and permuted
    statistics; ties with the observed value count against it, so
    ``p_value = rank / (M + 1)`` is conservative.
    """

    statistic: str
    observed: float
    M: int
    rank: int
    seed: object = None
    flags: tuple = ()
    n_invalid: int = 0
    components: dict = field(default_factory=dict)

    @property
    def p_value(self) -> float:
        return self.rank / (self.M + 1)

    def rejects(self, alpha: float = 0.05) -> bool:
        return self.p_value <= alpha

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "observed": self.observed,
            "M": self.M,
            "rank": self.rank,
            "p_value": self.p_value,
            "seed": self.seed,
            "flags": list(self.flags),
            "n_invalid_permutations": self.n_invalid,
            "components": dict(self.components),
        }


def rank_from_top(observed: float, permuted) -> int:
    """``1 + #{permuted >= observed}``; nan (invalid) permuted values never count."""
    permuted = np.asarray(permuted, dtype=float)
    return 1 + int(np.count_nonzero(permuted >= observed))


def permutation_stream(n: int, M: int, seed) -> list[np.ndarray]:
    """``M`` uniform permutations of ``range(n)``, one child RNG stream each."""
    children = seed_sequence(seed).spawn(M)
    return [np.random.default_rng(c).permutation(n) for c in children]


def _as_values(out) -> dict[str, StatisticValue]:
    if isinstance(out, StatisticValue):
        return {out.name: out}
    if isinstance(out, Mapping):
        return dict(out)
    if isinstance(out, (tuple, list)):
        return {v.name: v for v in out}
    return {"statistic": StatisticValue("statistic", float(out))}


def permutation_test_multi(statistic: Callable, data, layout, M: int = 999,
                           seed=None) -> dict[str, PermutationTestResult]:
    """Permutation tests of every statistic returned by ``statistic(data, layout)``.

    All statistics share the same ``M`` relabelings. ``layout.permuted(perm)``
    gives observation ``j`` the label of observation ``perm[j]``; the data are
    never copied, so a cached distance matrix is simply re-read under the new
    group index sets.
    """
    if M < 1:
        raise ValueError("need at least one permutation")
    observed = _as_values(statistic(data, layout))
    for name, v in observed.items():
        if not v.is_valid or math.isnan(v.value):
            raise ValueError(f"statistic {name!r} is invalid on the observed data (flags={v.flags})")
    values = {name: np.empty(M) for name in observed}
    for b, perm in enumerate(permutation_stream(len(layout), M, seed)):
        out = _as_values(statistic(data, layout.permuted(perm)))
        for name in observed:
            v = out[name]
            values[name][b] = v.value if v.is_valid else math.nan
    results = {}
    for name, v in observed.items():
        perm_vals = values[name]
        flags = tuple(v.flags)
        if np.any(np.isposinf(perm_vals)) and INFINITE not in flags:
            flags += ("infinite_permutations",)
        results[name] = PermutationTestResult(
            statistic=name, observed=v.value, M=M, rank=rank_from_top(v.value, perm_vals),
            seed=seed, flags=flags, n_invalid=int(np.isnan(perm_vals).sum()),
            components=dict(v.components))
    return results


def permutation_test(statistic: Callable, data, layout, M: int = 999, seed=None,
                     name: str | None = None) -> PermutationTestResult:
    """Permutation test for a single statistic.

    Parameters
    ----------
    statistic : callable
        ``statistic(data, layout)`` returning a :class:`StatisticValue` or a
        float. When several values are returned, ``name`` picks one.
    data
        Passed through unchanged, e.g. a ``DistanceMatrix`` or a list of
        point patterns.
    layout : GroupLayout or TwoWayLayout
    M : int
        Number of random relabelings.
    seed
        Anything accepted by ``numpy.random.SeedSequence``.
    """
    results = permutation_test_multi(statistic, data, layout, M, seed)
    if name is None:
        if len(results) != 1:
            raise ValueError(f"statistic returned several values {list(results)}; pass name=")
        return next(iter(results.values()))
    return results[name]


def chi2_pvalue(stat_value: float, df: int) -> float:
    """Upper tail ``P(chi2_df >= stat_value)`` via the regularized incomplete gamma."""
    if df < 1:
        raise ValueError("df must be at least 1")
    if not stat_value >= 0:
        raise ValueError(f"chi-square statistic must be nonnegative, got {stat_value}")
    return float(special.gammaincc(df / 2.0, stat_value / 2.0))


def chi2_quantile(prob: float, df: int) -> float:
    """Lower-tail quantile of chi2_df (inverse of ``1 - chi2_pvalue``)."""
    return float(special.gammaincinv(df / 2.0, prob) * 2.0)
