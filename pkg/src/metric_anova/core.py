"""Shared value types: statistic records and group layouts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

# Flags attached to statistic values.
INFINITE = "infinite"
DEGENERATE = "degenerate"
INVALID = "invalid"
NEGATIVE_COVARIANCE = "negative_covariance"


@dataclass
class StatisticValue:
    """A named statistic evaluation with its decomposition terms.

    ``value`` is ``+inf`` when the denominator vanishes with a positive
    numerator, ``0.0`` when both vanish (flagged ``degenerate``) and ``nan``
    when the statistic is undefined (flagged ``invalid``).
    """

    name: str
    value: float
    components: dict = field(default_factory=dict)
    flags: tuple = ()

    @property
    def is_valid(self) -> bool:
        return INVALID not in self.flags

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "components": dict(self.components),
            "flags": list(self.flags),
        }


def flagged_ratio(numerator: float, denominator: float):
    """Return ``(value, flags)`` for ``numerator / denominator``.

    Zero denominators give ``inf`` (numerator > 0) or a degenerate 0, so that
    every outcome stays totally ordered for permutation ranking.
    """
    if denominator > 0:
        return numerator / denominator, ()
    if numerator > 0:
        return math.inf, (INFINITE,)
    return 0.0, (DEGENERATE,)


def scaled_ratio(factor: float, numerator: float, denominator: float):
    """``factor * numerator / denominator`` with the flags of :func:`flagged_ratio`.

    A flagged infinite ratio stays ``+inf`` even when ``factor`` is zero
    (no residual degrees of freedom).
    """
    ratio, flags = flagged_ratio(numerator, denominator)
    return (ratio if math.isinf(ratio) else factor * ratio), flags


class GroupLayout:
    """Assignment of ``n`` observations to ``k`` groups.

    Parameters
    ----------
    labels : sequence of hashable
        Group label of every observation. Group order follows first
        appearance unless ``names`` is given.
    names : sequence of hashable, optional
        Explicit group order.
    """

    def __init__(self, labels: Sequence[Hashable], names: Sequence[Hashable] | None = None):
        labels = list(labels)
        if names is None:
            names = list(dict.fromkeys(labels))
        else:
            names = list(names)
        index = {name: i for i, name in enumerate(names)}
        try:
            codes = np.array([index[lab] for lab in labels], dtype=np.intp)
        except KeyError as exc:
            raise ValueError(f"label {exc.args[0]!r} not among group names") from None
        self.names = names
        self.codes = codes
        self.k = len(names)
        self.sizes = np.bincount(codes, minlength=self.k) if len(codes) else np.zeros(self.k, int)
        self.n = int(len(codes))
        self._groups = [np.flatnonzero(codes == i) for i in range(self.k)]

    @classmethod
    def from_sizes(cls, sizes: Sequence[int]) -> "GroupLayout":
        """Contiguous layout: the first ``sizes[0]`` observations form group 0, etc."""
        labels = np.repeat(np.arange(len(sizes)), sizes)
        return cls(labels.tolist(), names=list(range(len(sizes))))

    @classmethod
    def _from_codes(cls, codes: np.ndarray, names: list) -> "GroupLayout":
        obj = cls.__new__(cls)
        obj.names = names
        obj.codes = codes
        obj.k = len(names)
        obj.sizes = np.bincount(codes, minlength=obj.k)
        obj.n = int(len(codes))
        obj._groups = [np.flatnonzero(codes == i) for i in range(obj.k)]
        return obj

    @property
    def groups(self) -> list[np.ndarray]:
        """Observation indices of each group, ascending."""
        return self._groups

    @property
    def pair_counts(self) -> np.ndarray:
        """``N_i``, the number of within-group pairs."""
        return self.sizes * (self.sizes - 1) // 2

    @property
    def N(self) -> int:
        return int(self.pair_counts.sum())

    @property
    def N_star(self) -> int:
        return int(np.sum(self.sizes * (self.sizes - 1) ** 2))

    @property
    def is_balanced(self) -> bool:
        return self.k > 0 and bool(np.all(self.sizes == self.sizes[0]))

    def permuted(self, perm: np.ndarray) -> "GroupLayout":
        """Layout in which observation ``j`` carries the label of ``perm[j]``."""
        return GroupLayout._from_codes(self.codes[np.asarray(perm)], self.names)

    def require(self, min_size: int, min_groups: int = 2) -> None:
        if self.k < min_groups:
            raise ValueError(f"need at least {min_groups} groups, got {self.k}")
        if np.any(self.sizes < min_size):
            raise ValueError(f"every group needs at least {min_size} observations, sizes={self.sizes.tolist()}")

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"GroupLayout(k={self.k}, sizes={self.sizes.tolist()})"


class TwoWayLayout:
    """Crossed two-factor layout with a common cell size.

    Raises ``ValueError`` unless every (a, b) cell holds the same number of
    observations.
    """

    def __init__(self, factor_a: Sequence[Hashable], factor_b: Sequence[Hashable],
                 names_a: Sequence[Hashable] | None = None,
                 names_b: Sequence[Hashable] | None = None):
        factor_a, factor_b = list(factor_a), list(factor_b)
        if len(factor_a) != len(factor_b):
            raise ValueError("factor vectors differ in length")
        self.a = GroupLayout(factor_a, names_a)
        self.b = GroupLayout(factor_b, names_b)
        self._finish()

    def _finish(self):
        self.k1, self.k2 = self.a.k, self.b.k
        self.n = self.a.n
        cell = self.a.codes * self.k2 + self.b.codes
        counts = np.bincount(cell, minlength=self.k1 * self.k2)
        if len(counts) == 0 or np.any(counts != counts[0]):
            raise ValueError(f"unbalanced two-way design, cell counts={counts.tolist()}")
        self.cell_size = int(counts[0])
        self.cells = GroupLayout._from_codes(cell, list(range(self.k1 * self.k2)))

    @property
    def cell_pairs(self) -> int:
        return self.cell_size * (self.cell_size - 1) // 2

    def permuted(self, perm: np.ndarray) -> "TwoWayLayout":
        perm = np.asarray(perm)
        obj = TwoWayLayout.__new__(TwoWayLayout)
        obj.a = self.a.permuted(perm)
        obj.b = self.b.permuted(perm)
        obj._finish()
        return obj

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"TwoWayLayout(k1={self.k1}, k2={self.k2}, cell_size={self.cell_size})"


def seed_sequence(seed) -> np.random.SeedSequence:
    """Accept an int, ``None``, a sequence of ints or an existing ``SeedSequence``."""
    if isinstance(seed, np.random.SeedSequence):
        # fresh copy: spawning mutates the original's child counter
        return np.random.SeedSequence(seed.entropy, spawn_key=seed.spawn_key,
                                      pool_size=seed.pool_size)
    return np.random.SeedSequence(seed)
