"""Finite point patterns and the transport-transform (TT / RTT) metrics.

A TT distance is an optimal partial matching between two patterns where each
unmatched point costs ``C**p`` and a matched pair costs ``rho**p``. It is
computed exactly by padding the smaller pattern with dummy points and solving
a square assignment problem.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

TT = "TT"
RTT = "RTT"

# Provenance tags for cost-matrix entries.
REAL_REAL = 0
REAL_DUMMY = 1
DUMMY_DUMMY = 2


@dataclass(frozen=True, eq=False)
class PointPattern:
    """A finite multiset of planar points.

    Parameters
    ----------
    points : array_like, shape (n, 2)
        Coordinates. Repeated rows are allowed; ``n = 0`` is the empty pattern.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.size == 0:
            pts = pts.reshape(0, 2)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must have shape (n, 2), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        pts = np.ascontiguousarray(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def empty(cls) -> "PointPattern":
        return cls(np.empty((0, 2)))

    def union(self, other: "PointPattern") -> "PointPattern":
        return PointPattern(np.vstack([self.points, as_pattern(other).points]))

    def __len__(self) -> int:
        return self.points.shape[0]

    def __repr__(self) -> str:
        return f"PointPattern(n={len(self)})"


def as_pattern(obj) -> PointPattern:
    return obj if isinstance(obj, PointPattern) else PointPattern(obj)


@dataclass(frozen=True)
class MetricParams:
    """Penalty ``C``, order ``p`` and kind (``"TT"`` or ``"RTT"``)."""

    C: float = 0.25
    p: float = 2.0
    kind: str = TT

    def __post_init__(self):
        if not (self.C > 0 and np.isfinite(self.C)):
            raise ValueError(f"penalty C must be positive, got {self.C}")
        if not self.p >= 1:
            raise ValueError(f"order p must be >= 1, got {self.p}")
        kind = str(self.kind).upper()
        if kind not in (TT, RTT):
            raise ValueError(f"kind must be TT or RTT, got {self.kind!r}")
        object.__setattr__(self, "kind", kind)

    def with_C(self, C: float) -> "MetricParams":
        return MetricParams(C, self.p, self.kind)


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """Square assignment cost matrix with a provenance tag per entry."""

    cost: np.ndarray
    tags: np.ndarray
    n_rows_real: int
    n_cols_real: int


def _pairwise_power(x: np.ndarray, y: np.ndarray, p: float) -> np.ndarray:
    diff = x[:, None, :] - y[None, :, :]
    sq = np.einsum("ijk,ijk->ij", diff, diff)
    if p == 2:
        return sq
    return np.sqrt(sq) ** p


def build_cost_matrix(xi, eta, params: MetricParams) -> CostMatrix:
    """Cost matrix of the TT assignment problem between ``xi`` (rows) and ``eta``.

    The smaller side is padded with dummies. Real pairs cost
    ``min(rho**p, 2 C**p)`` and real-dummy entries ``C**p``.
    """
    x, y = as_pattern(xi).points, as_pattern(eta).points
    m, n = len(x), len(y)
    size = max(m, n)
    cp = float(params.C) ** params.p
    cost = np.full((size, size), cp)
    tags = np.full((size, size), REAL_DUMMY, dtype=np.int8)
    if m and n:
        cost[:m, :n] = np.minimum(_pairwise_power(x, y, params.p), 2.0 * cp)
        tags[:m, :n] = REAL_REAL
    # One-sided padding: no DUMMY_DUMMY entries arise here.
    return CostMatrix(cost, tags, m, n)


def solve_assignment(cost) -> tuple[np.ndarray, float]:
    """Exact minimum-cost perfect matching of a square cost matrix.

    Returns ``(assignment, total)`` where row ``i`` is matched to column
    ``assignment[i]``.
    """
    if isinstance(cost, CostMatrix):
        cost = cost.cost
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError(f"cost matrix must be square, got shape {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix entries must be finite")
    if np.any(cost < 0):
        raise ValueError("cost matrix entries must be nonnegative")
    if cost.shape[0] == 0:
        return np.empty(0, dtype=np.intp), 0.0
    rows, cols = linear_sum_assignment(cost)
    assignment = np.empty(cost.shape[0], dtype=np.intp)
    assignment[rows] = cols
    total = float(cost[rows, cols].sum())
    return assignment, total


def _canonical(x: PointPattern, y: PointPattern):
    # Fix argument order so that d(x, y) and d(y, x) run the identical computation.
    kx = (len(x), x.points.tobytes())
    ky = (len(y), y.points.tobytes())
    return (x, y) if kx >= ky else (y, x)


def tt_cost(xi, eta, params: MetricParams) -> float:
    """Optimal total TT cost (the p-th power of the TT distance)."""
    x, y = _canonical(as_pattern(xi), as_pattern(eta))
    if len(x) == 0:
        return 0.0
    _, total = solve_assignment(build_cost_matrix(x, y, params))
    return total


def tt_distance(xi, eta, params: MetricParams) -> float:
    """TT distance between two point patterns."""
    return tt_cost(xi, eta, params) ** (1.0 / params.p)


def rtt_distance(xi, eta, params: MetricParams) -> float:
    """TT distance divided by ``max(|xi|, |eta|) ** (1/p)``; 0 for two empty patterns."""
    xi, eta = as_pattern(xi), as_pattern(eta)
    size = max(len(xi), len(eta))
    if size == 0:
        return 0.0
    return tt_distance(xi, eta, params) / size ** (1.0 / params.p)


def distance(xi, eta, params: MetricParams) -> float:
    """Dispatch on ``params.kind``."""
    if params.kind == RTT:
        return rtt_distance(xi, eta, params)
    return tt_distance(xi, eta, params)


@dataclass
class Matching:
    """Optimal TT matching of ``xi`` against ``eta``.

    ``partner[i]`` is the index in ``eta`` matched to point ``i`` of ``xi``,
    or -1 if that point is left unmatched. Pairs whose cost reached the
    ``2 C**p`` cap are reported as unmatched on both sides, which is
    cost-equivalent.
    """

    partner: np.ndarray
    pair_cost: np.ndarray
    unmatched_eta: np.ndarray
    total: float


def tt_match(xi, eta, params: MetricParams) -> Matching:
    xi, eta = as_pattern(xi), as_pattern(eta)
    m, n = len(xi), len(eta)
    partner = np.full(m, -1, dtype=np.intp)
    pair_cost = np.zeros(m)
    if max(m, n) == 0:
        return Matching(partner, pair_cost, np.empty(0, dtype=np.intp), 0.0)
    cm = build_cost_matrix(xi, eta, params)
    assignment, total = solve_assignment(cm)
    cap = 2.0 * float(params.C) ** params.p
    matched_eta = np.zeros(n, dtype=bool)
    for i in range(m):
        j = assignment[i]
        if j < n and cm.cost[i, j] < cap:
            partner[i] = j
            pair_cost[i] = cm.cost[i, j]
            matched_eta[j] = True
    return Matching(partner, pair_cost, np.flatnonzero(~matched_eta), total)


@dataclass
class DistanceMatrix:
    """Symmetric matrix of pairwise distances between observations.

    Stored as a full square array; symmetric with zero diagonal by
    construction.
    """

    data: np.ndarray
    ids: tuple = ()
    params: MetricParams | None = None

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError(f"distance matrix must be square, got {d.shape}")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValueError("distances must be finite and nonnegative")
        if not np.array_equal(d, d.T):
            raise ValueError("distance matrix is not symmetric")
        if np.any(np.diag(d) != 0):
            raise ValueError("distance matrix needs a zero diagonal")
        self.data = d
        if not self.ids:
            self.ids = tuple(range(d.shape[0]))
        elif len(self.ids) != d.shape[0]:
            raise ValueError("ids do not match matrix dimension")
        self.ids = tuple(self.ids)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    def __len__(self) -> int:
        return self.n

    def reindexed(self, order) -> "DistanceMatrix":
        """Matrix whose observation ``j`` is observation ``order[j]`` of this one."""
        order = np.asarray(order)
        return DistanceMatrix(self.data[np.ix_(order, order)],
                              tuple(self.ids[i] for i in order), self.params)

    def condensed(self) -> np.ndarray:
        return self.data[np.triu_indices(self.n, 1)]


def as_matrix(D) -> np.ndarray:
    return D.data if isinstance(D, DistanceMatrix) else np.asarray(D, dtype=np.float64)


def _rows(args):
    patterns, params, rows = args
    out = []
    for i in rows:
        out.append([distance(patterns[i], patterns[j], params) for j in range(i + 1, len(patterns))])
    return rows, out


def distance_matrix(patterns: Sequence, params: MetricParams, ids=None, n_jobs: int = 1) -> DistanceMatrix:
    """All pairwise distances of ``patterns`` under ``params``.

    With ``n_jobs > 1`` rows are distributed over worker processes; each entry
    is computed independently so the result does not depend on ``n_jobs``.
    """
    patterns = [as_pattern(p) for p in patterns]
    n = len(patterns)
    if n < 2:
        raise ValueError("need at least two patterns")
    data = np.zeros((n, n))
    if n_jobs > 1:
        chunks = [list(range(s, n, n_jobs)) for s in range(n_jobs)]
        with ProcessPoolExecutor(n_jobs) as pool:
            results = list(pool.map(_rows, [(patterns, params, c) for c in chunks]))
    else:
        results = [_rows((patterns, params, range(n)))]
    for rows, vals in results:
        for i, row in zip(rows, vals):
            data[i, i + 1:] = row
    data = data + data.T  # exact: one side is zero
    return DistanceMatrix(data, tuple(ids) if ids is not None else (), params)


def mean_cardinality(patterns: Sequence) -> float:
    return float(np.mean([len(as_pattern(p)) for p in patterns]))


def adaptive_cutoff(patterns: Sequence, base_C: float = 0.25, base_count: float = 35.0) -> float:
    """Cutoff ``base_C * base_count / mean_cardinality`` for patterns of varying size."""
    nbar = mean_cardinality(patterns)
    if nbar <= 0:
        raise ValueError("adaptive cutoff needs patterns with at least one point on average")
    return base_C * base_count / nbar
