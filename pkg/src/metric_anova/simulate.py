"""Point-process samplers: CSR, inhomogeneous Poisson and Strauss.

All samplers take a ``numpy.random.Generator``. Strauss patterns come from a
birth/death/move Metropolis-Hastings chain compiled with numba; each draw runs
a fresh chain seeded from the generator, so draws are independent and
reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numba import njit

from .pattern_space import PointPattern, as_pattern


@dataclass(frozen=True)
class Window:
    """Axis-aligned rectangle ``[x0, x1] x [y0, y1]``."""

    x0: float = 0.0
    x1: float = 1.0
    y0: float = 0.0
    y1: float = 1.0

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("window must have positive area")

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def uniform(self, n: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.random((n, 2))
        return np.column_stack([self.x0 + u[:, 0] * (self.x1 - self.x0),
                                self.y0 + u[:, 1] * (self.y1 - self.y0)])


UNIT_SQUARE = Window()


# ------------------------------------------------------------------ models

@dataclass(frozen=True)
class CSR:
    intensity: float = 35.0

    def __post_init__(self):
        if self.intensity < 0:
            raise ValueError("intensity must be nonnegative")


@dataclass(frozen=True)
class GaussianMixture:
    """Intensity proportional to an equal-weight sum of isotropic normals.

    ``sd`` is the per-coordinate standard deviation; ``mass`` the expected
    number of points. Points are not restricted to the window.
    """

    means: tuple
    sd: float
    mass: float = 35.0

    def __post_init__(self):
        if self.sd <= 0:
            raise ValueError("sd must be positive")
        object.__setattr__(self, "means", tuple(tuple(map(float, m)) for m in self.means))


@dataclass(frozen=True)
class ExponentialTilt:
    """Intensity proportional to ``exp(-rate * x)`` on the window, constant in y."""

    rate: float
    mass: float = 35.0


@dataclass(frozen=True)
class Strauss:
    """Strauss process with density ``beta**n * gamma**s_R`` w.r.t. unit-rate CSR."""

    beta: float
    gamma: float
    R: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not 0 <= self.gamma <= 1:
            raise ValueError("gamma must lie in [0, 1]")
        if not self.R > 0:
            raise ValueError("interaction range R must be positive")


# Mixture centres chosen to resemble the example patterns of the simulation study.
THREE_MEANS = ((0.3, 0.3), (0.7, 0.5), (0.4, 0.8))
FOUR_MEANS = THREE_MEANS + ((0.75, 0.15),)

SCENARIOS = {
    "scenario0": CSR(35.0),
    "csr": CSR(35.0),
    "scenario1": GaussianMixture(THREE_MEANS, 0.075),
    "scenario2": GaussianMixture(THREE_MEANS, 0.1),
    "scenario3": GaussianMixture(FOUR_MEANS, 0.1),
    "scenario4": ExponentialTilt(2.0),
    "scenario5": ExponentialTilt(1.0),
    "scenario6": ExponentialTilt(0.02),
}


# ---------------------------------------------------------------- samplers

def sample_csr(intensity: float, window: Window = UNIT_SQUARE, rng=None) -> PointPattern:
    """Homogeneous Poisson process: Poisson count, then i.i.d. uniform points."""
    if intensity < 0:
        raise ValueError("intensity must be nonnegative")
    rng = np.random.default_rng(rng)
    n = rng.poisson(intensity * window.area)
    return PointPattern(window.uniform(n, rng))


def truncated_exponential_x(u: np.ndarray, rate: float, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """Inverse CDF of the density proportional to ``exp(-rate x)`` on ``[lo, hi]``."""
    width = hi - lo
    if abs(rate * width) < 1e-12:
        return lo + u * width
    # F(t) = (1 - exp(-rate t)) / (1 - exp(-rate width)), t = x - lo
    return lo - np.log1p(u * np.expm1(-rate * width)) / rate


def sample_inhomogeneous(model, rng=None, window: Window = UNIT_SQUARE) -> PointPattern:
    """Inhomogeneous Poisson process with ``model.mass`` expected points."""
    if not isinstance(model, (GaussianMixture, ExponentialTilt)):
        raise TypeError(f"not an inhomogeneous model: {model!r}")
    rng = np.random.default_rng(rng)
    n = rng.poisson(model.mass)
    if isinstance(model, GaussianMixture):
        means = np.asarray(model.means)
        comp = rng.integers(len(means), size=n)
        pts = means[comp] + model.sd * rng.standard_normal((n, 2))
        return PointPattern(pts)
    x = truncated_exponential_x(rng.random(n), model.rate, window.x0, window.x1)
    y = window.y0 + rng.random(n) * (window.y1 - window.y0)
    return PointPattern(np.column_stack([x, y]))


def strauss_s_R(pattern, R: float) -> int:
    """Number of unordered point pairs at distance ``<= R``."""
    pts = as_pattern(pattern).points
    n = len(pts)
    if n < 2:
        return 0
    diff = pts[:, None, :] - pts[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    iu = np.triu_indices(n, 1)
    return int(np.count_nonzero(d2[iu] <= R * R))


def strauss_density_ratio(new, old, beta: float, gamma: float, R: float) -> float:
    """Unnormalised density ratio ``f(new)/f(old) = beta**dn * gamma**ds``."""
    new, old = as_pattern(new), as_pattern(old)
    dn = len(new) - len(old)
    ds = strauss_s_R(new, R) - strauss_s_R(old, R)
    if gamma == 0:
        g = 0.0 if ds > 0 else (1.0 if ds == 0 else math.inf)
    else:
        g = gamma ** ds
    return beta ** dn * g


def birth_acceptance_ratio(pattern, u, beta, gamma, R, area) -> float:
    """MH ratio for adding point ``u`` when births and deaths are equally likely."""
    pattern = as_pattern(pattern)
    new = pattern.union(np.asarray(u, dtype=float).reshape(1, 2))
    return strauss_density_ratio(new, pattern, beta, gamma, R) * area / (len(pattern) + 1)


def death_acceptance_ratio(pattern, index, beta, gamma, R, area) -> float:
    """MH ratio for deleting point ``index``."""
    pattern = as_pattern(pattern)
    new = PointPattern(np.delete(pattern.points, index, axis=0))
    return strauss_density_ratio(new, pattern, beta, gamma, R) * len(pattern) / area


def move_acceptance_ratio(pattern, index, u, beta, gamma, R) -> float:
    """MH ratio for relocating point ``index`` to a uniform proposal ``u``."""
    pattern = as_pattern(pattern)
    pts = pattern.points.copy()
    pts[index] = u
    return strauss_density_ratio(PointPattern(pts), pattern, beta, gamma, R)


@njit(cache=True, fastmath=True)
def _close_count(xs, ys, n, px, py, r2):
    # branch-free so the loop vectorises
    c = 0
    for i in range(n):
        dx = xs[i] - px
        dy = ys[i] - py
        c += dx * dx + dy * dy <= r2
    return c


@njit(cache=True)
def _is_close(ax, ay, bx, by, r2):
    dx = ax - bx
    dy = ay - by
    return 1 if dx * dx + dy * dy <= r2 else 0


@njit(cache=True)
def _strauss_chain(beta, gamma, R, x0, y0, w, h, u):
    # u[t] = (proposal type, x, y, point index, acceptance) uniforms for step t
    area = w * h
    r2 = R * R
    cap = 64
    xs = np.empty(cap)
    ys = np.empty(cap)
    n = 0
    for t in range(u.shape[0]):
        kind = u[t, 0]
        if kind < 1.0 / 3.0:
            # birth
            px = x0 + u[t, 1] * w
            py = y0 + u[t, 2] * h
            c = _close_count(xs, ys, n, px, py, r2)
            if gamma == 0.0:
                g = 1.0 if c == 0 else 0.0
            else:
                g = gamma ** c
            if u[t, 4] < beta * g * area / (n + 1):
                if n == cap:
                    cap *= 2
                    nx = np.empty(cap)
                    ny = np.empty(cap)
                    nx[:n] = xs[:n]
                    ny[:n] = ys[:n]
                    xs = nx
                    ys = ny
                xs[n] = px
                ys[n] = py
                n += 1
        elif kind < 2.0 / 3.0:
            # death
            if n == 0:
                continue
            i = min(int(u[t, 3] * n), n - 1)
            c = _close_count(xs, ys, n, xs[i], ys[i], r2) - 1
            # with gamma == 0 the state is hard-core, so c == 0
            ginv = 1.0 if gamma == 0.0 else gamma ** (-c)
            if u[t, 4] < n * ginv / (beta * area):
                xs[i] = xs[n - 1]
                ys[i] = ys[n - 1]
                n -= 1
        else:
            # move
            if n == 0:
                continue
            i = min(int(u[t, 3] * n), n - 1)
            px = x0 + u[t, 1] * w
            py = y0 + u[t, 2] * h
            c_new = _close_count(xs, ys, n, px, py, r2) - _is_close(xs[i], ys[i], px, py, r2)
            c_old = _close_count(xs, ys, n, xs[i], ys[i], r2) - 1
            if gamma == 0.0:
                ok = c_new == 0
            else:
                ok = u[t, 4] < gamma ** (c_new - c_old)
            if ok:
                xs[i] = px
                ys[i] = py
    out = np.empty((n, 2))
    out[:, 0] = xs[:n]
    out[:, 1] = ys[:n]
    return out


DEFAULT_SWEEPS = 100_000


def _run_chain(beta, gamma, R, window, sweeps, rng) -> np.ndarray:
    u = rng.random((int(sweeps), 5))
    return _strauss_chain(float(beta), float(gamma), float(R), float(window.x0), float(window.y0),
                          float(window.x1 - window.x0), float(window.y1 - window.y0), u)


def sample_strauss(beta: float, gamma: float, R: float, window: Window = UNIT_SQUARE,
                   sweeps: int = DEFAULT_SWEEPS, rng=None) -> PointPattern:
    """One Strauss pattern from a fresh MH chain started at the empty pattern.

    The chain runs ``sweeps`` proposals, each a birth, death or move with
    probability 1/3. Birth locations and moves are uniform on the window.
    """
    Strauss(beta, gamma, R)  # validates
    return PointPattern(_run_chain(beta, gamma, R, window, sweeps, np.random.default_rng(rng)))


def strauss_counts(beta, gamma, R, draws, window: Window = UNIT_SQUARE,
                   sweeps: int = DEFAULT_SWEEPS, rng=None) -> np.ndarray:
    """Point counts of ``draws`` independent Strauss chains."""
    Strauss(beta, gamma, R)
    rng = np.random.default_rng(rng)
    return np.array([len(_run_chain(beta, gamma, R, window, sweeps, rng)) for _ in range(draws)])


class CalibrationError(RuntimeError):
    pass


@dataclass
class StraussCalibration:
    beta: float
    mean_count: float
    evaluations: list = field(default_factory=list)


def calibrate_strauss_beta(gamma: float, R: float, target: float = 35.0, rng=None,
                           window: Window = UNIT_SQUARE, draws: int = 2000,
                           sweeps: int = DEFAULT_SWEEPS, rel_tol: float = 0.02,
                           max_evals: int = 60) -> StraussCalibration:
    """Find the activity ``beta`` whose Strauss process has ``target`` expected points per unit area.

    The mean count is increasing in ``beta``; each evaluation estimates it
    from ``draws`` chains. The search starts at ``beta = target`` (exact for
    ``gamma = 1``), doubles to bracket the target and then bisects on the log
    scale until the estimate is within ``rel_tol``.
    """
    if not 0 <= gamma <= 1:
        raise ValueError("gamma must lie in [0, 1]")
    if target <= 0:
        raise ValueError("target intensity must be positive")
    rng = np.random.default_rng(rng)
    goal = target * window.area
    evals = []

    def mean_at(beta):
        m = float(strauss_counts(beta, gamma, R, draws, window, sweeps, rng).mean())
        evals.append((beta, m))
        return m

    def close(m):
        return abs(m - goal) <= rel_tol * goal

    lo = float(target)
    m = mean_at(lo)
    if close(m):
        return StraussCalibration(lo, m, evals)
    if m > goal:
        raise CalibrationError(f"mean count {m:.2f} already exceeds target at beta={lo}")
    hi = lo
    while True:
        hi *= 2.0
        if hi > 1e4 * target:
            raise CalibrationError("no bracket found for beta within [target, 1e4 * target]")
        m = mean_at(hi)
        if close(m):
            return StraussCalibration(hi, m, evals)
        if m > goal:
            break
        lo = hi
    while len(evals) < max_evals:
        mid = math.sqrt(lo * hi)
        m = mean_at(mid)
        if close(m):
            return StraussCalibration(mid, m, evals)
        if m < goal:
            lo = mid
        else:
            hi = mid
    raise CalibrationError(f"bisection did not converge after {max_evals} evaluations")


# ------------------------------------------------------------ dispatching

def sample(model, rng=None, window: Window = UNIT_SQUARE, sweeps: int = DEFAULT_SWEEPS) -> PointPattern:
    """One pattern from any supported model."""
    if isinstance(model, CSR):
        return sample_csr(model.intensity, window, rng)
    if isinstance(model, (GaussianMixture, ExponentialTilt)):
        return sample_inhomogeneous(model, rng, window)
    if isinstance(model, Strauss):
        return sample_strauss(model.beta, model.gamma, model.R, window, sweeps, rng)
    raise TypeError(f"unknown model {model!r}")


def sample_many(model, count: int, rng=None, window: Window = UNIT_SQUARE,
                sweeps: int = DEFAULT_SWEEPS) -> list[PointPattern]:
    rng = np.random.default_rng(rng)
    return [sample(model, rng, window, sweeps) for _ in range(count)]


@lru_cache(maxsize=64)
def calibrated_strauss(gamma: float, R: float = 0.1, target: float = 35.0, seed: int = 0,
                       draws: int = 2000, sweeps: int = DEFAULT_SWEEPS) -> Strauss:
    """Memoised ``Strauss`` model with calibrated activity."""
    cal = calibrate_strauss_beta(gamma, R, target, np.random.default_rng(seed),
                                 draws=draws, sweeps=sweeps)
    return Strauss(cal.beta, gamma, R)


def resolve_model(spec, seed: int = 0):
    """Turn a scenario name or a parameter mapping into a model object.

    Accepted forms: ``"scenario0"`` ... ``"scenario6"``, ``"csr"``,
    ``{"model": "csr", "intensity": 35}``,
    ``{"model": "strauss", "gamma": 0.5, "R": 0.1, "beta": None, "target": 35}``
    (``beta`` omitted or null triggers calibration),
    ``{"model": "mixture", "means": [[x, y], ...], "sd": 0.1}`` and
    ``{"model": "tilt", "rate": 2}``.
    """
    if isinstance(spec, (CSR, GaussianMixture, ExponentialTilt, Strauss)):
        return spec
    if isinstance(spec, str):
        key = spec.lower()
        if key in SCENARIOS:
            return SCENARIOS[key]
        if key.startswith("strauss"):
            return resolve_model({"model": "strauss"}, seed)
        raise ValueError(f"unknown scenario {spec!r}")
    spec = dict(spec)
    kind = str(spec.pop("model", spec.pop("name", ""))).lower()
    if kind in SCENARIOS and not spec:
        return SCENARIOS[kind]
    if kind in ("csr", "poisson"):
        return CSR(float(spec.get("intensity", spec.get("lambda", 35.0))))
    if kind in ("mixture", "gaussian_mixture"):
        return GaussianMixture(tuple(map(tuple, spec["means"])), float(spec["sd"]),
                               float(spec.get("mass", 35.0)))
    if kind in ("tilt", "exponential_tilt"):
        return ExponentialTilt(float(spec["rate"]), float(spec.get("mass", 35.0)))
    if kind == "strauss":
        gamma = float(spec.get("gamma", 0.0))
        R = float(spec.get("R", 0.1))
        beta = spec.get("beta")
        if beta is None:
            return calibrated_strauss(gamma, R, float(spec.get("target", 35.0)),
                                      int(spec.get("calibration_seed", seed)),
                                      int(spec.get("draws", 2000)),
                                      int(spec.get("sweeps", DEFAULT_SWEEPS)))
        return Strauss(float(beta), gamma, R)
    raise ValueError(f"unknown model specification {spec!r}")
