"""Monte-Carlo studies: rejection counts and null-distribution samples.

A study column compares two point-process models. Each replicate draws
``n_per_group`` patterns from each model, computes the distance matrix once
and runs a permutation test for every requested statistic. Replicate ``r``
of column ``c`` uses the seed stream ``SeedSequence(seed, spawn_key=(c, r))``,
so any replicate can be reproduced on its own and results do not depend on
how replicates are scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from .core import GroupLayout
from .dist_stats import DISTANCE_STATISTICS, levene_ltilde
from .frechet_stats import FrechetEvaluator
from .pattern_space import MetricParams, adaptive_cutoff, distance_matrix
from .perm_engine import chi2_pvalue, chi2_quantile, permutation_test_multi
from .simulate import resolve_model, sample

DISTANCE_NAMES = tuple(DISTANCE_STATISTICS)
FRECHET_NAMES = ("frechet_tl", "frechet_tf", "frechet_t")
ALL_STATISTICS = DISTANCE_NAMES + FRECHET_NAMES


@dataclass
class StudyColumn:
    name: str
    group1: object
    group2: object


@dataclass
class StudyConfig:
    columns: list
    n_per_group: int = 20
    replicates: int = 100
    M: int = 999
    M_frechet: int = 99
    alpha: float = 0.05
    statistics: tuple = DISTANCE_NAMES
    C: float = 0.25
    p: float = 2.0
    kind: str = "TT"
    adaptive_cutoff: bool = False
    restarts: int = 5
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        unknown = set(self.statistics) - set(ALL_STATISTICS)
        if unknown:
            raise ValueError(f"unknown statistics {sorted(unknown)}")
        self.columns = [c if isinstance(c, StudyColumn) else StudyColumn(**c) for c in self.columns]
        if self.n_per_group < 3 and "levene_ltilde" in self.statistics:
            raise ValueError("levene_ltilde needs at least 3 patterns per group")


def table3_columns() -> list[StudyColumn]:
    return [StudyColumn(str(s), f"scenario{s}", "scenario0") for s in range(7)]


def table4_columns(gammas=(0.0, 0.2, 0.4, 0.6, 0.8, 1.0), R: float = 0.1) -> list[StudyColumn]:
    cols = []
    for ref in (1.0, 0.0):
        for g in gammas:
            cols.append(StudyColumn(f"gamma{ref:g}_vs_gamma{g:g}",
                                    {"model": "strauss", "gamma": ref, "R": R},
                                    {"model": "strauss", "gamma": g, "R": R}))
    return cols


PRESETS = {"table3": table3_columns, "table4": table4_columns}


def _params(cfg: StudyConfig, patterns) -> MetricParams:
    C = adaptive_cutoff(patterns, cfg.C) if cfg.adaptive_cutoff else cfg.C
    return MetricParams(C, cfg.p, cfg.kind)


def replicate_seeds(seed, column: int, replicate: int):
    ss = np.random.SeedSequence(seed, spawn_key=(column, replicate))
    data, perm, bary = ss.spawn(3)
    return data, perm, bary


def run_replicate(cfg: StudyConfig, column: int, replicate: int) -> dict:
    """p-values of one simulated dataset; invalid statistics give ``nan``."""
    col = cfg.columns[column]
    data_ss, perm_ss, bary_ss = replicate_seeds(cfg.seed, column, replicate)
    rng = np.random.default_rng(data_ss)
    m1 = resolve_model(col.group1, cfg.seed)
    m2 = resolve_model(col.group2, cfg.seed)
    patterns = [sample(m1, rng) for _ in range(cfg.n_per_group)]
    patterns += [sample(m2, rng) for _ in range(cfg.n_per_group)]
    layout = GroupLayout.from_sizes([cfg.n_per_group, cfg.n_per_group])
    params = _params(cfg, patterns)
    out = {}
    dist_names = [s for s in cfg.statistics if s in DISTANCE_STATISTICS]
    if dist_names:
        D = distance_matrix(patterns, params)
        out.update(_perm_pvalues(lambda d, lay: {s: DISTANCE_STATISTICS[s](d, lay) for s in dist_names},
                                 D, layout, cfg.M, perm_ss, dist_names))
    fr_names = [s for s in cfg.statistics if s in FRECHET_NAMES]
    if fr_names:
        ev = FrechetEvaluator(params, cfg.restarts, bary_ss)
        out.update(_perm_pvalues(ev, patterns, layout, cfg.M_frechet, perm_ss, fr_names))
    return out


def _perm_pvalues(stat, data, layout, M, seed, names) -> dict:
    observed = stat(data, layout)
    valid = [s for s in names if observed[s].is_valid and not math.isnan(observed[s].value)]
    out = {s: math.nan for s in names}
    if valid:
        res = permutation_test_multi(lambda d, lay: {s: stat(d, lay)[s] for s in valid},
                                     data, layout, M, seed)
        out.update({s: r.p_value for s, r in res.items()})
    return out


def resolve_columns(cfg: StudyConfig) -> StudyConfig:
    """Copy of ``cfg`` with model specs replaced by model objects.

    Strauss activities are calibrated here, once, before any work is
    distributed to worker processes.
    """
    cols = [StudyColumn(c.name, resolve_model(c.group1, cfg.seed), resolve_model(c.group2, cfg.seed))
            for c in cfg.columns]
    return replace(cfg, columns=cols)


def _replicate_job(args):
    cfg, c, r = args
    return c, r, run_replicate(cfg, c, r)


def run_study(cfg: StudyConfig, threads: int = 1) -> list[dict]:
    """Rejection counts per (column, statistic), rows ordered by column then statistic."""
    cfg = resolve_columns(cfg)
    jobs = [(cfg, c, r) for c in range(len(cfg.columns)) for r in range(cfg.replicates)]
    if threads > 1:
        with ProcessPoolExecutor(threads) as pool:
            results = list(pool.map(_replicate_job, jobs, chunksize=1))
    else:
        results = [_replicate_job(j) for j in jobs]
    pvals = {}
    for c, r, res in results:
        pvals[(c, r)] = res
    rows = []
    for c, col in enumerate(cfg.columns):
        for s in cfg.statistics:
            ps = np.array([pvals[(c, r)][s] for r in range(cfg.replicates)])
            rows.append({
                "column": col.name, "statistic": s,
                "rejections": int(np.sum(ps <= cfg.alpha)),
                "invalid": int(np.isnan(ps).sum()),
                "replicates": cfg.replicates, "alpha": cfg.alpha,
                "M": cfg.M_frechet if s in FRECHET_NAMES else cfg.M,
            })
    return rows


# ------------------------------------------------------------- null samples

@dataclass
class NullSample:
    """Null values of a chi-square-calibrated statistic and their fit."""

    values: np.ndarray
    df: int
    ks: float
    invalid: int = 0

    def quantile_table(self):
        """Rows ``(rank, empirical value, chi-square quantile at (i-0.5)/R)``."""
        v = np.sort(self.values)
        R = len(v)
        return [(i + 1, float(x), chi2_quantile((i + 0.5) / R, self.df)) for i, x in enumerate(v)]


def ks_distance(values, df: int) -> float:
    """Kolmogorov-Smirnov distance between the sample and chi-square(df)."""
    v = np.sort(np.asarray(values, dtype=float))
    R = len(v)
    cdf = np.array([1.0 - chi2_pvalue(x, df) for x in v])
    upper = np.arange(1, R + 1) / R - cdf
    lower = cdf - np.arange(R) / R
    return float(max(upper.max(), lower.max()))


def _null_value(args):
    model, n_per_group, k, statistic, params, ss, restarts = args
    rng = np.random.default_rng(ss)
    patterns = [sample(model, rng) for _ in range(n_per_group * k)]
    layout = GroupLayout.from_sizes([n_per_group] * k)
    if statistic == "levene_ltilde":
        v, _ = levene_ltilde(distance_matrix(patterns, params), layout)
        return (k - 1) * v.value if v.is_valid else math.nan
    if statistic == "frechet_tl":
        v = FrechetEvaluator(params, restarts, ss)(patterns, layout)["frechet_tl"]
        return v.value if v.is_valid else math.nan
    raise ValueError(f"no chi-square limit implemented for {statistic!r}")


def null_statistic_samples(n_per_group: int, model="csr", statistic: str = "levene_ltilde",
                           replicates: int = 500, seed=0, params: MetricParams = MetricParams(),
                           k: int = 2, restarts: int = 5, threads: int = 1) -> NullSample:
    """Simulate ``replicates`` null datasets (all groups from ``model``).

    Returns the values of ``(k-1) * Ltilde`` (or ``T_L``) with their KS
    distance to chi-square with ``k-1`` degrees of freedom.
    """
    model = resolve_model(model, seed if isinstance(seed, int) else 0)
    children = np.random.SeedSequence(seed).spawn(replicates)
    jobs = [(model, n_per_group, k, statistic, params, c, restarts) for c in children]
    if threads > 1:
        with ProcessPoolExecutor(threads) as pool:
            vals = np.array(list(pool.map(_null_value, jobs, chunksize=4)))
    else:
        vals = np.array([_null_value(j) for j in jobs])
    good = vals[~np.isnan(vals)]
    return NullSample(good, k - 1, ks_distance(good, k - 1), int(np.isnan(vals).sum()))


def config_to_dict(cfg: StudyConfig) -> dict:
    d = asdict(cfg)
    d["statistics"] = list(cfg.statistics)
    return d
