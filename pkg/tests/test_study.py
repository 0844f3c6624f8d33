import numpy as np
import pytest
from scipy import stats

from metric_anova.perm_engine import chi2_pvalue
from metric_anova.study import (StudyColumn, StudyConfig, ks_distance, null_statistic_samples,
                                run_replicate, run_study, table3_columns, table4_columns)


def small_config(**kw):
    base = dict(columns=[StudyColumn("a", "scenario0", "scenario0"),
                         StudyColumn("b", "scenario1", "scenario0")],
                n_per_group=5, replicates=4, M=19, statistics=("anderson", "levene_l"))
    base.update(kw)
    return StudyConfig(**base)


def test_presets():
    assert [c.name for c in table3_columns()] == [str(i) for i in range(7)]
    cols = table4_columns()
    assert len(cols) == 12 and cols[0].name == "gamma1_vs_gamma0"
    assert cols[-1].group1["gamma"] == 0.0 and cols[-1].group2["gamma"] == 1.0


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(alpha=1.5)
    with pytest.raises(ValueError):
        small_config(statistics=("nope",))
    with pytest.raises(ValueError):
        small_config(n_per_group=2, statistics=("levene_ltilde",))


def test_replicates_reproducible_and_schedule_free():
    cfg = small_config()
    assert run_replicate(cfg, 1, 2) == run_replicate(cfg, 1, 2)
    serial = run_study(cfg, threads=1)
    parallel = run_study(cfg, threads=2)
    assert serial == parallel
    assert [r["column"] for r in serial] == ["a", "a", "b", "b"]


def test_ks_distance_matches_scipy(rng):
    x = rng.chisquare(1, size=300)
    assert ks_distance(x, 1) == pytest.approx(stats.kstest(x, "chi2", args=(1,)).statistic, abs=1e-12)


def test_null_sample_quantiles():
    res = null_statistic_samples(5, replicates=15, seed=2)
    table = res.quantile_table()
    assert len(table) == len(res.values) and res.df == 1
    assert [row[0] for row in table] == list(range(1, len(table) + 1))
    R = len(table)
    for i, (_, _, q) in enumerate(table):
        assert 1 - chi2_pvalue(q, 1) == pytest.approx((i + 0.5) / R, rel=1e-9)
    assert np.all(np.diff([row[1] for row in table]) >= 0)
