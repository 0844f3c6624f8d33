import numpy as np
import pytest
from scipy import stats

from metric_anova.classic_oracle import (ScalarSample, abs_distance_matrix, levene_f,
                                         one_way_f, two_way_f)
from metric_anova.core import GroupLayout, TwoWayLayout
from oracles import one_way_textbook


def test_one_way_examples():
    layout = GroupLayout.from_sizes([3, 3])
    s = one_way_f(ScalarSample([1, 2, 3, 4, 5, 6], layout))
    # MSS = 13.5, RSS = 4
    assert s.components["MSS"] == pytest.approx(13.5)
    assert s.components["RSS"] == pytest.approx(4.0)
    assert s.value == pytest.approx(4 * 13.5 / 4)
    s = one_way_f(ScalarSample([1, 1, 1, 2, 2, 2], layout))
    assert s.value == np.inf


def test_one_way_against_references(rng):
    for _ in range(30):
        sizes = rng.integers(2, 9, size=rng.integers(2, 5)).tolist()
        layout = GroupLayout.from_sizes(sizes)
        x = rng.normal(size=layout.n)
        ours = one_way_f(ScalarSample(x, layout))
        assert ours.value == pytest.approx(one_way_textbook(x, layout.groups), rel=1e-12)
        assert ours.value == pytest.approx(stats.f_oneway(*[x[g] for g in layout.groups]).statistic, rel=1e-10)
        c = ours.components
        assert c["TSS"] == pytest.approx(c["MSS"] + c["RSS"], rel=1e-12)


def test_levene_matches_scipy_mean_centred(rng):
    layout = GroupLayout.from_sizes([6, 8, 5])
    x = rng.normal(size=19) * np.repeat([1.0, 2.0, 0.5], [6, 8, 5])
    ref = stats.levene(*[x[g] for g in layout.groups], center="mean").statistic
    assert levene_f(ScalarSample(x, layout)).value == pytest.approx(ref, rel=1e-10)


def test_two_way_decomposition(rng):
    a = np.repeat([0, 1, 2], 8)
    b = np.tile(np.repeat([0, 1], 4), 3)
    layout = TwoWayLayout(a.tolist(), b.tolist())
    x = rng.normal(size=24) + a * 0.3
    fa, fb, fi = two_way_f(ScalarSample(x, layout))
    c = fa.components
    assert c["TSS"] == pytest.approx(c["SSa"] + c["SSb"] + c["SSi"] + c["RSS"], rel=1e-12)
    assert fa.value == pytest.approx(18 / 2 * c["SSa"] / c["RSS"])
    assert fi.value == pytest.approx(18 / 2 * c["SSi"] / c["RSS"])


def test_two_way_null_fa_is_f_distributed():
    # Under the null (k1=3, k2=2, nt=4), Fa ~ F(2, 18).
    rng = np.random.default_rng(99)
    a = np.repeat([0, 1, 2], 8)
    b = np.tile(np.repeat([0, 1], 4), 3)
    layout = TwoWayLayout(a.tolist(), b.tolist())
    vals = [two_way_f(ScalarSample(rng.normal(size=24), layout))[0].value for _ in range(2000)]
    assert stats.kstest(vals, stats.f(2, 18).cdf).statistic < 0.04


def test_gaussian_null_chi_square_limit():
    # (k-1) F approaches chi2_{k-1} for large groups: k = 3.
    rng = np.random.default_rng(4)
    layout = GroupLayout.from_sizes([200, 200, 200])
    vals = [2 * one_way_f(ScalarSample(rng.normal(size=600), layout)).value for _ in range(2000)]
    assert stats.kstest(vals, stats.chi2(2).cdf).statistic < 0.04


def test_abs_distance_matrix():
    D = abs_distance_matrix([0.0, 1.5, -1.0])
    assert D.tolist() == [[0, 1.5, 1], [1.5, 0, 2.5], [1, 2.5, 0]]


def test_sample_validation():
    with pytest.raises(ValueError):
        ScalarSample([1.0, 2.0], GroupLayout.from_sizes([3]))
