import math

import numpy as np
import pytest
from scipy import integrate

from metric_anova.pattern_space import PointPattern
from metric_anova.simulate import (CSR, SCENARIOS, UNIT_SQUARE, ExponentialTilt,
                                   GaussianMixture, Strauss, Window, birth_acceptance_ratio,
                                   calibrate_strauss_beta, CalibrationError,
                                   death_acceptance_ratio, move_acceptance_ratio,
                                   resolve_model, sample, sample_csr, sample_inhomogeneous,
                                   sample_many, sample_strauss, strauss_counts,
                                   strauss_density_ratio, strauss_s_R, truncated_exponential_x)

SWEEPS = 20_000  # enough mixing for the small states used here


# --------------------------------------------------------------------- CSR

def test_csr_zero_intensity():
    rng = np.random.default_rng(0)
    assert all(len(sample_csr(0.0, rng=rng)) == 0 for _ in range(50))
    with pytest.raises(ValueError):
        sample_csr(-1.0)


def test_csr_count_moments():
    rng = np.random.default_rng(1)
    counts = np.array([len(sample_csr(35.0, rng=rng)) for _ in range(10_000)])
    assert abs(counts.mean() - 35) <= 3 * math.sqrt(35 / 10_000)
    assert abs(counts.var() / 35 - 1) < 0.1


def test_csr_points_in_window_and_disjoint_counts_uncorrelated():
    rng = np.random.default_rng(2)
    w = Window(0, 2, -1, 1)
    left, right = [], []
    for _ in range(10_000):
        pts = sample_csr(10.0, w, rng).points
        assert np.all((pts[:, 0] >= 0) & (pts[:, 0] <= 2) & (pts[:, 1] >= -1) & (pts[:, 1] <= 1))
        left.append(np.sum(pts[:, 0] < 1))
        right.append(np.sum(pts[:, 0] >= 1))
    assert abs(np.corrcoef(left, right)[0, 1]) < 0.05
    assert np.mean(left) == pytest.approx(20, abs=0.3)


def test_window_validation():
    with pytest.raises(ValueError):
        Window(0, 0, 0, 1)
    assert UNIT_SQUARE.area == 1.0


def test_samplers_deterministic_given_seed():
    for model in (CSR(35), SCENARIOS["scenario1"], SCENARIOS["scenario4"], Strauss(40, 0.5, 0.1)):
        a = sample(model, np.random.default_rng(5), sweeps=2000)
        b = sample(model, np.random.default_rng(5), sweeps=2000)
        assert np.array_equal(a.points, b.points)


# ------------------------------------------------------------ inhomogeneous

def test_truncated_exponential_inverse_cdf():
    u = np.linspace(0, 1, 11)
    x = truncated_exponential_x(u, 2.0)
    cdf = (1 - np.exp(-2 * x)) / (1 - np.exp(-2))
    assert np.allclose(cdf, u, atol=1e-14)
    assert np.allclose(truncated_exponential_x(u, 0.0), u)
    assert np.allclose(truncated_exponential_x(u, -1.5, 1, 3),
                       1 + np.log1p(u * np.expm1(1.5 * 2)) / 1.5)


def test_tilt_mean_matches_quadrature():
    model = SCENARIOS["scenario4"]
    rng = np.random.default_rng(3)
    xs = np.concatenate([sample_inhomogeneous(model, rng).points[:, 0] for _ in range(3000)])
    assert len(xs) > 100_000
    num = integrate.quad(lambda t: t * math.exp(-2 * t), 0, 1)[0]
    den = integrate.quad(lambda t: math.exp(-2 * t), 0, 1)[0]
    assert abs(xs.mean() - num / den) < 0.005


def test_near_uniform_tilt():
    rng = np.random.default_rng(4)
    xs = np.concatenate([sample(SCENARIOS["scenario6"], rng).points[:, 0] for _ in range(2000)])
    assert xs.mean() == pytest.approx(0.5, abs=0.01)


def test_mixture_counts_and_spread():
    rng = np.random.default_rng(6)
    model = SCENARIOS["scenario1"]
    pats = [sample_inhomogeneous(model, rng) for _ in range(10_000)]
    assert abs(np.mean([len(p) for p in pats]) - 35) < 1
    pts = np.concatenate([p.points for p in pats[:2000]])
    means = np.asarray(model.means)
    nearest = np.argmin(((pts[:, None, :] - means[None]) ** 2).sum(-1), axis=1)
    resid = pts - means[nearest]
    assert resid.std() == pytest.approx(0.075, rel=0.05)


def test_model_validation():
    with pytest.raises(ValueError):
        GaussianMixture(((0.5, 0.5),), 0.0)
    with pytest.raises(ValueError):
        Strauss(35, 1.5, 0.1)
    with pytest.raises(ValueError):
        Strauss(35, 0.5, 0.0)
    with pytest.raises(ValueError):
        Strauss(0, 0.5, 0.1)
    with pytest.raises(TypeError):
        sample_inhomogeneous(CSR(3))


def test_resolve_model():
    assert resolve_model("scenario2") == SCENARIOS["scenario2"]
    assert resolve_model({"model": "csr", "intensity": 10}) == CSR(10)
    assert resolve_model({"model": "tilt", "rate": 1}) == ExponentialTilt(1.0)
    m = resolve_model({"model": "mixture", "means": [[0.5, 0.5]], "sd": 0.2})
    assert m.means == ((0.5, 0.5),)
    assert resolve_model({"model": "strauss", "beta": 50, "gamma": 0.2}) == Strauss(50, 0.2, 0.1)
    with pytest.raises(ValueError):
        resolve_model("nonsense")


# ------------------------------------------------------------------ Strauss

def test_s_R_definition(rng):
    assert strauss_s_R(PointPattern.empty(), 0.1) == 0
    assert strauss_s_R(PointPattern([[0.5, 0.5]]), 0.1) == 0
    assert strauss_s_R(PointPattern([[0.0, 0.0], [0.0, 0.25]]), 0.25) == 1
    pts = rng.random((40, 2))
    brute = sum(1 for i in range(40) for j in range(i + 1, 40)
                if math.dist(pts[i], pts[j]) <= 0.15)
    assert strauss_s_R(PointPattern(pts), 0.15) == brute


def test_acceptance_ratios_on_small_states():
    beta, gamma, R, area = 30.0, 0.4, 0.1, 1.0
    one = PointPattern([[0.5, 0.5]])
    two = PointPattern([[0.5, 0.5], [0.55, 0.5]])
    far = PointPattern([[0.5, 0.5], [0.9, 0.9]])
    assert strauss_density_ratio(two, one, beta, gamma, R) == pytest.approx(beta * gamma)
    assert strauss_density_ratio(far, one, beta, gamma, R) == pytest.approx(beta)
    assert strauss_density_ratio(two, far, beta, gamma, R) == pytest.approx(gamma)
    assert strauss_density_ratio(two, one, beta, 0.0, R) == 0.0
    # birth: density ratio times proposal correction area / (n + 1)
    assert birth_acceptance_ratio(one, [0.55, 0.5], beta, gamma, R, area) == pytest.approx(beta * gamma / 2)
    assert death_acceptance_ratio(two, 1, beta, gamma, R, area) == pytest.approx(2 / (beta * gamma))
    # detailed balance: forward times reverse ratio is one
    fwd = birth_acceptance_ratio(one, [0.55, 0.5], beta, gamma, R, area)
    assert fwd * death_acceptance_ratio(two, 1, beta, gamma, R, area) == pytest.approx(1.0)
    assert move_acceptance_ratio(far, 1, [0.55, 0.5], beta, gamma, R) == pytest.approx(gamma)
    assert move_acceptance_ratio(two, 1, [0.9, 0.9], beta, gamma, R) == pytest.approx(1 / gamma)


def test_strauss_gamma_one_is_csr():
    counts = strauss_counts(35.0, 1.0, 0.1, 3000, sweeps=SWEEPS, rng=np.random.default_rng(7))
    assert abs(counts.mean() - 35) <= 3 * math.sqrt(35 / 3000)
    assert abs(counts.var() / 35 - 1) < 0.12


def test_strauss_hard_core_support_and_ordering():
    rng = np.random.default_rng(8)
    beta, R = 60.0, 0.1
    s = {}
    for gamma in (0.0, 0.5, 1.0):
        vals = []
        for _ in range(1500):
            pat = sample_strauss(beta, gamma, R, sweeps=SWEEPS, rng=rng)
            vals.append(strauss_s_R(pat, R))
            if gamma == 0.0:
                assert vals[-1] == 0
        s[gamma] = np.mean(vals)
    assert s[0.0] < s[0.5] < s[1.0]


def test_strauss_other_window():
    w = Window(2, 3, 5, 7)
    pat = sample_strauss(20.0, 0.0, 0.1, w, sweeps=SWEEPS, rng=np.random.default_rng(9))
    p = pat.points
    assert np.all((p[:, 0] >= 2) & (p[:, 0] <= 3) & (p[:, 1] >= 5) & (p[:, 1] <= 7))
    assert strauss_s_R(pat, 0.1) == 0


def test_calibration_gamma_one_and_errors():
    cal = calibrate_strauss_beta(1.0, 0.1, 35, np.random.default_rng(10), draws=400, sweeps=SWEEPS)
    assert cal.beta == pytest.approx(35, rel=0.02)
    assert cal.evaluations and cal.evaluations[0][0] == 35
    with pytest.raises(ValueError):
        calibrate_strauss_beta(1.2, 0.1)
    with pytest.raises(ValueError):
        calibrate_strauss_beta(0.5, 0.1, target=0)
    # a hard core of radius 0.5 cannot hold 35 points in the unit square
    with pytest.raises(CalibrationError):
        calibrate_strauss_beta(0.0, 0.5, 35, np.random.default_rng(0), draws=20, sweeps=2000)


def test_sample_many_independent():
    pats = sample_many(CSR(35), 5, np.random.default_rng(11))
    assert len({len(p) for p in pats}) > 1 or not all(np.array_equal(pats[0].points, p.points) for p in pats)
