import math

import numpy as np
import pytest
from scipy.stats import chi2

from sharplasso import constructions
from sharplasso.errors import (CertificationFailed, InfNormViolated,
                               IrrepresentableViolated, MarginViolated,
                               WeightConditionViolated)
from sharplasso.models import is_allowed
from sharplasso.pairs import certify_pair
from sharplasso.solvers import population_lasso

from conftest import random_sigma


def check_output(out):
    """Every construction output must re-certify from scratch."""
    pair = certify_pair(out.model, out.pair.gamma_sharp, out.pair.lambda_sharp)
    assert pair.linf_residual == out.pair.linf_residual
    assert is_allowed(out.model.sigma_minus, out.model.gamma0).allowed


# --- regression construction ---

def test_regression_gram_realization_is_exact(rng):
    sigma_minus = random_sigma(rng, 6)
    out = constructions.construct_regression(sigma_minus, np.zeros(6),
                                             40, seed=0, t=2.0)
    check_output(out)
    np.testing.assert_allclose(out.model.sigma_minus, sigma_minus,
                               atol=1e-12)


def test_regression_chi_square_improvement():
    # gamma_sharp = 0, identity block, N = 2p: the realized improvement is
    # chi2_{p-1}/N; check it sits within 5 std of the mean (oracle: chi2
    # moments), pooling a few seeds
    p = 41
    m = p - 1
    big_n = 2 * p
    values = []
    for seed in range(5):
        out = constructions.construct_regression(np.eye(m), np.zeros(m),
                                                 big_n, seed=seed, t=3.0)
        values.append(out.witness["chi2_realized"])
    mean = np.mean(values)
    sd = math.sqrt(2.0 * m / len(values))
    assert abs(mean - m) <= 5.0 * sd
    # distributional sanity at one seed
    assert chi2(m).cdf(values[0]) not in (0.0, 1.0)


def test_regression_noiseless_hook():
    m = 8
    out = constructions.construct_regression(np.eye(m), np.zeros(m), 30,
                                             seed=0, t=1.0,
                                             xi_override=np.zeros(30))
    np.testing.assert_array_equal(out.model.gamma0, out.pair.gamma_sharp)
    assert out.pair.linf_residual == 0.0
    assert out.witness["quad_improvement"] == 0.0


def test_regression_deterministic():
    m = 10
    a = constructions.construct_regression(np.eye(m), np.zeros(m), 50,
                                           seed=7, t=2.0)
    b = constructions.construct_regression(np.eye(m), np.zeros(m), 50,
                                           seed=7, t=2.0)
    np.testing.assert_array_equal(a.model.gamma0, b.model.gamma0)
    assert a.pair.lambda_sharp == b.pair.lambda_sharp


def test_regression_certification_failed_on_bad_draw():
    # N barely above p with tiny t: lambda_sharp is small relative to the
    # noise, so some seeds must fail certification
    m = 30
    with pytest.raises(CertificationFailed):
        for seed in range(50):
            constructions.construct_regression(np.eye(m), np.zeros(m),
                                               m + 2, seed=seed, t=1e-6)


# --- direct construction ---

def test_direct_identity_closed_form():
    # lam^2 (p-1) = 0.5: theta11 = 2, theta11_sharp = 1
    p = 101
    m = p - 1
    lam = math.sqrt(0.5 / m)
    out = constructions.construct_direct(np.eye(m), np.ones(m),
                                         np.zeros(m), lam)
    check_output(out)
    assert out.witness["quad_improvement"] == pytest.approx(0.5)
    assert out.model.theta11 == pytest.approx(2.0)
    assert out.direction.theta11_sharp == pytest.approx(1.0)
    assert out.pair.linf_residual == pytest.approx(lam)


def test_direct_zero_witness_rejected():
    m = 100
    with pytest.raises(MarginViolated):
        constructions.construct_direct(np.eye(m), np.zeros(m), np.zeros(m),
                                       math.sqrt(0.5 / m))


def test_direct_inf_norm_rejected():
    m = 100
    with pytest.raises(InfNormViolated):
        constructions.construct_direct(np.eye(m), 1.5 * np.ones(m),
                                       np.zeros(m), math.sqrt(0.5 / m))


def test_direct_low_dimension_rejected():
    # (p-1) lam^2 below the margin floor: improvement cannot be reached
    with pytest.raises(MarginViolated):
        constructions.construct_direct(np.eye(4), np.ones(4), np.zeros(4),
                                       0.001)


def test_direct_random_pd_matches_dense_oracle(rng):
    sigma_minus = random_sigma(rng, 60)
    z = np.sign(rng.standard_normal(60))
    lam = math.sqrt(0.4 / (z @ np.linalg.solve(sigma_minus, z)))
    out = constructions.construct_direct(sigma_minus, z, np.zeros(60), lam)
    check_output(out)
    gamma0_oracle = lam * np.linalg.solve(sigma_minus, z)
    np.testing.assert_allclose(out.model.gamma0, gamma0_oracle, atol=1e-10)
    quad_oracle = lam * lam * z @ np.linalg.solve(sigma_minus, z)
    assert out.witness["quad_improvement"] == pytest.approx(quad_oracle)
    assert out.witness["l1_witness"] >= quad_oracle - 1e-12
    assert out.direction.improvement > 0


def test_direct_findpair_chain(rng):
    # feeding the output into the population Lasso at 2 lambda_sharp must
    # satisfy the chain inequalities against gamma_sharp
    m = 80
    sigma_minus = random_sigma(rng, m)
    gamma_sharp = np.zeros(m)
    gamma_sharp[:2] = 0.02
    z = np.sign(rng.standard_normal(m))
    lam = math.sqrt(0.3 / (z @ np.linalg.solve(sigma_minus, z)))
    out = constructions.construct_direct(sigma_minus, z, gamma_sharp, lam)
    lam_l = 2.0 * lam
    fit = population_lasso(out.model, lam_l)
    diff = fit.coef - gamma_sharp
    quad = diff @ (out.model.sigma_minus @ diff)
    slack = 1e-8
    assert quad + (lam_l - lam) * np.abs(fit.coef).sum() <= \
        (lam_l + lam) * np.abs(gamma_sharp).sum() + slack
    assert quad <= 3.0 * lam_l * np.abs(gamma_sharp).sum() + slack


# --- reversed irrepresentable construction ---

def test_reversed_irrep_orthogonal_blocks():
    m, s = 20, 3
    out = constructions.construct_reversed_irrepresentable(
        np.eye(m), np.arange(s), np.ones(m - s), np.full(s, 0.05),
        math.sqrt(0.5 / (m - s)))
    check_output(out)
    assert out.witness["irrepresentable_value"] == 0.0
    assert out.witness["z_hat_inf"] <= 1.0 + 1e-12
    assert out.witness["quad_improvement"] == pytest.approx(0.5)


def test_reversed_irrep_equicorrelation_matches_dense_oracle(rng):
    m, s, rho = 25, 4, 0.2
    sigma_minus = (1 - rho) * np.eye(m) + rho * np.ones((m, m))
    support = np.arange(s)
    rest = np.arange(s, m)
    z = np.sign(rng.standard_normal(m - s))
    lam = 0.1
    cond_oracle = np.max(np.abs(
        sigma_minus[np.ix_(support, rest)]
        @ np.linalg.solve(sigma_minus[np.ix_(rest, rest)], z)))
    if cond_oracle <= 1.0:
        out = constructions.construct_reversed_irrepresentable(
            sigma_minus, support, z, np.zeros(s), lam)
        assert out.witness["irrepresentable_value"] == pytest.approx(
            cond_oracle, abs=1e-10)
        check_output(out)
    else:
        with pytest.raises(IrrepresentableViolated):
            constructions.construct_reversed_irrepresentable(
                sigma_minus, support, z, np.zeros(s), lam)


def test_reversed_irrep_violation_detected():
    # engineered cross block pushing the condition value above 1
    m, s = 6, 2
    sigma_minus = np.eye(m)
    for i in range(s):
        for j in range(s, m):
            sigma_minus[i, j] = sigma_minus[j, i] = 0.45
    value = np.max(np.abs(
        sigma_minus[:s, s:] @ np.linalg.solve(sigma_minus[s:, s:],
                                              np.ones(m - s))))
    assert value > 1.0
    with pytest.raises(IrrepresentableViolated):
        constructions.construct_reversed_irrepresentable(
            sigma_minus, np.arange(s), np.ones(m - s), np.zeros(s), 0.2)


# --- Lagrangian construction ---

def test_lagrangian_identity_closed_form():
    # identity covariance, unit weights: ||c0||^2 = 1/(lam^2 (m - s))
    m, s = 15, 1
    lam = math.sqrt(2.0 / (m - s))
    out = constructions.construct_lagrangian(np.eye(m), np.arange(s),
                                             np.ones(m), np.zeros(s), lam)
    check_output(out)
    c0 = out.witness["c0"]
    assert c0 @ c0 == pytest.approx(1.0 / (lam * lam * (m - s)))
    assert out.witness["quad_improvement"] == pytest.approx(0.5)
    assert out.witness["constraint_value"] == pytest.approx(1.0, abs=1e-8)


def test_lagrangian_random_instances(rng):
    # constraint residual and orthogonality on random weights and models
    for k in range(5):
        m, s = 30, 2
        sigma_minus = random_sigma(rng, m)
        weights = rng.uniform(0.5, 1.0, m)
        support = np.arange(s)
        # scale lambda so the improvement floor and headroom both pass
        wz = np.zeros(m)
        wz[s:] = weights[s:]
        q0 = wz @ np.linalg.solve(sigma_minus, wz)
        lam = math.sqrt(1.0 / (0.5 * q0))
        out = constructions.construct_lagrangian(
            sigma_minus, support, weights, np.zeros(s), lam)
        check_output(out)
        sig_c0 = sigma_minus @ out.witness["c0"]
        assert np.max(np.abs(sig_c0[support])) <= 1e-10
        assert abs(out.witness["constraint_value"] - 1.0) <= 1e-8


def test_lagrangian_weight_condition_violated():
    m = 10
    with pytest.raises(WeightConditionViolated):
        constructions.construct_lagrangian(np.eye(m), np.arange(1),
                                           2.0 * np.ones(m), np.zeros(1),
                                           0.5)
