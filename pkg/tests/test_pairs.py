import math

import numpy as np
import pytest

from sharplasso import pairs
from sharplasso.errors import (L1ProductTooLarge, LambdaMismatch,
                               LinfViolated, ZeroVector)
from sharplasso.models import augmented_sigma, build_model

from conftest import random_model


def padded_gamma0_model(rng, p, scale=0.25):
    """Random model whose gamma0 is small enough for easy certification."""
    base = random_model(rng, p)
    return augmented_sigma(base.sigma_minus, scale * base.gamma0)


def test_certify_gamma0_is_always_eligible(rng):
    model = padded_gamma0_model(rng, 7)
    lam = 0.04 / max(np.abs(model.gamma0).sum(), 1e-9)
    pair = pairs.certify_pair(model, model.gamma0, lam)
    assert pair.linf_residual == 0.0
    assert pair.l1_product <= pairs.EPS_ELIGIBLE


def test_certify_identity_zero_vector():
    model = build_model(np.eye(6))
    pair = pairs.certify_pair(model, np.zeros(5), 0.01)
    assert pair.linf_residual == 0.0
    assert pair.l1_product == 0.0


def test_certify_rejections(rng):
    model = build_model(np.eye(6))
    with pytest.raises(LinfViolated):
        pairs.certify_pair(model, np.full(5, 0.5), 0.01)
    gamma0 = np.full(5, 0.02)
    model2 = augmented_sigma(np.eye(5), gamma0)
    # gamma0 has zero residual at any lambda, but the l1 product is capped
    with pytest.raises(L1ProductTooLarge):
        pairs.certify_pair(model2, gamma0, 1.0)


def test_sharp_direction_at_gamma0_recovers_theta(rng):
    model = padded_gamma0_model(rng, 6)
    lam = 0.04 / max(np.abs(model.gamma0).sum(), 1e-9)
    pair = pairs.certify_pair(model, model.gamma0, lam)
    d = pairs.sharp_direction(model, pair)
    assert d.theta11_sharp == pytest.approx(model.theta11, rel=1e-10)
    assert d.improvement == pytest.approx(0.0, abs=1e-10)
    np.testing.assert_allclose(d.theta1_sharp, model.theta_first_column(),
                               atol=1e-9)


def test_sharp_direction_identity_block_closed_form():
    # sigma_minus = I, gamma_sharp = 0, gamma0 = lam * ones:
    # theta11_sharp = 1, theta11 = 1/(1 - lam^2 (p-1))
    p, lam = 11, 0.2
    m = p - 1
    model = augmented_sigma(np.eye(m), lam * np.ones(m))
    pair = pairs.certify_pair(model, np.zeros(m), lam)
    d = pairs.sharp_direction(model, pair)
    assert d.theta11_sharp == pytest.approx(1.0)
    assert model.theta11 == pytest.approx(1.0 / (1.0 - lam * lam * m))
    assert d.improvement == pytest.approx(
        lam * lam * m / (1.0 - lam * lam * m))


def test_sharp_direction_variance_cap_random_models(rng):
    # oracle: theta11 from dense inversion bounds the surrogate variance
    for _ in range(10):
        model = padded_gamma0_model(rng, 8)
        lam = 0.03 / max(np.abs(model.gamma0).sum(), 1e-9)
        g = 0.8 * model.gamma0     # perturbed surrogate, still certifiable?
        resid = np.max(np.abs(model.sigma_minus @ (g - model.gamma0)))
        lam = max(lam, resid * 1.0001)
        if lam * np.abs(g).sum() > pairs.EPS_ELIGIBLE:
            continue
        pair = pairs.certify_pair(model, g, lam)
        d = pairs.sharp_direction(model, pair)
        theta11 = np.linalg.inv(model.sigma)[0, 0]
        cap = theta11 + 2 * pair.l1_product / model.lambda_min_sq ** 2
        assert d.theta11_sharp <= cap + 1e-12
        assert d.denominator >= model.lambda_min_sq - 2 * pair.l1_product \
            - 1e-12
        assert abs(d.quad_form - d.theta11_sharp) <= \
            2 * pair.l1_product / d.denominator ** 2 + 1e-12


def test_pair_distance_identity_and_bound():
    m, lam = 8, 0.05
    model = build_model(np.eye(m + 1))
    a = pairs.certify_pair(model, np.zeros(m), lam)
    assert pairs.pair_distance(model, a, a) == 0.0

    # two soft-threshold levels of a shared gamma0 on an identity block
    gamma0 = np.full(m, 0.04)
    model2 = augmented_sigma(np.eye(m), gamma0)
    lam2 = 0.045
    g1 = np.maximum(gamma0 - 0.01, 0.0)
    g2 = np.maximum(gamma0 - 0.03, 0.0)
    p1 = pairs.certify_pair(model2, g1, lam2)
    p2 = pairs.certify_pair(model2, g2, lam2)
    d = pairs.pair_distance(model2, p1, p2)
    assert d <= lam2 * (np.abs(g1).sum() + np.abs(g2).sum())
    assert d == pytest.approx(m * 0.02 ** 2)


def test_pair_distance_lambda_mismatch():
    model = build_model(np.eye(5))
    a = pairs.certify_pair(model, np.zeros(4), 0.01)
    b = pairs.certify_pair(model, np.zeros(4), 0.02)
    with pytest.raises(LambdaMismatch):
        pairs.pair_distance(model, a, b)


def test_projection_pair_full_support_is_exact(rng):
    model = padded_gamma0_model(rng, 7)
    proj = pairs.projection_pair(model, np.arange(model.p - 1))
    np.testing.assert_allclose(proj.gamma_s, model.gamma0, atol=1e-10)
    assert proj.exact_inf == 0.0


def test_projection_pair_orthogonal_blocks():
    # gamma0 lives on an isolated block; projecting on it is exact
    m = 6
    sigma_minus = np.eye(m)
    sigma_minus[0, 1] = sigma_minus[1, 0] = 0.3
    gamma0 = np.zeros(m)
    gamma0[:2] = (0.2, -0.1)
    model = augmented_sigma(sigma_minus, gamma0)
    proj = pairs.projection_pair(model, np.array([0, 1]))
    assert proj.exact_inf == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(proj.gamma_s, gamma0, atol=1e-10)


def test_projection_pair_bound_random(rng):
    # oracle: dense algebra for the anti-projection and its bound
    for _ in range(5):
        model = padded_gamma0_model(rng, 9)
        support = np.array([1, 4, 6])
        proj = pairs.projection_pair(model, support)
        rest = np.setdiff1d(np.arange(model.p - 1), support)
        sig = model.sigma_minus
        schur = sig[np.ix_(rest, rest)] - sig[np.ix_(rest, support)] @ \
            np.linalg.solve(sig[np.ix_(support, support)],
                            sig[np.ix_(support, rest)])
        v_oracle = schur @ model.gamma0[rest]
        assert proj.exact_inf == pytest.approx(
            np.max(np.abs(v_oracle)), rel=1e-8, abs=1e-12)
        assert proj.exact_inf <= proj.v_bound + 1e-12
        # projection solves the normal equations on the support
        v_full = sig @ (model.gamma0 - proj.gamma_s)
        assert np.max(np.abs(v_full[support])) <= 1e-10


def test_sparsity_index_examples():
    big_n = 10 ** 4
    v = np.full(big_n, 1.0 / math.sqrt(big_n))
    assert pairs.sparsity_index(v) == pytest.approx(1.0)
    e1 = np.zeros(5)
    e1[0] = 1.0
    assert pairs.sparsity_index(e1) == pytest.approx(1.0)
    with pytest.raises(ZeroVector):
        pairs.sparsity_index(np.zeros(3))


def test_sparsity_index_tail_example():
    # v_j = 1/sqrt(j log N) for j > s: kappa is of order
    # sqrt(N/(s log^2 N)); the asymptotic constant is unstated and the
    # realized ratio at N = 1e4, s = 10 is about 2.14, just above 2
    big_n, s = 10 ** 4, 10
    j = np.arange(1, big_n + 1, dtype=float)
    v = np.where(j > s, 1.0 / np.sqrt(j * math.log(big_n)), 0.0)
    kappa = pairs.sparsity_index(v)
    ratio = kappa / math.sqrt(big_n / (s * math.log(big_n) ** 2))
    assert 0.5 <= ratio <= 2.5


def test_top_s_projection_pair_equal_tail_closed_form():
    # identity block with an equal-coefficient tail: C = 1 and
    # kappa(tail) = delta * sqrt(m - s), so lambda_s = 1/((m - s) ...)
    m, s, delta = 403, 3, 0.01
    gamma0 = np.full(m, delta)
    gamma0[:s] = 0.1
    model = augmented_sigma(np.eye(m), gamma0)
    top = pairs.top_s_projection_pair(model, s)
    np.testing.assert_array_equal(top.projection.support, np.arange(s))
    tail = np.full(m - s, delta)
    kappa = pairs.sparsity_index(tail)
    assert kappa == pytest.approx(delta * math.sqrt(m - s))
    assert top.kappa_tail == pytest.approx(kappa)
    assert top.lambda_s == pytest.approx(kappa / np.abs(tail).sum())
    assert top.pair is not None
    assert top.witness >= kappa - 1e-12  # Lemma conclusion, C = 1


def test_top_s_projection_pair_tie_break_lower_index():
    m = 6
    gamma0 = np.array([0.05, 0.05, 0.05, 0.01, 0.01, 0.01])
    model = augmented_sigma(np.eye(m), gamma0)
    top = pairs.top_s_projection_pair(model, 2)
    np.testing.assert_array_equal(top.projection.support, np.array([0, 1]))


def test_top_s_projection_pair_exactly_sparse_degenerates():
    m, s = 6, 2
    gamma0 = np.zeros(m)
    gamma0[:s] = 0.3
    model = augmented_sigma(np.eye(m), gamma0)
    with pytest.raises(ZeroVector):
        pairs.top_s_projection_pair(model, s)


def test_projection_variance_audit(rng):
    # the projected residual variance approximates 1/theta11_sharp when
    # lambda_sharp * sqrt(s) is small
    m, s = 10, 3
    gamma0 = np.zeros(m)
    gamma0[:s] = 0.2
    gamma0[s:] = 0.005
    model = augmented_sigma(np.eye(m), gamma0)
    support = np.arange(s)
    proj = pairs.projection_pair(model, support)
    lam = 0.02
    pair = pairs.certify_pair(model, proj.gamma_s, lam)
    gap = pairs.projection_variance_audit(model, pair, support)
    assert gap <= s * lam ** 2 / model.lambda_min_sq + 1e-12
