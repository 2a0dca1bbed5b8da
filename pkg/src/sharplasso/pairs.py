"""Surrogate directions for debiasing the first coordinate.

A pair (gamma, lam) is *certified* against a covariance model when the
population residual sup-norm ||Sig_minus (gamma - gamma0)||_inf is at most
lam and the product lam * ||gamma||_1 is below a smallness threshold.  Any
certified pair yields a direction whose quadratic form can strictly beat
the precision-matrix variance theta11; this module builds that direction,
verifies the finite-sample inequalities that back it, and implements the
projection / sparsity-index toolkit used to find such pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .errors import (AuditFailure, DegenerateDenominator, L1ProductTooLarge,
                     LambdaMismatch, LinfViolated, SingularSubmatrix,
                     ZeroVector)
from .models import CovarianceModel

EPS_ELIGIBLE = 0.05
CERT_TOL = 1e-9          # numeric slack: constructions hit the bound exactly
DENOM_GUARD = 1e-10


@dataclass(frozen=True)
class EligiblePair:
    gamma_sharp: np.ndarray      # length p - 1
    lambda_sharp: float
    linf_residual: float
    l1_product: float


@dataclass(frozen=True)
class SharpDirection:
    theta1_sharp: np.ndarray     # length p
    theta11_sharp: float
    lambda0_sharp: float
    improvement: float           # theta11 - theta11_sharp
    denominator: float
    quad_form: float             # theta1_sharp' Sigma theta1_sharp
    sigma_residual: float        # ||Sigma theta1_sharp - e1||_inf


def certify_pair(model: CovarianceModel, gamma_sharp: np.ndarray,
                 lambda_sharp: float, *,
                 eps_eligible: float = EPS_ELIGIBLE,
                 cert_tol: float = CERT_TOL) -> EligiblePair:
    """Check both eligibility conditions, raising on the one that fails."""
    if lambda_sharp <= 0:
        raise ValueError("lambda_sharp must be positive")
    gamma_sharp = np.asarray(gamma_sharp, dtype=float)
    if gamma_sharp.shape != (model.p - 1,):
        raise ValueError("gamma_sharp has wrong length")
    resid = model.sigma_minus @ (gamma_sharp - model.gamma0)
    linf = float(np.max(np.abs(resid))) if resid.size else 0.0
    if linf > lambda_sharp + cert_tol:
        raise LinfViolated(linf, lambda_sharp)
    l1_product = lambda_sharp * float(np.abs(gamma_sharp).sum())
    if l1_product > eps_eligible:
        raise L1ProductTooLarge(l1_product, eps_eligible)
    return EligiblePair(gamma_sharp=gamma_sharp, lambda_sharp=lambda_sharp,
                        linf_residual=linf, l1_product=l1_product)


def sharp_direction(model: CovarianceModel,
                    pair: EligiblePair) -> SharpDirection:
    """Direction (1, -gamma) / (1 - gamma0' Sig_minus gamma) and its audits.

    The denominator is guaranteed positive once lam * ||gamma||_1 is small:
    denom >= lambda_min_sq - 2 * l1_product.  The quadratic form of the
    direction matches its first entry up to 2 * l1_product / denom^2.
    """
    g = pair.gamma_sharp
    denom = 1.0 - float(model.gamma0 @ (model.sigma_minus @ g))
    if denom <= DENOM_GUARD:
        raise DegenerateDenominator(f"denominator {denom:.3e} too small")

    lower = model.lambda_min_sq - 2.0 * pair.l1_product
    if denom < lower - 1e-12:
        raise AuditFailure(
            f"denominator {denom:.6g} below guaranteed floor {lower:.6g}")

    theta = np.concatenate(([1.0], -g)) / denom
    theta11_sharp = 1.0 / denom
    quad = float(theta @ (model.sigma @ theta))
    quad_slack = 2.0 * pair.l1_product / denom ** 2
    if abs(quad - theta11_sharp) > quad_slack + 1e-12:
        raise AuditFailure(
            f"quadratic form deviates by {abs(quad - theta11_sharp):.3e}, "
            f"allowed {quad_slack:.3e}")

    cap = model.theta11 + 2.0 * pair.l1_product / model.lambda_min_sq ** 2
    if theta11_sharp > cap + 1e-12:
        raise AuditFailure(
            f"theta11_sharp {theta11_sharp:.6g} exceeds cap {cap:.6g}")

    lambda0_sharp = pair.lambda_sharp / denom
    e1 = np.zeros(model.p)
    e1[0] = 1.0
    sigma_resid = float(np.max(np.abs(model.sigma @ theta - e1)))
    if sigma_resid > lambda0_sharp + 1e-12:
        raise AuditFailure(
            f"||Sigma theta - e1||_inf {sigma_resid:.3e} exceeds "
            f"lambda0_sharp {lambda0_sharp:.3e}")

    return SharpDirection(theta1_sharp=theta, theta11_sharp=theta11_sharp,
                          lambda0_sharp=lambda0_sharp,
                          improvement=model.theta11 - theta11_sharp,
                          denominator=denom, quad_form=quad,
                          sigma_residual=sigma_resid)


def pair_distance(model: CovarianceModel, pair_a: EligiblePair,
                  pair_b: EligiblePair) -> float:
    """Quadratic distance between two certified pairs at a shared lambda.

    Returns d = (ga - gb)' Sig_minus (ga - gb) after asserting the bound
    d <= lam * (||ga||_1 + ||gb||_1).
    """
    if not math.isclose(pair_a.lambda_sharp, pair_b.lambda_sharp,
                        rel_tol=0.0, abs_tol=0.0):
        raise LambdaMismatch(
            f"lambda {pair_a.lambda_sharp} != {pair_b.lambda_sharp}")
    diff = pair_a.gamma_sharp - pair_b.gamma_sharp
    d = float(diff @ (model.sigma_minus @ diff))
    bound = pair_a.lambda_sharp * float(
        np.abs(pair_a.gamma_sharp).sum() + np.abs(pair_b.gamma_sharp).sum())
    if d > bound + 1e-12:
        raise AuditFailure(f"pair distance {d:.6g} exceeds bound {bound:.6g}")
    return d


def _check_support(p: int, support: np.ndarray) -> np.ndarray:
    support = np.asarray(support, dtype=int)
    if support.size == 0:
        raise ValueError("support must be nonempty")
    if support.size != np.unique(support).size:
        raise ValueError("support has repeated indices")
    if support.min() < 0 or support.max() >= p - 1:
        raise ValueError("support indices out of range")
    return np.sort(support)


@dataclass(frozen=True)
class ProjectionPair:
    gamma_s: np.ndarray          # projection coefficients, zero-padded
    v_bound: float               # operator-norm bound on the anti-projection
    exact_inf: float             # realized ||v||_inf off the support
    support: np.ndarray
    schur_l1_norm: float         # the constant C in the bound


def projection_pair(model: CovarianceModel,
                    support: np.ndarray) -> ProjectionPair:
    """Project the best linear predictor of x1 onto the columns in support.

    Support indices are 0-based positions within the non-first variables.
    The anti-projection v = Sig_minus (gamma0 - gamma_s) vanishes on the
    support; off the support it is the Schur complement applied to the
    tail of gamma0, bounded by the l1 operator norm of that complement
    times ||gamma0 off-support||_inf.
    """
    support = _check_support(model.p, support)
    rest = np.setdiff1d(np.arange(model.p - 1), support)
    sig = model.sigma_minus
    sig_ss = sig[np.ix_(support, support)]
    try:
        factor = cho_factor(sig_ss)
    except LinAlgError as exc:
        raise SingularSubmatrix(str(exc)) from exc

    gamma_s = np.zeros(model.p - 1)
    gamma_s[support] = cho_solve(factor, model.sigma_cross[support])

    v = sig @ (model.gamma0 - gamma_s)
    exact_inf = float(np.max(np.abs(v[rest]))) if rest.size else 0.0

    if rest.size:
        schur = sig[np.ix_(rest, rest)] - sig[np.ix_(rest, support)] @ \
            cho_solve(factor, sig[np.ix_(support, rest)])
        schur_l1 = float(np.max(np.abs(schur).sum(axis=1)))
        v_bound = schur_l1 * float(np.max(np.abs(model.gamma0[rest])))
    else:
        schur_l1 = 0.0
        v_bound = 0.0
    if exact_inf > v_bound + 1e-12:
        raise AuditFailure(
            f"anti-projection sup-norm {exact_inf:.6g} exceeds "
            f"bound {v_bound:.6g}")
    return ProjectionPair(gamma_s=gamma_s, v_bound=v_bound,
                          exact_inf=exact_inf, support=support,
                          schur_l1_norm=schur_l1)


def sparsity_index(v: np.ndarray) -> float:
    """kappa(v) = ||v||_1 ||v||_inf / ||v||_2, the printed form.

    Note the formula is dimensionally odd (a constant vector of length N
    gives 1 only when its entries are 1/sqrt(N)); it is kept as stated and
    validated against its worked examples.
    """
    v = np.asarray(v, dtype=float)
    norm2 = float(np.linalg.norm(v))
    if norm2 == 0.0:
        raise ZeroVector("sparsity index of the zero vector is undefined")
    return float(np.abs(v).sum()) * float(np.max(np.abs(v))) / norm2


@dataclass(frozen=True)
class TopSPair:
    projection: ProjectionPair
    lambda_s: float
    pair: EligiblePair | None    # None when certification failed
    certification_error: str | None
    kappa_tail: float
    witness: float               # lambda_s * ||gamma0||_1, the non-sparsity witness


def top_s_projection_pair(model: CovarianceModel, s: int, *,
                          eps_eligible: float = EPS_ELIGIBLE) -> TopSPair:
    """Candidate pair from projecting on the s largest |gamma0| entries.

    The tuning value lambda_s = kappa(tail) / (C ||tail||_1) with C the
    Schur-complement l1 operator norm; when the candidate certifies, the
    witness lambda_s * ||gamma0||_1 is at least kappa / C, showing gamma0
    itself is not sparse in the index sense.
    """
    if not 1 <= s <= model.p - 2:
        raise ValueError("s must be between 1 and p - 2")
    order = np.argsort(-np.abs(model.gamma0), kind="stable")
    support = np.sort(order[:s])
    proj = projection_pair(model, support)
    tail = np.delete(model.gamma0, support)
    kappa = sparsity_index(tail)     # raises ZeroVector on an s-sparse gamma0
    c_const = proj.schur_l1_norm
    if c_const == 0.0:
        raise SingularSubmatrix("degenerate Schur complement constant")
    lambda_s = kappa / (c_const * float(np.abs(tail).sum()))
    try:
        pair = certify_pair(model, proj.gamma_s, lambda_s,
                            eps_eligible=eps_eligible)
        error = None
    except (LinfViolated, L1ProductTooLarge) as exc:
        pair = None
        error = f"{type(exc).__name__}: {exc}"
    witness = lambda_s * float(np.abs(model.gamma0).sum())
    if pair is not None and witness < kappa / c_const - 1e-12:
        raise AuditFailure("non-sparsity witness below kappa / C")
    return TopSPair(projection=proj, lambda_s=lambda_s, pair=pair,
                    certification_error=error, kappa_tail=kappa,
                    witness=witness)


def projection_variance_audit(model: CovarianceModel, pair: EligiblePair,
                              support: np.ndarray) -> float:
    """Check the projected residual variance against 1 / theta11_sharp.

    Applies when lambda_sharp * sqrt(|S|) <= 0.1 and the pair (projection
    coefficients, lambda_sharp) is certified; the gap is bounded by
    |S| * lambda_sharp^2 / lambda_min_sq.  Returns the realized gap.
    """
    support = _check_support(model.p, support)
    s = support.size
    if pair.lambda_sharp * math.sqrt(s) > 0.1:
        raise ValueError("audit requires lambda_sharp * sqrt(s) <= 0.1")
    direction = sharp_direction(model, pair)
    proj = projection_pair(model, support)
    g = proj.gamma_s
    resid_var = 1.0 - 2.0 * float(g @ model.sigma_cross) \
        + float(g @ (model.sigma_minus @ g))
    gap = abs(1.0 / direction.theta11_sharp - resid_var)
    limit = s * pair.lambda_sharp ** 2 / model.lambda_min_sq
    if gap > limit + 1e-12:
        raise AuditFailure(
            f"projected variance gap {gap:.6g} exceeds {limit:.6g}")
    return gap
