"""Debiased inference for the first regression coefficient.

Two procedures:

* ``debias_known_sigma`` -- the population covariance is known; the data
  are split in half, each half is debiased with a fixed surrogate
  direction and the initial fit from the other half, and the two results
  are averaged.  The variance proxy is the direction's first entry.
* ``debias_unknown_sigma`` -- the direction is estimated by a node-wise
  Lasso of the first design column on the rest; the variance proxy is the
  empirical quadratic form of that plug-in direction.

When the true coefficient vector is visible (simulation mode) the output
carries the exact decomposition estimate - truth = linear_term +
remainder, and the remainder is audited against its Hoelder bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .errors import AuditFailure, DegenerateDenominator, OddSampleSize
from .models import CovarianceModel, DesignSample
from .pairs import EligiblePair, SharpDirection
from .solvers import KKT_TOL, lasso, nodewise_lasso
from .tails import correlated_pair_tail

ALPHA_DEFAULT = 0.05


@dataclass(frozen=True)
class DebiasOutput:
    estimate: float
    variance_proxy: float
    ci_low: float
    ci_high: float
    linear_term: float | None    # None outside simulation mode
    remainder: float | None
    meta: dict = field(default_factory=dict)


def z_quantile(alpha: float) -> float:
    """Two-sided standard normal quantile for a (1 - alpha) interval."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return float(ndtri(1.0 - alpha / 2.0))


def _interval(estimate: float, proxy: float, n: int, alpha: float):
    half = z_quantile(alpha) * math.sqrt(proxy / n)
    return estimate - half, estimate + half


def debias_known_sigma(sample: DesignSample, model: CovarianceModel,
                       direction: SharpDirection, lam: float, *,
                       alpha: float = ALPHA_DEFAULT,
                       beta_hat_override: np.ndarray | None = None
                       ) -> DebiasOutput:
    """Sample-split debiased estimate along a fixed direction.

    Each half h uses the initial Lasso fit from the other half and the
    correction 2 * theta' X_h' (Y_h - X_h beta_other) / n; the two halves
    are averaged.  ``beta_hat_override`` replaces both initial fits (test
    hook).  Requires an even sample size; odd n is rejected, not trimmed.
    """
    n = sample.n
    if n % 2 != 0:
        raise OddSampleSize(f"sample size {n} is odd")
    half_n = n // 2
    theta = direction.theta1_sharp
    x, y = sample.x, sample.y
    halves = (slice(0, half_n), slice(half_n, n))

    if beta_hat_override is not None:
        beta_hats = [np.asarray(beta_hat_override, dtype=float)] * 2
        fits = []
    else:
        fits = [lasso(x[h], y[h], lam) for h in halves]
        beta_hats = [fit.coef for fit in fits]

    # half I is corrected with the fit from half II and vice versa
    estimates = []
    for h, beta_other in zip(halves, reversed(beta_hats)):
        resid = y[h] - x[h] @ beta_other
        estimates.append(float(beta_other[0] + 2.0 * theta @ (x[h].T @ resid) / n))
    estimate = 0.5 * (estimates[0] + estimates[1])

    proxy = direction.theta11_sharp
    lo, hi = _interval(estimate, proxy, n, alpha)
    meta = {
        "lambda": lam, "alpha": alpha, "n": n,
        "half_estimates": tuple(estimates),
        "iterations": tuple(f.iterations for f in fits),
    }

    linear = remainder = None
    if sample.beta0 is not None:
        beta0 = sample.beta0
        linear = float(theta @ (x.T @ sample.eps) / n)
        remainder = estimate - float(beta0[0]) - linear
        # split the remainder per half: the empirical-process part uses the
        # deviation of the half Gram matrix from the population covariance
        terms_i = []
        for h, beta_other in zip(halves, reversed(beta_hats)):
            diff = beta_other - beta0
            gram_dev = model.sigma - 2.0 * (x[h].T @ x[h]) / n
            terms_i.append(float((theta @ gram_dev) @ diff))
        l1_errors = [float(np.abs(b - beta0).sum()) for b in beta_hats]
        remainder_cap = direction.lambda0_sharp * 0.5 * sum(l1_errors) \
            + 0.5 * sum(abs(t) for t in terms_i)
        if abs(remainder) > remainder_cap + 1e-10:
            raise AuditFailure(
                f"remainder {remainder:.3e} exceeds its bound "
                f"{remainder_cap:.3e}")
        meta.update(terms_i=tuple(terms_i), l1_errors=tuple(l1_errors),
                    remainder_cap=remainder_cap)

    return DebiasOutput(estimate=estimate, variance_proxy=proxy,
                        ci_low=lo, ci_high=hi, linear_term=linear,
                        remainder=remainder, meta=meta)


def debias_unknown_sigma(sample: DesignSample, lam: float,
                         lambda_node: float, *,
                         alpha: float = ALPHA_DEFAULT,
                         beta_hat_override: np.ndarray | None = None
                         ) -> DebiasOutput:
    """Node-wise debiased estimate with an estimated direction.

    The direction is (1, -gamma_hat) over the node-wise denominator
    ||X_1 - X_{-1} gamma_hat||^2 / n + lambda_node ||gamma_hat||_1, whose
    stationarity conditions cap || e1 - Sig_hat theta_hat ||_inf by
    lambda_node (plus solver tolerance) over that denominator.
    """
    n = sample.n
    if n < 4:
        raise ValueError("need at least 4 observations")
    if lambda_node <= 0:
        raise ValueError("lambda_node must be positive")
    x, y = sample.x, sample.y

    node = nodewise_lasso(x, lambda_node)
    tau_sq = node.resid_sq + lambda_node * node.coef_l1
    if tau_sq < 1e-10:
        raise DegenerateDenominator(
            f"node-wise denominator {tau_sq:.3e} too small")
    theta_hat = np.concatenate(([1.0], -node.coef)) / tau_sq

    if beta_hat_override is not None:
        beta_hat = np.asarray(beta_hat_override, dtype=float)
        fit_iterations = 0
    else:
        fit = lasso(x, y, lam)
        beta_hat = fit.coef
        fit_iterations = fit.iterations

    resid = y - x @ beta_hat
    estimate = float(beta_hat[0] + theta_hat @ (x.T @ resid) / n)

    x_theta = x @ theta_hat
    proxy = float(x_theta @ x_theta / n)
    lo, hi = _interval(estimate, proxy, n, alpha)

    # realized sup-norm of e1 - Sig_hat theta_hat and its KKT cap
    sig_hat_theta = x.T @ x_theta / n
    sig_hat_theta[0] -= 1.0
    kkt_gap = float(np.max(np.abs(sig_hat_theta)))
    kkt_cap = (lambda_node + KKT_TOL * (1.0 + node.coef_l1)) / tau_sq
    meta = {
        "lambda": lam, "lambda_node": lambda_node, "alpha": alpha, "n": n,
        "tau_sq": tau_sq, "gamma_hat_l1": node.coef_l1,
        "kkt_gap": kkt_gap, "kkt_cap": kkt_cap,
        "fit_iterations": fit_iterations,
        "gamma_hat": node.coef,
    }
    if kkt_gap > kkt_cap + 1e-12:
        raise AuditFailure(
            f"direction gap {kkt_gap:.3e} exceeds KKT cap {kkt_cap:.3e}")

    linear = remainder = None
    if sample.beta0 is not None:
        beta0 = sample.beta0
        linear = float(theta_hat @ (x.T @ sample.eps) / n)
        remainder = estimate - float(beta0[0]) - linear
        holder = kkt_gap * float(np.abs(beta_hat - beta0).sum())
        if abs(remainder) > holder + 1e-10:
            raise AuditFailure(
                f"remainder {remainder:.3e} exceeds Hoelder bound "
                f"{holder:.3e}")
        meta["remainder_cap"] = holder

    return DebiasOutput(estimate=estimate, variance_proxy=proxy,
                        ci_low=lo, ci_high=hi, linear_term=linear,
                        remainder=remainder, meta=meta)


@dataclass(frozen=True)
class LinearityDiagnostic:
    rate: float                  # sqrt(log p) * ||gamma_hat - gamma_sharp||_1
    condition_holds: bool        # rate below the 0.1 threshold
    gap: float | None            # influence substitution gap (simulation)
    gap_bound: float | None


def linearity_diagnostic(sample: DesignSample, gamma_hat: np.ndarray,
                         gamma_sharp: np.ndarray, *,
                         denominator: float = 1.0,
                         threshold: float = 0.1) -> LinearityDiagnostic:
    """Check the sufficient condition for a common linear influence term.

    Reports sqrt(log p) ||gamma_hat - gamma_sharp||_1 against a smallness
    threshold; with noise visible it also evaluates the realized gap
    between the two influence terms and its Hoelder bound.
    """
    gamma_hat = np.asarray(gamma_hat, dtype=float)
    gamma_sharp = np.asarray(gamma_sharp, dtype=float)
    p = sample.x.shape[1]
    diff = gamma_hat - gamma_sharp
    l1 = float(np.abs(diff).sum())
    rate = math.sqrt(math.log(p)) * l1

    gap = gap_bound = None
    if sample.eps is not None:
        score = sample.x[:, 1:].T @ sample.eps / sample.n
        gap = abs(float(diff @ score)) / denominator
        gap_bound = l1 * float(np.max(np.abs(score))) / denominator
        if gap > gap_bound + 1e-12:
            raise AuditFailure("influence gap exceeds its Hoelder bound")
    return LinearityDiagnostic(rate=rate, condition_holds=rate <= threshold,
                               gap=gap, gap_bound=gap_bound)


def lambda_eps_sharp(model: CovarianceModel, pair: EligiblePair, t: float,
                     n: int, *, union_over: int | None = None) -> float:
    """Noise-level threshold for the surrogate residual scores.

    The surrogate residual x_1 - x_{-1}' gamma_sharp has variance
    sigma_sharp^2 = 1 - 2 gamma_sharp' Sig_cross + gamma_sharp' Sig_minus
    gamma_sharp and covariance at most lambda_sharp with every other
    coordinate, so each score obeys the correlated-pair tail.  With t used
    as given the max over the p - 1 scores exceeds the returned value with
    probability at most 2 (p - 1) exp(-t); pass ``union_over`` to fold the
    log-cardinality shift into t instead.
    """
    g = pair.gamma_sharp
    sigma_sharp_sq = 1.0 - 2.0 * float(g @ model.sigma_cross) \
        + float(g @ (model.sigma_minus @ g))
    t_eff = t + math.log(union_over) if union_over else t
    return correlated_pair_tail(n, t_eff, pair.lambda_sharp,
                                math.sqrt(sigma_sharp_sq))
