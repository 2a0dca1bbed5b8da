"""Gaussian tail thresholds used to calibrate tuning parameters.

Each function returns the explicit deviation threshold of a known Gaussian
inequality; the guaranteed exceedance probability is stated in the
docstring.  Monte Carlo verifiers live in the test suite and exploit the
exact distributional identities of the underlying statistics, so millions
of replicates are cheap.
"""

from __future__ import annotations

import math

from .errors import LOutOfRange


def product_mgf_bound(ell: float) -> float:
    """Upper bound exp(1/(2L^2 - 2L)) for E exp(UW/L), U, W iid N(0,1).

    Valid for L > 1; tends to 1 as L grows.
    """
    if ell <= 1.0:
        raise LOutOfRange(f"L must exceed 1, got {ell}")
    return math.exp(1.0 / (2.0 * ell * ell - 2.0 * ell))


def inner_product_tail(n: int, t: float) -> float:
    """Threshold sqrt(2t/n) + t/n for U'W/n with independent N(0, I_n) pairs.

    Guarantee: P(U'W/n >= threshold) <= exp(-t).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if t < 0:
        raise ValueError("t must be nonnegative")
    return math.sqrt(2.0 * t / n) + t / n


def correlated_pair_tail(n: int, t: float, lambda_sharp: float,
                         sigma_sharp: float) -> float:
    """Threshold for U'V/n with iid bivariate Gaussian rows.

    Rows (U_i, V_i) have var(U_i) = 1, E U_i V_i = lambda_sharp and
    var(V_i) = sigma_sharp^2.  The threshold is

        lambda_sharp + (sqrt(2) sigma_sharp + 2 lambda_sharp) sqrt(t/n)
                     + (sigma_sharp + 2 lambda_sharp) t/n

    with guarantee P(U'V/n >= threshold) <= 2 exp(-t).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if t < 0:
        raise ValueError("t must be nonnegative")
    root = math.sqrt(t / n)
    return lambda_sharp \
        + (math.sqrt(2.0) * sigma_sharp + 2.0 * lambda_sharp) * root \
        + (sigma_sharp + 2.0 * lambda_sharp) * t / n


def chi_square_tail(n: int, t: float) -> float:
    """Threshold 2 sqrt(t/n) + 2 t/n for ||U||^2/n - 1, U ~ N(0, I_n).

    Guarantee: P(||U||^2/n - 1 >= threshold) <= exp(-t).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if t < 0:
        raise ValueError("t must be nonnegative")
    return 2.0 * math.sqrt(t / n) + 2.0 * t / n


def union_level(t: float, m: int) -> float:
    """Shift t -> t + log m so a single-coordinate bound covers a max over m."""
    if m < 1:
        raise ValueError("m must be at least 1")
    return t + math.log(m)
