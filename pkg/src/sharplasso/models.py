"""Population covariance models and Gaussian design sampling.

A model is a correlation matrix ``sigma`` together with the derived
quantities used everywhere else in the library: the coefficients
``gamma0`` of the population regression of the first variable on the
rest, the (1,1) entry ``theta11`` of the inverse, and the smallest
eigenvalue ``lambda_min_sq``.  Models are immutable and cache one
Cholesky factor so that Monte Carlo replicates sample cheaply.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .errors import (
    CholeskyFailure,
    NotAllowed,
    NotPositiveDefinite,
    NotSymmetric,
    NotUnitDiagonal,
)

PD_TOL = 1e-12           # smallest eigenvalue below this means "not PD"
UNIT_DIAG_TOL = 1e-12    # correlation matrices only
SYM_TOL = 1e-10


@dataclass(frozen=True)
class CovarianceModel:
    """Validated population design.  Treat all fields as read-only."""

    p: int
    sigma: np.ndarray          # p x p, symmetric, unit diagonal, PD
    gamma0: np.ndarray         # length p-1, solves sigma[1:,1:] g = sigma[1:,0]
    theta11: float             # (1,1) entry of sigma^{-1}
    lambda_min_sq: float       # smallest eigenvalue of sigma
    lambda_max_sq: float       # largest eigenvalue (diagnostic, never enforced)
    chol: np.ndarray = field(repr=False, default=None)  # lower Cholesky of sigma

    @property
    def sigma_minus(self) -> np.ndarray:
        return self.sigma[1:, 1:]

    @property
    def sigma_cross(self) -> np.ndarray:
        """Covariances of the first variable with the rest."""
        return self.sigma[1:, 0]

    def theta_first_column(self) -> np.ndarray:
        """First column of sigma^{-1}, i.e. theta11 * (1, -gamma0)."""
        out = np.empty(self.p)
        out[0] = 1.0
        out[1:] = -self.gamma0
        return out * self.theta11


@dataclass(frozen=True)
class DesignSample:
    """One synthetic dataset drawn from a model; y = x @ beta0 + eps."""

    n: int
    x: np.ndarray
    y: np.ndarray
    beta0: np.ndarray
    eps: np.ndarray
    seed: int


def _check_square_symmetric(sigma: np.ndarray) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {sigma.shape}")
    if not np.all(np.isfinite(sigma)):
        raise NotSymmetric("matrix contains non-finite entries")
    if np.max(np.abs(sigma - sigma.T)) > SYM_TOL:
        raise NotSymmetric("matrix is not symmetric")
    return 0.5 * (sigma + sigma.T)


def build_model(sigma: np.ndarray) -> CovarianceModel:
    """Validate a correlation matrix and precompute its derived quantities.

    Raises NotSymmetric / NotUnitDiagonal / NotPositiveDefinite on bad input.
    """
    sigma = _check_square_symmetric(sigma)
    p = sigma.shape[0]
    if p < 2:
        raise NotSymmetric(f"dimension must be >= 2, got {p}")
    if np.max(np.abs(np.diag(sigma) - 1.0)) > UNIT_DIAG_TOL:
        raise NotUnitDiagonal("diagonal entries must all equal 1")

    eigvals = np.linalg.eigvalsh(sigma)
    lam_min, lam_max = float(eigvals[0]), float(eigvals[-1])
    if lam_min <= PD_TOL:
        raise NotPositiveDefinite(f"smallest eigenvalue {lam_min:.3e} <= {PD_TOL:.0e}")

    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - eigval guard above
        raise CholeskyFailure(str(exc)) from exc

    # gamma0 by Cholesky solve of the minor block; better conditioned than
    # inverting sigma outright.
    c_minor, low = sla.cho_factor(sigma[1:, 1:], lower=True)
    gamma0 = sla.cho_solve((c_minor, low), sigma[1:, 0])
    denom = 1.0 - gamma0 @ sigma[1:, 0]
    theta11 = 1.0 / denom

    return CovarianceModel(
        p=p,
        sigma=sigma,
        gamma0=gamma0,
        theta11=theta11,
        lambda_min_sq=lam_min,
        lambda_max_sq=lam_max,
        chol=chol,
    )


def augmented_matrix(sigma_minus: np.ndarray, gamma0: np.ndarray) -> np.ndarray:
    """Covariance with a first variable adjoined whose projection on the
    rest has coefficients ``gamma0``."""
    sigma_minus = np.asarray(sigma_minus, dtype=float)
    gamma0 = np.asarray(gamma0, dtype=float)
    m = sigma_minus.shape[0]
    out = np.empty((m + 1, m + 1))
    out[0, 0] = 1.0
    cross = sigma_minus @ gamma0
    out[0, 1:] = cross
    out[1:, 0] = cross
    out[1:, 1:] = sigma_minus
    return out


@dataclass(frozen=True)
class AllowedDiagnostics:
    allowed: bool
    lambda_min_sq: float         # smallest eigenvalue of the augmented matrix
    inf_norm: float              # sup-norm of sigma_minus @ gamma0
    sufficient_value: float      # 1 - || sigma_minus^{1/2} gamma0 ||_2^2
    sufficient_holds: bool
    sufficient_lower_bound: float  # (1 - ||.||_2) * lambda_min_sq(sigma_minus)


def is_allowed(sigma_minus: np.ndarray, gamma0: np.ndarray,
               margin: float = PD_TOL) -> AllowedDiagnostics:
    """Check whether a projection vector yields a valid augmented covariance.

    True iff the augmented matrix has smallest eigenvalue >= margin and
    ``sigma_minus @ gamma0`` is bounded by 1 in sup-norm.  Also reports the
    sufficient condition based on the quadratic form of gamma0, together
    with the eigenvalue lower bound it implies.
    """
    sigma_minus = _check_square_symmetric(sigma_minus)
    gamma0 = np.asarray(gamma0, dtype=float)
    cross = sigma_minus @ gamma0
    inf_norm = float(np.max(np.abs(cross))) if cross.size else 0.0
    quad = float(gamma0 @ cross)
    aug = augmented_matrix(sigma_minus, gamma0)
    lam_min = float(np.linalg.eigvalsh(aug)[0])
    lam_min_minus = float(np.linalg.eigvalsh(sigma_minus)[0])
    sufficient = 1.0 - quad
    return AllowedDiagnostics(
        allowed=(lam_min >= margin and inf_norm <= 1.0),
        lambda_min_sq=lam_min,
        inf_norm=inf_norm,
        sufficient_value=sufficient,
        sufficient_holds=sufficient >= margin,
        sufficient_lower_bound=(1.0 - np.sqrt(max(quad, 0.0))) * lam_min_minus,
    )


def augmented_sigma(sigma_minus: np.ndarray, gamma0: np.ndarray,
                    margin: float = PD_TOL) -> CovarianceModel:
    """Build the model whose covariance adjoins a first variable with the
    given projection coefficients.  Raises NotAllowed if invalid."""
    diag = is_allowed(sigma_minus, gamma0, margin=margin)
    if not diag.allowed:
        raise NotAllowed(
            f"projection vector not allowed: min eigenvalue "
            f"{diag.lambda_min_sq:.3e}, cross sup-norm {diag.inf_norm:.6g}")
    return build_model(augmented_matrix(sigma_minus, gamma0))


def sample(model: CovarianceModel, n: int, beta0: np.ndarray,
           seed: int) -> DesignSample:
    """Draw n i.i.d. rows of N(0, sigma) plus unit-variance Gaussian noise.

    Deterministic given the seed; the noise level is fixed at 1.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    beta0 = np.asarray(beta0, dtype=float)
    if beta0.shape != (model.p,):
        raise ValueError(f"beta0 must have length {model.p}")
    if model.chol is None:  # pragma: no cover - build_model always sets it
        raise CholeskyFailure("model has no cached Cholesky factor")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, model.p)) @ model.chol.T
    eps = rng.standard_normal(n)
    y = x @ beta0 + eps
    return DesignSample(n=n, x=x, y=y, beta0=beta0, eps=eps, seed=seed)
