"""Asymptotic variance lower bounds over sparse coefficient classes.

The lower bound for estimating the first coefficient over a class of
directions is the inverse of the smallest residual variance
min_c E(x_1 - x_{-1}' c)^2 with c ranging over the class budget:

* l0 class: supports of size at most s (exact enumeration, small p);
* l1 class: ||c||_1 <= M sqrt(n s) (bisection over the penalty path);
* lr class, 0 < r < 1: nonconvex; deliberately not solved -- reported as
  the bracket between the two convex extremes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .errors import DimensionTooLarge, NoConvergence, SingularSubmatrix
from .models import CovarianceModel
from .pairs import EligiblePair, sharp_direction
from .solvers import population_lasso

ENUM_MAX_P = 22
BISECT_MAX_ITERS = 200
BISECT_REL_TOL = 1e-6


@dataclass(frozen=True)
class ModelClass:
    kind: str                    # "l0", "l1" or "lr"
    r: float
    s: int
    n: int

    def __post_init__(self):
        if self.kind not in ("l0", "l1", "lr"):
            raise ValueError(f"unknown class kind {self.kind!r}")
        if self.kind == "l0" and self.r != 0.0:
            raise ValueError("l0 class requires r = 0")
        if self.kind == "l1" and self.r != 1.0:
            raise ValueError("l1 class requires r = 1")
        if self.kind == "lr" and not 0.0 < self.r < 1.0:
            raise ValueError("lr class requires 0 < r < 1")
        if self.s <= 0 or self.n <= 0:
            raise ValueError("s and n must be positive")

    def budget(self, big_m: float = 1.0) -> float:
        """Direction-set budget: s, M sqrt(ns), or M n^{r/2} s^{(2-r)/2}."""
        if self.kind == "l0":
            return float(self.s)
        if self.kind == "l1":
            return big_m * math.sqrt(self.n * self.s)
        return big_m * self.n ** (self.r / 2.0) * self.s ** ((2.0 - self.r) / 2.0)


@dataclass(frozen=True)
class CrlbResult:
    bound: float
    argmin_c: np.ndarray
    constraint_value: float
    method: str                  # closed_form | l1_path_bisect | l0_enumeration


def _residual_variance(model: CovarianceModel, c: np.ndarray) -> float:
    return 1.0 - 2.0 * float(c @ model.sigma_cross) \
        + float(c @ (model.sigma_minus @ c))


def crlb_l1(model: CovarianceModel, budget: float) -> CrlbResult:
    """Inverse of min residual variance over ||c||_1 <= budget.

    Interior case (budget at least ||gamma0||_1) returns theta11 with the
    unconstrained optimum; otherwise the constraint is active and the
    minimizer is found by bisecting the penalty of the population Lasso
    until the fitted l1 norm matches the budget.
    """
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    m = model.p - 1
    if budget == 0.0:
        return CrlbResult(bound=1.0, argmin_c=np.zeros(m),
                          constraint_value=0.0, method="closed_form")
    gamma0_l1 = float(np.abs(model.gamma0).sum())
    if budget >= gamma0_l1:
        return CrlbResult(bound=model.theta11, argmin_c=model.gamma0.copy(),
                          constraint_value=gamma0_l1, method="closed_form")

    lo, hi = 0.0, float(np.max(np.abs(model.sigma_cross)))
    c = np.zeros(m)
    for _ in range(BISECT_MAX_ITERS):
        mid = 0.5 * (lo + hi)
        c = population_lasso(model, mid).coef
        l1 = float(np.abs(c).sum())
        if abs(l1 - budget) <= BISECT_REL_TOL * budget:
            return CrlbResult(bound=1.0 / _residual_variance(model, c),
                              argmin_c=c, constraint_value=l1,
                              method="l1_path_bisect")
        if l1 > budget:
            lo = mid
        else:
            hi = mid
    raise NoConvergence(
        f"l1 budget bisection stalled in bracket [{lo:.6g}, {hi:.6g}] "
        f"with ||c||_1 = {np.abs(c).sum():.6g}, target {budget:.6g}")


def crlb_l0(model: CovarianceModel, s_free: int) -> CrlbResult:
    """Exact enumeration of all supports of size at most s_free.

    The residual variance is nonincreasing under adding coordinates, so
    only size-s_free supports need solving.  Limited to small p.
    """
    if model.p > ENUM_MAX_P:
        raise DimensionTooLarge(
            f"exact enumeration limited to p <= {ENUM_MAX_P}")
    m = model.p - 1
    if not 0 <= s_free <= m:
        raise ValueError("s_free must be between 0 and p - 1")
    if s_free == 0:
        return CrlbResult(bound=1.0, argmin_c=np.zeros(m),
                          constraint_value=0.0, method="closed_form")

    sig = model.sigma_minus
    cross = model.sigma_cross
    best_resid = 1.0
    best_c = np.zeros(m)
    for support in combinations(range(m), s_free):
        idx = list(support)
        try:
            c_s = cho_solve(cho_factor(sig[np.ix_(idx, idx)]), cross[idx])
        except LinAlgError as exc:
            raise SingularSubmatrix(str(exc)) from exc
        resid = 1.0 - float(cross[idx] @ c_s)
        if resid < best_resid:
            best_resid = resid
            best_c = np.zeros(m)
            best_c[idx] = c_s
    return CrlbResult(bound=1.0 / best_resid, argmin_c=best_c,
                      constraint_value=float(np.count_nonzero(best_c)),
                      method="l0_enumeration")


def known_support_bound(model: CovarianceModel, support0: np.ndarray) -> float:
    """Variance bound when the true support (including the target) is known.

    ``support0`` indexes the full variable set and must contain 0; returns
    the (1,1) entry of the inverse of the covariance restricted to it.
    """
    support0 = np.sort(np.asarray(support0, dtype=int))
    if support0.size == 0 or support0[0] != 0:
        raise ValueError("support0 must contain the first variable (index 0)")
    sub = model.sigma[np.ix_(support0, support0)]
    try:
        inv = np.linalg.inv(sub)
    except np.linalg.LinAlgError as exc:
        raise SingularSubmatrix(str(exc)) from exc
    return float(inv[0, 0])


@dataclass(frozen=True)
class CrlbComparison:
    theta11: float
    theta11_sharp: float
    bound: float
    bound_high: float            # equals bound except for the lr bracket
    budget: float
    feasible: bool               # is gamma_sharp inside the class budget
    verdict: str                 # attained | not_attained | bracketed
    method: str


def crlb_compare(model: CovarianceModel, pair: EligiblePair,
                 spec: ModelClass, *, big_m: float = 1.0,
                 tol: float = 1e-8) -> CrlbComparison:
    """Compare theta11, the surrogate variance, and the class lower bound.

    The verdict is "attained" when the surrogate variance does not exceed
    the bound (within tol) and gamma_sharp itself is feasible for the
    class; the lr row is only bracketed between the l0 and l1 extremes.
    """
    direction = sharp_direction(model, pair)
    budget = spec.budget(big_m)
    g = pair.gamma_sharp

    if spec.kind == "l1":
        result = crlb_l1(model, budget)
        feasible = float(np.abs(g).sum()) <= budget + tol
        bound = bound_high = result.bound
        method = result.method
    elif spec.kind == "l0":
        result = crlb_l0(model, min(int(budget), model.p - 1))
        feasible = int(np.count_nonzero(g)) <= budget + tol
        bound = bound_high = result.bound
        method = result.method
    else:
        low = crlb_l0(model, min(spec.s, model.p - 1))
        high = crlb_l1(model, ModelClass("l1", 1.0, spec.s, spec.n)
                       .budget(big_m))
        bound, bound_high = sorted((low.bound, high.bound))
        feasible = float(np.abs(g) ** spec.r @ np.ones_like(g)) <= budget + tol
        method = "bracketed"

    if method == "bracketed":
        verdict = "bracketed"
    elif feasible and direction.theta11_sharp <= bound + tol:
        verdict = "attained"
    else:
        verdict = "not_attained"
    return CrlbComparison(theta11=model.theta11,
                          theta11_sharp=direction.theta11_sharp,
                          bound=bound, bound_high=bound_high, budget=budget,
                          feasible=feasible, verdict=verdict, method=method)
