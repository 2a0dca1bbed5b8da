"""Monte Carlo experiment engine.

Turns the asymptotic claims of the library into finite-sample
measurements: empirical variance of the debiased estimate against its
proxy, confidence-interval coverage, normality of the studentized
statistic, and pass rates of every finite-sample inequality the other
modules expose.  Reports are two CSV files (per-replicate rows and
aggregates); the aggregates are recomputable from the rows, and the whole
run is deterministic given the master seed, serial or parallel.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import kstest

from . import constructions
from .crlb import ModelClass
from .errors import L1ProductTooLarge, AuditFailure, SharpLassoError
from .estimators import (debias_known_sigma, debias_unknown_sigma,
                         lambda_eps_sharp)
from .models import CovarianceModel, build_model, sample
from .pairs import (EPS_ELIGIBLE, EligiblePair, SharpDirection, certify_pair,
                    pair_distance, sharp_direction)
from .solvers import default_lambda, nodewise_lasso, slow_rate_certificate

CONSTRUCTIONS = ("identity", "direct", "regression",
                 "reversed_irrepresentable", "lagrangian")
ESTIMATORS = ("known", "unknown")

ROW_COLUMNS = ("replicate", "beta0_first", "estimate", "variance_proxy",
               "studentized", "covered", "remainder", "error")
AGG_COLUMNS = ("replicates", "failures", "coverage", "mean_estimate",
               "empirical_variance", "ks_distance", "theta11",
               "theta11_sharp", "improvement", "alpha", "n", "p",
               "master_seed")


@dataclass(frozen=True)
class ExperimentConfig:
    construction: str = "identity"
    estimator: str = "known"
    n: int = 200
    p: int = 10
    replicates: int = 100
    lam: float | None = None             # main Lasso penalty
    lambda_sharp: float | None = None    # pair tuning value
    lambda_node: float | None = None     # node-wise penalty (unknown case)
    t: float = 1.0                       # tail parameter
    alpha: float = 0.05
    support_size: int = 1                # beta0 grid support {1..s0}
    magnitudes: tuple = ()               # default (1/sqrt(n), 1.0)
    boundary_margin: float = 0.5
    model_class: ModelClass | None = None
    class_m: float = 1.0
    rho: float = 0.0                     # equicorrelation of sigma_minus
    protected_size: int = 1              # support S of the S-constructions
    regression_big_n: int | None = None
    construction_seed: int = 0
    master_seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.construction not in CONSTRUCTIONS:
            raise ValueError(f"unknown construction {self.construction!r}")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if self.n < 4 or self.p < 3:
            raise ValueError("need n >= 4 and p >= 3")
        if not 1 <= self.support_size <= self.p:
            raise ValueError("support_size out of range")
        if not 0.0 < self.boundary_margin <= 1.0:
            raise ValueError("boundary_margin must lie in (0, 1]")


@dataclass(frozen=True)
class ExperimentReport:
    config: ExperimentConfig
    rows: tuple                  # per-replicate dicts keyed by ROW_COLUMNS
    aggregates: dict
    pair: EligiblePair
    direction: SharpDirection


def equicorrelation(m: int, rho: float) -> np.ndarray:
    """(1 - rho) I + rho 11' of size m; positive definite for rho in [0, 1)."""
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must lie in [0, 1)")
    return (1.0 - rho) * np.eye(m) + rho * np.ones((m, m))


def build_instance(config: ExperimentConfig) -> constructions.ConstructionOutput:
    """Construct the certified (model, pair, direction) for a config."""
    p = config.p
    m = p - 1
    if config.construction == "identity":
        model = build_model(np.eye(p))
        lam_sharp = config.lambda_sharp or default_lambda(config.n, p)
        pair = certify_pair(model, np.zeros(m), lam_sharp)
        direction = sharp_direction(model, pair)
        return constructions.ConstructionOutput(
            model=model, pair=pair, direction=direction, witness={})

    sigma_minus = equicorrelation(m, config.rho)
    if config.construction == "direct":
        lam_sharp = config.lambda_sharp or math.sqrt(0.5 / m)
        return constructions.construct_direct(
            sigma_minus, np.ones(m), np.zeros(m), lam_sharp)
    if config.construction == "regression":
        big_n = config.regression_big_n or 2 * p
        return constructions.construct_regression(
            sigma_minus, np.zeros(m), big_n, config.construction_seed,
            config.t)
    s = config.protected_size
    if not 1 <= s < m:
        raise ValueError("protected_size out of range")
    support = np.arange(s)
    if config.construction == "reversed_irrepresentable":
        lam_sharp = config.lambda_sharp or math.sqrt(0.5 / (m - s))
        return constructions.construct_reversed_irrepresentable(
            sigma_minus, support, np.ones(m - s), np.zeros(s), lam_sharp)
    lam_sharp = config.lambda_sharp or math.sqrt(2.0 / (m - s))
    return constructions.construct_lagrangian(
        sigma_minus, support, np.ones(m), np.zeros(s), lam_sharp)


def beta0_grid(config: ExperimentConfig) -> list:
    """Coefficient vectors exercised in rotation across replicates.

    Each vector is supported on the first ``support_size`` coordinates
    (the target included) at a constant magnitude; the default magnitudes
    are 1/sqrt(n) (near the detection boundary) and 1 (well separated).
    When a model class is set, every vector must fit inside
    boundary_margin times the class budget.
    """
    mags = config.magnitudes or (1.0 / math.sqrt(config.n), 1.0)
    grid = []
    for mag in mags:
        beta0 = np.zeros(config.p)
        beta0[:config.support_size] = mag
        grid.append(beta0)
    spec = config.model_class
    if spec is not None:
        budget = spec.budget(config.class_m)
        for beta0 in grid:
            if spec.kind == "l0":
                size = float(np.count_nonzero(beta0))
            else:
                r = 1.0 if spec.kind == "l1" else spec.r
                size = float(np.sum(np.abs(beta0) ** r))
            if size > config.boundary_margin * budget:
                raise ValueError(
                    f"beta0 with norm {size:.6g} breaches the margin "
                    f"{config.boundary_margin:.3g} of budget {budget:.6g}")
    return grid


def _replicate_seed(master_seed: int, index: int, stream: int = 0):
    return np.random.SeedSequence(master_seed, spawn_key=(stream, index))


def _run_replicate(index: int, config: ExperimentConfig,
                   out: constructions.ConstructionOutput,
                   grid: list, lam: float, lambda_node: float) -> dict:
    beta0 = grid[index % len(grid)]
    row = {"replicate": index, "beta0_first": float(beta0[0]),
           "estimate": math.nan, "variance_proxy": math.nan,
           "studentized": math.nan, "covered": "", "remainder": math.nan,
           "error": ""}
    try:
        smp = sample(out.model, config.n,
                     seed=_replicate_seed(config.master_seed, index),
                     beta0=beta0)
        if config.estimator == "known":
            result = debias_known_sigma(smp, out.model, out.direction, lam,
                                        alpha=config.alpha)
        else:
            result = debias_unknown_sigma(smp, lam, lambda_node,
                                          alpha=config.alpha)
        row["estimate"] = result.estimate
        row["variance_proxy"] = result.variance_proxy
        row["studentized"] = math.sqrt(config.n) \
            * (result.estimate - float(beta0[0])) \
            / math.sqrt(result.variance_proxy)
        row["covered"] = int(result.ci_low <= beta0[0] <= result.ci_high)
        row["remainder"] = result.remainder
    except (SharpLassoError, np.linalg.LinAlgError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def aggregates_from_rows(rows, config: ExperimentConfig,
                         direction: SharpDirection,
                         theta11: float) -> dict:
    """Recompute the aggregate block from the row stream."""
    good = [r for r in rows if not r["error"]]
    stats = np.array([r["studentized"] for r in good])
    agg = {
        "replicates": len(rows),
        "failures": len(rows) - len(good),
        "coverage": float(np.mean([r["covered"] for r in good]))
        if good else math.nan,
        "mean_estimate": float(np.mean([r["estimate"] for r in good]))
        if good else math.nan,
        # variance of sqrt(n) (estimate - truth), i.e. of the raw
        # (unstudentized) error; recover it from the studentized stat
        "empirical_variance": float(np.var(
            [r["studentized"] * math.sqrt(r["variance_proxy"])
             for r in good], ddof=1)) if len(good) > 1 else math.nan,
        "ks_distance": float(kstest(stats, "norm").statistic)
        if len(good) > 1 else math.nan,
        "theta11": theta11,
        "theta11_sharp": direction.theta11_sharp,
        "improvement": direction.improvement,
        "alpha": config.alpha,
        "n": config.n,
        "p": config.p,
        "master_seed": config.master_seed,
    }
    return agg


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run all replicates and aggregate; deterministic given master_seed.

    Replicate seeds derive from (master_seed, index), so parallel and
    serial execution produce identical reports; failing replicates are
    recorded in their row, not fatal.
    """
    out = build_instance(config)
    grid = beta0_grid(config)
    lam = config.lam if config.lam is not None \
        else default_lambda(config.n, config.p)
    lambda_node = config.lambda_node
    if lambda_node is None and config.estimator == "unknown":
        lambda_node = 2.0 * lambda_eps_sharp(out.model, out.pair, config.t,
                                             config.n,
                                             union_over=config.p - 1)

    indices = range(config.replicates)
    if config.threads > 1:
        rows = Parallel(n_jobs=config.threads)(
            delayed(_run_replicate)(i, config, out, grid, lam, lambda_node)
            for i in indices)
    else:
        rows = [_run_replicate(i, config, out, grid, lam, lambda_node)
                for i in indices]
    rows.sort(key=lambda r: r["replicate"])
    agg = aggregates_from_rows(rows, config, out.direction, out.model.theta11)
    return ExperimentReport(config=config, rows=tuple(rows), aggregates=agg,
                            pair=out.pair, direction=out.direction)


def _format(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return format(float(value), ".17g")


def write_report(report: ExperimentReport, rows_path, aggregates_path):
    """Serialize the rows and aggregates CSVs with stable formatting."""
    with open(rows_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(ROW_COLUMNS)
        for row in report.rows:
            writer.writerow(_format(row[col]) for col in ROW_COLUMNS)
    with open(aggregates_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(AGG_COLUMNS)
        writer.writerow(_format(report.aggregates[col])
                        for col in AGG_COLUMNS)


def read_rows(rows_path) -> list:
    """Parse a rows CSV back into the dict form used by the aggregator."""
    rows = []
    with open(rows_path, newline="") as handle:
        for record in csv.DictReader(handle):
            row = {"replicate": int(record["replicate"]),
                   "error": record["error"]}
            for col in ("beta0_first", "estimate", "variance_proxy",
                        "studentized", "remainder"):
                row[col] = float(record[col]) if record[col] else math.nan
            row["covered"] = int(record["covered"]) \
                if record["covered"] else ""
            rows.append(row)
    return rows


@dataclass(frozen=True)
class AuditReport:
    replicates: int
    event_c_count: int
    event_c_lower_bound: float   # 1 - 2 (p - 1) exp(-t)
    slow_rate_checked: int       # replicates where event (c) held
    slow_rate_passes: int
    worst_slack_a: float         # min over replicates of rhs - lhs in (a)
    pair_audits: int
    pair_certified: int
    pair_distance_passes: int
    worst_distance_slack: float


def audit_lemmas(config: ExperimentConfig) -> AuditReport:
    """Evaluate the registered finite-sample inequalities over replicates.

    Per replicate: the slow-rate inequalities of a node-wise fit against
    the certified surrogate (conditional on the noise event), and the
    quadratic-distance bound between the instance pair and a randomized
    second certified pair.  Failures are report content, never raised.
    """
    out = build_instance(config)
    model, pair = out.model, out.pair
    m = config.p - 1
    lam_eps = lambda_eps_sharp(model, pair, config.t, config.n,
                               union_over=m)
    lam_node = max(config.lambda_node or 0.0, 2.0 * lam_eps)

    event_count = 0
    checked = passes = 0
    worst_a = math.inf
    audits = certified = dist_passes = 0
    worst_dist = math.inf

    for index in range(config.replicates):
        rng = np.random.default_rng(
            _replicate_seed(config.master_seed, index, stream=1))
        z = rng.standard_normal((config.n, config.p)) @ model.chol.T

        fit = nodewise_lasso(z, lam_node)
        cert = slow_rate_certificate(z, fit, pair.gamma_sharp, lam_eps)
        if cert.noise_event:
            event_count += 1
            checked += 1
            if cert.holds_a and cert.holds_b:
                passes += 1
            worst_a = min(worst_a, cert.rhs_a - cert.lhs_a)

        # randomized second pair: interpolate toward gamma0, which shrinks
        # the sup-norm residual and keeps the l1 product under the cap
        audits += 1
        move_l1 = float(np.abs(model.gamma0 - pair.gamma_sharp).sum())
        u_cap = min(1.0, 0.9 * max(EPS_ELIGIBLE - pair.l1_product, 0.0)
                    / (pair.lambda_sharp * move_l1 + 1e-300))
        u = rng.uniform(0.0, u_cap)
        gamma_b = pair.gamma_sharp + u * (model.gamma0 - pair.gamma_sharp)
        try:
            pair_b = certify_pair(model, gamma_b, pair.lambda_sharp)
        except L1ProductTooLarge:
            continue
        certified += 1
        try:
            d = pair_distance(model, pair, pair_b)
        except AuditFailure:
            continue
        dist_passes += 1
        bound = pair.lambda_sharp * (np.abs(pair.gamma_sharp).sum()
                                     + np.abs(pair_b.gamma_sharp).sum())
        worst_dist = min(worst_dist, bound - d)

    return AuditReport(
        replicates=config.replicates,
        event_c_count=event_count,
        event_c_lower_bound=1.0 - 2.0 * m * math.exp(-config.t),
        slow_rate_checked=checked,
        slow_rate_passes=passes,
        worst_slack_a=worst_a,
        pair_audits=audits,
        pair_certified=certified,
        pair_distance_passes=dist_passes,
        worst_distance_slack=worst_dist,
    )


@dataclass(frozen=True)
class ProbeResult:
    best_value: float
    best_vector: np.ndarray | None
    meets_half: bool
    feasible_draws: int
    heuristic: bool = True       # randomized search, no certificate


def re_eigenvalue_probe(x_rest: np.ndarray, sigma_minus: np.ndarray,
                        lam: float, eta: float, seed: int, *,
                        draws: int = 200, descent_steps: int = 100,
                        candidates=None) -> ProbeResult:
    """Randomized lower-envelope probe for the restricted eigenvalue.

    Searches for small values of ||X_{-1} c||^2 / n over the set
    { lam ||c||_1 <= 4 eta^2, c' sigma_minus c = 1 } by sparse random
    directions plus local descent.  Heuristic: reports the best value
    found and whether it stays at or above 1/2, with no certificate.
    Infeasible candidates (including user-supplied ones) are excluded.
    """
    x_rest = np.asarray(x_rest, dtype=float)
    n, m = x_rest.shape
    cap = 4.0 * eta * eta
    rng = np.random.default_rng(seed)

    def normalize(c):
        scale = math.sqrt(float(c @ (sigma_minus @ c)))
        return c / scale if scale > 0 else None

    def feasible(c):
        return lam * float(np.abs(c).sum()) <= cap + 1e-12

    def value(c):
        xc = x_rest @ c
        return float(xc @ xc / n)

    best_value = math.inf
    best = None
    feasible_draws = 0

    pool = []
    for _ in range(draws):
        k = int(rng.integers(1, min(m, 50) + 1))
        c = np.zeros(m)
        idx = rng.choice(m, size=k, replace=False)
        c[idx] = rng.standard_normal(k)
        pool.append(c)
    for cand in candidates or ():
        pool.append(np.asarray(cand, dtype=float))

    for c in pool:
        c = normalize(c)
        if c is None or not feasible(c):
            continue
        feasible_draws += 1
        val = value(c)
        if val < best_value:
            best_value, best = val, c

    if best is not None:
        step = 0.5
        for _ in range(descent_steps):
            trial = normalize(best + step * rng.standard_normal(m)
                              * (best != 0))
            if trial is not None and feasible(trial):
                val = value(trial)
                if val < best_value:
                    best_value, best = val, trial
                    continue
            step *= 0.9

    return ProbeResult(best_value=best_value, best_vector=best,
                       meets_half=best_value >= 0.5,
                       feasible_draws=feasible_draws)
