"""Command-line front end.

Subcommands: construct (build a certified instance), simulate (Monte Carlo
experiment from an INI config), estimate (debiased estimate from data
files), crlb (class lower bounds), check-pair (pair certification).

Exit codes: 0 success, 1 usage/config error, 2 certification failure,
3 runtime failure.  All randomness requires an explicit seed.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import matrixio
from .crlb import ModelClass, crlb_l0, crlb_l1
from .errors import (CertificationFailed, HypothesisViolated,
                     InfNormViolated, IrrepresentableViolated,
                     L1ProductTooLarge, LinfViolated, MarginViolated,
                     NotAllowed, OddSampleSize, SharpLassoError,
                     SignInstability, WeightConditionViolated)
from .estimators import debias_known_sigma, debias_unknown_sigma
from .harness import (ExperimentConfig, audit_lemmas, build_instance,
                      run_experiment, write_report)
from .models import DesignSample, build_model
from .pairs import certify_pair, sharp_direction
from .solvers import default_lambda

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CERTIFICATION = 2
EXIT_RUNTIME = 3

CERTIFICATION_ERRORS = (CertificationFailed, LinfViolated,
                        L1ProductTooLarge, MarginViolated, InfNormViolated,
                        IrrepresentableViolated, WeightConditionViolated,
                        SignInstability, NotAllowed, HypothesisViolated,
                        OddSampleSize)

CONSTRUCT_NAMES = {
    "regression": "regression",
    "direct": "direct",
    "reversed-irrep": "reversed_irrepresentable",
    "lagrangian": "lagrangian",
}


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage errors exit 1, per the exit contract."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def _write_pair_csv(path, pair, model, direction):
    header = ("lambda_sharp,linf_residual,l1_product,theta11,"
              "theta11_sharp,improvement")
    values = (pair.lambda_sharp, pair.linf_residual, pair.l1_product,
              model.theta11, direction.theta11_sharp, direction.improvement)
    with open(path, "w") as handle:
        handle.write(header + "\n")
        handle.write(",".join(format(v, ".17g") for v in values) + "\n")


def _write_witness_csv(path, witness):
    with open(path, "w") as handle:
        handle.write("key,value\n")
        for key, value in witness.items():
            if isinstance(value, np.ndarray):
                text = " ".join(format(float(v), ".17g")
                                for v in np.ravel(value))
            elif isinstance(value, float):
                text = format(value, ".17g")
            else:
                text = str(value)
            handle.write(f"{key},{text}\n")


def cmd_construct(args) -> int:
    config = ExperimentConfig(
        construction=CONSTRUCT_NAMES[args.construction],
        p=args.p,
        n=max(args.p, 4),
        lambda_sharp=args.lambda_sharp,
        rho=args.rho,
        t=args.t,
        protected_size=args.protected_size,
        regression_big_n=args.big_n,
        construction_seed=args.seed if args.seed is not None else 0,
        master_seed=args.seed if args.seed is not None else 0,
    )
    if args.construction == "regression" and args.seed is None:
        raise ValueError("construct regression requires --seed")
    out = build_instance(config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    matrixio.write_matrix_csv(out_dir / "sigma.csv", out.model.sigma)
    np.savetxt(out_dir / "gamma_sharp.csv", out.pair.gamma_sharp,
               fmt="%.17g", delimiter=",")
    _write_pair_csv(out_dir / "pair.csv", out.pair, out.model, out.direction)
    _write_witness_csv(out_dir / "witness.csv", out.witness)
    print(f"certified instance written to {out_dir} "
          f"(improvement {out.direction.improvement:.6g})")
    return EXIT_OK


_CONFIG_TYPES = {
    "construction": str, "estimator": str, "n": int, "p": int,
    "replicates": int, "lam": float, "lambda_sharp": float,
    "lambda_node": float, "t": float, "alpha": float, "support_size": int,
    "boundary_margin": float, "class_m": float, "rho": float,
    "protected_size": int, "regression_big_n": int,
    "construction_seed": int, "master_seed": int, "threads": int,
    "class_kind": str, "class_r": float, "class_s": int, "class_n": int,
    "magnitudes": str,
}


def load_config(path) -> ExperimentConfig:
    """Parse an INI experiment config; unknown keys are rejected."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ValueError(f"cannot read config file {path}")
    if not parser.has_section("experiment"):
        raise ValueError("config must have an [experiment] section")
    raw = dict(parser.items("experiment"))
    unknown = set(raw) - set(_CONFIG_TYPES)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")

    kwargs = {}
    class_spec = {}
    for key, text in raw.items():
        value = _CONFIG_TYPES[key](text)
        if key.startswith("class_") and key != "class_m":
            class_spec[key[len("class_"):]] = value
        elif key == "magnitudes":
            kwargs[key] = tuple(float(v) for v in text.split())
        else:
            kwargs[key] = value
    if class_spec:
        if "kind" not in class_spec:
            raise ValueError("model class requires class_kind")
        kwargs["model_class"] = ModelClass(
            kind=class_spec["kind"],
            r={"l0": 0.0, "l1": 1.0}.get(class_spec["kind"],
                                         class_spec.get("r", 0.5)),
            s=class_spec.get("s", 1),
            n=class_spec.get("n", kwargs.get("n", 200)))
    valid = {f.name for f in fields(ExperimentConfig)}
    bad = set(kwargs) - valid
    if bad:
        raise ValueError(f"unknown config keys: {sorted(bad)}")
    return ExperimentConfig(**kwargs)


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = ExperimentConfig(**{**config.__dict__,
                                     "master_seed": args.seed})
    if args.threads is not None:
        config = ExperimentConfig(**{**config.__dict__,
                                     "threads": args.threads})
    report = run_experiment(config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_report(report, out_dir / "rows.csv", out_dir / "aggregates.csv")

    audit = audit_lemmas(config) if args.audit else None

    agg = report.aggregates
    for key in ("replicates", "failures", "coverage", "empirical_variance",
                "ks_distance", "theta11", "theta11_sharp", "improvement",
                "master_seed"):
        print(f"{key:>20}: {agg[key]}")
    if audit is not None:
        print(f"{'slow_rate_passes':>20}: "
              f"{audit.slow_rate_passes}/{audit.slow_rate_checked}")
        print(f"{'pair_dist_passes':>20}: "
              f"{audit.pair_distance_passes}/{audit.pair_certified}")

    failure_rate = agg["failures"] / agg["replicates"]
    if failure_rate > 0.05:
        print(f"replicate failure rate {failure_rate:.1%} exceeds 5%",
              file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _load_vector(path) -> np.ndarray:
    return np.atleast_1d(np.loadtxt(path, delimiter=",", dtype=float))


def cmd_estimate(args) -> int:
    x = np.loadtxt(args.x, delimiter=",", dtype=float, ndmin=2)
    y = _load_vector(args.y)
    n, p = x.shape
    if y.shape != (n,):
        raise ValueError("X and Y have inconsistent shapes")
    lam = args.lam if args.lam is not None else default_lambda(n, p)
    sample = DesignSample(n=n, x=x, y=y, beta0=None, eps=None,
                          seed=args.seed if args.seed is not None else 0)

    if args.sigma is not None:
        if args.gamma_sharp is None or args.lambda_sharp is None:
            raise ValueError(
                "--sigma requires --gamma-sharp and --lambda-sharp")
        model = build_model(matrixio.read_matrix_csv(args.sigma))
        pair = certify_pair(model, _load_vector(args.gamma_sharp),
                            args.lambda_sharp)
        direction = sharp_direction(model, pair)
        result = debias_known_sigma(sample, model, direction, lam,
                                    alpha=args.alpha)
        lambda_node = ""
    else:
        if args.lambda_node is None:
            raise ValueError("estimate without --sigma requires --lambda-node")
        result = debias_unknown_sigma(sample, lam, args.lambda_node,
                                      alpha=args.alpha)
        lambda_node = format(args.lambda_node, ".17g")

    print("estimate,variance_proxy,ci_low,ci_high,lambda,lambda_node")
    row = [format(v, ".17g") for v in
           (result.estimate, result.variance_proxy, result.ci_low,
            result.ci_high, lam)]
    print(",".join(row + [lambda_node]))
    return EXIT_OK


def cmd_crlb(args) -> int:
    if args.sigma is not None:
        model = build_model(matrixio.read_matrix_csv(args.sigma))
    else:
        model = build_model(np.eye(args.identity_p))

    print("class,budget,bound,bound_high,theta11")
    if args.model_class == "l1":
        result = crlb_l1(model, args.budget)
        low = high = result.bound
    elif args.model_class == "l0":
        result = crlb_l0(model, int(args.budget))
        low = high = result.bound
    else:
        low_res = crlb_l0(model, int(args.s))
        high_res = crlb_l1(model, args.budget)
        low, high = sorted((low_res.bound, high_res.bound))
    print(",".join([args.model_class, format(args.budget, ".17g"),
                    format(low, ".17g"), format(high, ".17g"),
                    format(model.theta11, ".17g")]))
    return EXIT_OK


def cmd_check_pair(args) -> int:
    if args.sigma is not None:
        model = build_model(matrixio.read_matrix_csv(args.sigma))
    else:
        model = build_model(np.eye(args.identity_p))
    if args.gamma_sharp is not None:
        gamma = _load_vector(args.gamma_sharp)
    else:
        gamma = np.zeros(model.p - 1)
    pair = certify_pair(model, gamma, args.lambda_sharp,
                        eps_eligible=args.eps_eligible)
    direction = sharp_direction(model, pair)
    print("status,lambda_sharp,linf_residual,l1_product,theta11,"
          "theta11_sharp,improvement")
    print("eligible," + ",".join(format(v, ".17g") for v in (
        pair.lambda_sharp, pair.linf_residual, pair.l1_product,
        model.theta11, direction.theta11_sharp, direction.improvement)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sharplasso",
                     description="Debiased Lasso with surrogate directions")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    c = sub.add_parser("construct", help="build a certified instance")
    c.add_argument("construction", choices=sorted(CONSTRUCT_NAMES))
    c.add_argument("--p", type=int, required=True)
    c.add_argument("--lambda-sharp", type=float, default=None)
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--t", type=float, default=1.0)
    c.add_argument("--rho", type=float, default=0.0)
    c.add_argument("--protected-size", type=int, default=1)
    c.add_argument("--big-n", type=int, default=None)
    c.add_argument("--out-dir", default=".")
    c.set_defaults(func=cmd_construct)

    s = sub.add_parser("simulate", help="run a Monte Carlo experiment")
    s.add_argument("config", help="INI config with an [experiment] section")
    s.add_argument("--seed", type=int, default=None,
                   help="override master_seed")
    s.add_argument("--threads", type=int, default=None)
    s.add_argument("--out-dir", default=".")
    s.add_argument("--audit", action="store_true",
                   help="also run the lemma-inequality audits")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate", help="debiased estimate from data files")
    e.add_argument("--x", required=True, help="design matrix CSV")
    e.add_argument("--y", required=True, help="response vector CSV")
    e.add_argument("--lam", type=float, default=None)
    e.add_argument("--lambda-node", type=float, default=None)
    e.add_argument("--alpha", type=float, default=0.05)
    e.add_argument("--sigma", default=None,
                   help="known covariance CSV (enables the split estimator)")
    e.add_argument("--gamma-sharp", default=None)
    e.add_argument("--lambda-sharp", type=float, default=None)
    e.add_argument("--seed", type=int, default=None)
    e.set_defaults(func=cmd_estimate)

    b = sub.add_parser("crlb", help="class lower bounds")
    b.add_argument("--class", dest="model_class",
                   choices=("l0", "l1", "lr"), required=True)
    b.add_argument("--budget", type=float, required=True)
    b.add_argument("--s", type=int, default=1,
                   help="sparsity for the lr bracket's l0 end")
    b.add_argument("--sigma", default=None)
    b.add_argument("--identity-p", type=int, default=5)
    b.set_defaults(func=cmd_crlb)

    k = sub.add_parser("check-pair", help="certify a candidate pair")
    k.add_argument("--lambda-sharp", type=float, required=True)
    k.add_argument("--gamma-sharp", default=None,
                   help="vector CSV; defaults to the zero vector")
    k.add_argument("--sigma", default=None)
    k.add_argument("--identity-p", type=int, default=5)
    k.add_argument("--eps-eligible", type=float, default=0.05)
    k.set_defaults(func=cmd_check_pair)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CERTIFICATION_ERRORS as exc:
        print(f"certification failed: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_CERTIFICATION
    except (ValueError, OSError, configparser.Error) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SharpLassoError as exc:
        print(f"runtime failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
