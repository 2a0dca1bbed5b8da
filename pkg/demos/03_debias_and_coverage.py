"""Monte Carlo check of the debiased estimators on a certified instance.

Runs the experiment harness on a direct-construction model where the
surrogate variance is 1 while theta11 = 2, with both the known-covariance
sample-split estimator and the node-wise plug-in estimator.  The
empirical variance tracking the surrogate value (not theta11) is the
point of the whole library.
"""

from sharplasso import ExperimentConfig, run_experiment

for estimator in ("known", "unknown"):
    config = ExperimentConfig(construction="direct", estimator=estimator,
                              n=400, p=60, replicates=400,
                              master_seed=12345)
    report = run_experiment(config)
    agg = report.aggregates
    print(f"estimator = {estimator}:")
    print(f"  theta11 = {agg['theta11']:.4f}, "
          f"theta11_sharp = {agg['theta11_sharp']:.4f}")
    print(f"  empirical variance of sqrt(n)(estimate - truth) = "
          f"{agg['empirical_variance']:.4f}")
    print(f"  coverage of the 95% interval = {agg['coverage']:.4f}")
    print(f"  KS distance to standard normal = {agg['ks_distance']:.4f}")
    print(f"  failed replicates = {agg['failures']}")
