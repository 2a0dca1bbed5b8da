"""Debiased Lasso inference with sparse surrogate directions.

The precision-matrix direction theta_1 is not the only valid debiasing
direction: any certified surrogate pair (gamma_sharp, lambda_sharp) yields
a direction whose asymptotic variance can sit strictly below theta11.
This package certifies such pairs, reverse-engineers covariance models
where the improvement is strict, runs the matching sample-split and
node-wise estimators, and measures everything by Monte Carlo.
"""

from . import errors
from .constructions import (ConstructionOutput, construct_direct,
                            construct_lagrangian, construct_regression,
                            construct_reversed_irrepresentable)
from .crlb import (CrlbComparison, CrlbResult, ModelClass, crlb_compare,
                   crlb_l0, crlb_l1, known_support_bound)
from .estimators import (DebiasOutput, LinearityDiagnostic,
                         debias_known_sigma, debias_unknown_sigma,
                         lambda_eps_sharp, linearity_diagnostic, z_quantile)
from .harness import (AuditReport, ExperimentConfig, ExperimentReport,
                      ProbeResult, audit_lemmas, build_instance,
                      equicorrelation, re_eigenvalue_probe, run_experiment,
                      write_report)
from .models import (AllowedDiagnostics, CovarianceModel, DesignSample,
                     augmented_sigma, build_model, is_allowed, sample)
from .pairs import (EligiblePair, ProjectionPair, SharpDirection, TopSPair,
                    certify_pair, pair_distance, projection_pair,
                    projection_variance_audit, sharp_direction,
                    sparsity_index, top_s_projection_pair)
from .solvers import (LassoFit, SlowRateCertificate, default_lambda, lasso,
                      nodewise_lasso, population_lasso,
                      slow_rate_certificate)
from .tails import (chi_square_tail, correlated_pair_tail,
                    inner_product_tail, product_mgf_bound, union_level)

__version__ = "0.1.0"
