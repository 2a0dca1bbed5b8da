import math

import numpy as np
import pytest

from sharplasso import harness
from sharplasso.crlb import ModelClass


def small_config(**overrides):
    base = dict(construction="identity", estimator="known", n=40, p=5,
                replicates=12, master_seed=42)
    base.update(overrides)
    return harness.ExperimentConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(construction="mystery")
    with pytest.raises(ValueError):
        small_config(estimator="other")
    with pytest.raises(ValueError):
        small_config(replicates=0)
    with pytest.raises(ValueError):
        small_config(n=2)
    with pytest.raises(ValueError):
        small_config(support_size=99)
    with pytest.raises(ValueError):
        small_config(boundary_margin=0.0)


def test_equicorrelation():
    sig = harness.equicorrelation(4, 0.3)
    assert sig[0, 0] == 1.0 and sig[0, 1] == 0.3
    assert np.linalg.eigvalsh(sig)[0] > 0
    with pytest.raises(ValueError):
        harness.equicorrelation(4, 1.0)


def test_build_instance_dispatch():
    for name in harness.CONSTRUCTIONS:
        config = small_config(construction=name, p=8, n=60)
        out = harness.build_instance(config)
        assert out.model.p == 8
        assert out.direction.improvement >= 0.0
    # identity: the pair is exact, improvement zero
    ident = harness.build_instance(small_config())
    assert ident.direction.improvement == 0.0
    assert ident.model.theta11 == 1.0


def test_beta0_grid_defaults_and_margin():
    config = small_config(support_size=2)
    grid = harness.beta0_grid(config)
    assert len(grid) == 2
    np.testing.assert_allclose(grid[0][:2], 1.0 / math.sqrt(config.n))
    assert np.all(grid[0][2:] == 0.0)
    np.testing.assert_allclose(grid[1][:2], 1.0)
    # an l0 budget of 1 cannot hold a support of 2 inside half the budget
    bad = small_config(support_size=2,
                       model_class=ModelClass("l0", 0.0, 1, 40))
    with pytest.raises(ValueError):
        harness.beta0_grid(bad)
    ok = small_config(support_size=2, boundary_margin=1.0,
                      model_class=ModelClass("l0", 0.0, 2, 40))
    assert len(harness.beta0_grid(ok)) == 2


def test_run_experiment_deterministic():
    config = small_config()
    a = harness.run_experiment(config)
    b = harness.run_experiment(config)
    assert a.rows == b.rows
    assert a.aggregates == b.aggregates


def test_parallel_equals_serial(tmp_path):
    serial = harness.run_experiment(small_config(threads=1))
    parallel = harness.run_experiment(small_config(threads=2))
    assert serial.rows == parallel.rows
    paths = [(tmp_path / f"rows{i}.csv", tmp_path / f"agg{i}.csv")
             for i in range(2)]
    harness.write_report(serial, *paths[0])
    harness.write_report(parallel, *paths[1])
    assert paths[0][0].read_bytes() == paths[1][0].read_bytes()
    assert paths[0][1].read_bytes() == paths[1][1].read_bytes()


def test_aggregates_recompute_from_written_rows(tmp_path):
    report = harness.run_experiment(small_config(estimator="unknown", n=60))
    rows_path = tmp_path / "rows.csv"
    harness.write_report(report, rows_path, tmp_path / "agg.csv")
    rows = harness.read_rows(rows_path)
    agg = harness.aggregates_from_rows(rows, report.config, report.direction,
                                       report.aggregates["theta11"])
    for key, val in report.aggregates.items():
        if isinstance(val, float) and not math.isnan(val):
            assert agg[key] == pytest.approx(val, rel=1e-12), key
        else:
            assert agg[key] == val or (isinstance(val, float)
                                       and math.isnan(agg[key]))


def test_row_format_roundtrip(tmp_path):
    # %.17g float formatting must round-trip exactly through the CSV
    report = harness.run_experiment(small_config(replicates=5))
    rows_path = tmp_path / "rows.csv"
    harness.write_report(report, rows_path, tmp_path / "agg.csv")
    rows = harness.read_rows(rows_path)
    for written, original in zip(rows, report.rows):
        assert written["estimate"] == original["estimate"]
        assert written["studentized"] == original["studentized"]


def test_studentized_statistics_look_normal():
    # quick sanity with enough replicates: coverage near nominal and no
    # failures under the identity model
    report = harness.run_experiment(small_config(n=200, replicates=200))
    agg = report.aggregates
    assert agg["failures"] == 0
    assert 0.85 <= agg["coverage"] <= 1.0
    assert agg["ks_distance"] < 0.15


def test_audit_lemmas_counts():
    config = small_config(construction="direct", p=12, n=120, replicates=8,
                          t=3.0)
    audit = harness.audit_lemmas(config)
    assert audit.replicates == 8
    assert audit.pair_audits == 8
    assert audit.pair_certified <= audit.pair_audits
    assert audit.pair_distance_passes == audit.pair_certified
    assert audit.slow_rate_passes == audit.slow_rate_checked
    assert audit.slow_rate_checked == audit.event_c_count
    if audit.slow_rate_checked:
        assert audit.worst_slack_a >= 0.0
    if audit.pair_distance_passes:
        assert audit.worst_distance_slack >= -1e-12


def test_probe_well_conditioned_identity():
    rng = np.random.default_rng(3)
    n, m = 400, 20
    x = rng.standard_normal((n, m))
    probe = harness.re_eigenvalue_probe(x, np.eye(m), 0.05, 0.5, seed=0)
    assert probe.heuristic
    assert probe.feasible_draws > 0
    assert probe.best_value == pytest.approx(1.0, abs=0.35)
    assert probe.meets_half


def test_probe_excludes_infeasible_candidate():
    rng = np.random.default_rng(4)
    n, m = 100, 30
    x = rng.standard_normal((n, m))
    # dense candidate whose l1 norm breaches the cone cap after
    # normalization: it must not be allowed to set best_value
    dense = np.ones(m)
    tight = harness.re_eigenvalue_probe(x, np.eye(m), lam=1.0, eta=0.2,
                                        seed=1, draws=50,
                                        candidates=[dense])
    assert 1.0 * np.abs(dense / math.sqrt(m)).sum() > 4 * 0.2 ** 2
    if tight.best_vector is not None:
        assert 1.0 * np.abs(tight.best_vector).sum() <= 4 * 0.2 ** 2 + 1e-9


def test_probe_null_space_candidate_detected():
    # design with an exact null direction inside the cone: the probe must
    # find a value near zero and report meets_half = False
    rng = np.random.default_rng(5)
    n, m = 50, 6
    x = rng.standard_normal((n, m))
    x[:, 0] = x[:, 1]          # exact collinearity
    null = np.zeros(m)
    null[0], null[1] = 1.0, -1.0
    probe = harness.re_eigenvalue_probe(x, np.eye(m), lam=0.01, eta=0.5,
                                        seed=2, candidates=[null])
    assert probe.best_value < 0.5
    assert not probe.meets_half
