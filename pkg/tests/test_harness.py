import csv
import math
import random

import numpy as np
import pytest

from sparsesubspace.covariance import sample_covariance, sample_gaussian, spiked_covariance
from sparsesubspace.errors import InsufficientGrid, InvalidParameter
from sparsesubspace.estimators import Mode, SparsityConstraint, estimate_exact, estimation_error
from sparsesubspace.geometry import row_q_norm
from sparsesubspace.harness import (
    RECORD_FIELDS,
    Cell,
    ExperimentConfig,
    SimulationRecord,
    aggregate,
    make_truth,
    rate_fit,
    replicate_seed,
    run_experiment,
    truth_support_size,
    write_records,
    write_summary,
)
from sparsesubspace.matrix_io import write_matrix
from sparsesubspace.rates import row_rate_driver


def small_config(**kw):
    base = dict(cells=[Cell(p=8, n=60, d=1, R_q=3), Cell(p=8, n=120, d=2, R_q=3)],
                replicates=3, master_seed=11, estimator="exact")
    base.update(kw)
    return ExperimentConfig(**base)


def rec(cell_id, err, n=100, converged=True, error=""):
    return SimulationRecord(cell_id, 10, n, 1, 0.0, 3, 1.0, 2.0, "exact", 0, 0, err, 0.0,
                            converged, 0.0, error)


# ---------------------------------------------------------------- truth


def test_make_truth_properties():
    V = make_truth(12, 2, 5, seed=3)
    assert row_q_norm(V, 0) == 5
    np.testing.assert_allclose(V.data.T @ V.data, np.eye(2), atol=1e-12)
    assert np.array_equal(V.data, make_truth(12, 2, 5, seed=3).data)
    W = make_truth(6, 3, 3, seed=0).data
    rows = np.flatnonzero(np.linalg.norm(W, axis=1) > 0)
    np.testing.assert_allclose(W[rows].T @ W[rows], np.eye(3), atol=1e-12)
    with pytest.raises(InvalidParameter):
        make_truth(5, 3, 2, seed=0)


def test_truth_support_size():
    assert truth_support_size(64, 2, 0, 6) == 6
    assert truth_support_size(64, 2, 0, 6.7) == 6
    # q = 1, d = 2: sqrt(2) sqrt(k) <= R  =>  k <= R^2 / 2
    assert truth_support_size(64, 2, 1.0, 4.0) == 8
    assert truth_support_size(10, 2, 1.0, 100.0) == 10


def test_replicate_seeds_distinct():
    seeds = {replicate_seed(0, c, r) for c in range(5) for r in range(200)}
    assert len(seeds) == 1000


# ---------------------------------------------------------------- config


def test_config_from_dict_grid_product():
    cfg = ExperimentConfig.from_dict({
        "grid": {"p": 20, "n": [100, 200], "d": 2, "R_q": [4, 6], "b": 1.0},
        "replicates": 2, "master_seed": 1, "estimator": "iterative",
        "solver_options": {"restarts": 2}, "truth": "random_sparse", "driver": "row"})
    assert len(cfg.cells) == 4
    assert cfg.solver_options.restarts == 2
    assert cfg.truth is None
    again = ExperimentConfig.from_dict(cfg.to_dict())
    assert again.cells == cfg.cells


def test_config_validation():
    with pytest.raises(InvalidParameter):
        small_config(replicates=0)
    with pytest.raises(InvalidParameter):
        Cell(p=8, n=50, d=2, R_q=1)
    with pytest.raises(ValueError):
        small_config(estimator="magic")


def test_cell_sigma_sq():
    assert Cell(p=8, n=50, d=1, R_q=2, b=1.0).sigma_sq == 2.0
    assert Cell(p=8, n=50, d=1, R_q=2, b=0.5).sigma_sq == pytest.approx(6.0)


# ---------------------------------------------------------------- runs


def test_run_matches_manual_composition():
    cfg = small_config(replicates=1)
    recs = run_experiment(cfg)
    r = recs[0]
    seed = replicate_seed(11, 0, 0)
    V = make_truth(8, 1, 3, [seed, 0])
    S = sample_covariance(sample_gaussian(spiked_covariance(V, 1.0), 60, [seed, 1]))
    est = estimate_exact(S, 1, SparsityConstraint(Mode.ROW, 0.0, 3))
    assert r.seed == seed
    assert r.error_sq == estimation_error(est.basis, V)
    assert r.objective == est.objective


def test_run_deterministic_and_thread_invariant():
    cfg = small_config()
    a = run_experiment(cfg)
    b = run_experiment(cfg, threads=3)
    key = lambda rs: [(x.cell_id, x.replicate, x.seed, x.error_sq, x.objective) for x in rs]
    assert key(a) == key(b)
    assert [(x.cell_id, x.replicate) for x in a] == sorted((x.cell_id, x.replicate) for x in a)
    for x in a:
        assert 0 <= x.error_sq <= x.d + 1e-12
        assert x.error == ""


def test_run_records_failures_without_aborting():
    cfg = small_config(replicates=2, budget=1)  # enumeration budget too small
    recs = run_experiment(cfg)
    assert len(recs) == 4
    assert all("EnumerationTooLarge" in r.error for r in recs)
    rows = aggregate(recs)
    assert all(r["warning"] and r["failures"] == 2 and math.isnan(r["mean"]) for r in rows)


def test_supplied_truth(tmp_path):
    V = make_truth(8, 1, 3, seed=5)
    path = tmp_path / "truth.txt"
    write_matrix(path, V.data)
    cfg = ExperimentConfig(cells=[Cell(p=8, n=80, d=1, R_q=3)], replicates=2,
                           estimator="exact", truth=str(path))
    recs = run_experiment(cfg)
    assert all(r.error == "" for r in recs)
    bad = ExperimentConfig(cells=[Cell(p=9, n=80, d=1, R_q=3)], replicates=1, truth=str(path))
    with pytest.raises(InvalidParameter):
        run_experiment(bad)


# ---------------------------------------------------------------- aggregate


def test_aggregate_single_and_pair():
    rows = aggregate([rec(0, 0.3)])
    assert rows[0]["mean"] == 0.3 and rows[0]["sd"] == 0.0
    rows = aggregate([rec(0, 0.2), rec(0, 0.4)])
    assert rows[0]["mean"] == pytest.approx(0.3) and rows[0]["sd"] == pytest.approx(0.1)
    assert rows[0]["median"] == pytest.approx(0.3)


def test_aggregate_streaming_oracle_and_permutation():
    rng = random.Random(0)
    vals = [rng.random() for _ in range(57)]
    recs = [rec(0, v, converged=(i % 3 != 0)) for i, v in enumerate(vals)]
    # Welford streaming mean / variance
    n, mean, m2 = 0, 0.0, 0.0
    for v in vals:
        n += 1
        delta = v - mean
        mean += delta / n
        m2 += delta * (v - mean)
    row = aggregate(recs)[0]
    assert abs(row["mean"] - mean) <= 1e-12
    assert abs(row["sd"] - math.sqrt(m2 / n)) <= 1e-12
    assert row["convergence_rate"] == pytest.approx(sum(i % 3 != 0 for i in range(57)) / 57)
    shuffled = recs[:]
    rng.shuffle(shuffled)
    assert aggregate(shuffled) == aggregate(recs)


def test_aggregate_excludes_failed():
    rows = aggregate([rec(0, 0.5), rec(0, math.nan, error="boom")])
    assert rows[0]["count"] == 1 and rows[0]["failures"] == 1 and rows[0]["mean"] == 0.5


# ---------------------------------------------------------------- rate fit


def summary(n, R, mean, p=64, d=2):
    return {"p": p, "n": n, "d": d, "q": 0.0, "R_q": R, "sigma_sq": 2.0, "mean": mean}


def test_rate_fit_exact_line():
    rows = [summary(n, 6, 0.7 * row_rate_driver(64, n, 2, 0, 6, 2.0)) for n in (500, 1000, 2000, 4000)]
    fit = rate_fit(rows, "row")
    assert fit.slope == pytest.approx(1.0, abs=1e-12)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(0.7), abs=1e-12)
    col = rate_fit(rows, "column")
    assert col.slope == pytest.approx(1.0, abs=1e-12)


def test_rate_fit_errors():
    with pytest.raises(InsufficientGrid):
        rate_fit([summary(500, 6, 0.1), summary(1000, 6, 0.05)])
    with pytest.raises(InsufficientGrid):
        rate_fit([summary(500, 6, m) for m in (0.1, 0.2, 0.3)])
    with pytest.raises(InvalidParameter):
        rate_fit([summary(n, 6, 0.1) for n in (1, 2, 3)], "diagonal")


# ---------------------------------------------------------------- output


def test_write_csv(tmp_path):
    recs = run_experiment(small_config(replicates=2))
    write_records(tmp_path / "r.csv", recs)
    write_summary(tmp_path / "s.csv", aggregate(recs))
    with open(tmp_path / "r.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == RECORD_FIELDS
    assert len(rows) == 5
    with open(tmp_path / "s.csv") as fh:
        srows = list(csv.DictReader(fh))
    assert len(srows) == 2 and float(srows[0]["mean"]) >= 0
