"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the lines are repeated in
the terminal summary) or directly with ``python3 tests/test_acceptance.py``.
Monte Carlo criteria 7 and 8 take about a minute each on one core.
"""

import math
import time

import numpy as np
import pytest

from sparsesubspace.constructions import (
    FanoInputs,
    column_sparse_packing,
    fano_bound,
    hypercube_packing,
    kl_spiked,
    stiefel_embedding,
    stiefel_fano_bound,
)
from sparsesubspace.covariance import sample_covariance, sample_gaussian, spiked_covariance
from sparsesubspace.estimators import (
    Mode,
    SolverOptions,
    SparsityConstraint,
    estimate_exact,
    estimate_iterative,
)
from sparsesubspace.geometry import (
    curvature_gap_bound,
    procrustes_distance,
    projector,
    random_stiefel,
    row_q_norm,
    sin_theta_sq,
    variational_sin_theta_bound,
)
from sparsesubspace.harness import Cell, ExperimentConfig, aggregate, rate_fit, run_experiment

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script from elsewhere
    ACCEPTANCE_LINES = []


def report(number, title, ok, detail, elapsed, limit):
    within = elapsed < limit
    status = "PASS" if ok and within else "FAIL"
    line = (f"[{status}] criterion {number:2d} {title}: {detail}; "
            f"runtime {elapsed:.1f}s (limit {limit:.0f}s)")
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok and within


# ----------------------------------------------------------------------- 1


def test_criterion_01_geometry_identities():
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    worst_identity, worst_slack = 0.0, math.inf
    for _ in range(1000):
        p = int(rng.integers(2, 51))
        d = int(rng.integers(1, min(5, p - 1) + 1))
        V1, V2 = random_stiefel(p, d, rng), random_stiefel(p, d, rng)
        E, F = V1.data @ V1.data.T, V2.data @ V2.data.T
        I = np.eye(p)
        a = np.linalg.norm(E @ (I - F)) ** 2
        b = 0.5 * np.linalg.norm(E - F) ** 2
        c = np.linalg.norm((I - E) @ F) ** 2
        s = sin_theta_sq(projector(V1), projector(V2))
        worst_identity = max(worst_identity, abs(a - b), abs(a - c), abs(s - a))
        dist2 = procrustes_distance(V1, V2) ** 2
        worst_slack = min(worst_slack, s - 0.5 * dist2, dist2 - s)
    ok = worst_identity <= 1e-9 and worst_slack >= -1e-9
    assert report(1, "geometry identities", ok,
                  f"max identity residual {worst_identity:.2e}, min sandwich slack {worst_slack:.2e}",
                  time.perf_counter() - start, 30)


# ----------------------------------------------------------------------- 2


def _gaussian_kl(S1, S2):
    p = S1.shape[0]
    M = np.linalg.solve(S2, S1)
    _, logdet = np.linalg.slogdet(M)
    return 0.5 * (np.trace(M) - p - logdet)


def test_criterion_02_kl_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(200):
        p = int(rng.integers(2, 16))
        d = int(rng.integers(1, p))
        b = float(rng.choice([0.5, 1.0, 2.0]))
        A1, A2 = random_stiefel(p, d, rng).data, random_stiefel(p, d, rng).data
        S1 = b * A1 @ A1.T + np.eye(p)
        S2 = b * A2 @ A2.T + np.eye(p)
        worst = max(worst, abs(kl_spiked(A1, A2, b) - _gaussian_kl(S1, S2)))
    assert report(2, "KL oracle equivalence", worst <= 1e-8, f"max |kl - direct| {worst:.2e}",
                  time.perf_counter() - start, 30)


# ----------------------------------------------------------------------- 3


def test_criterion_03_embedding_sandwich():
    start = time.perf_counter()
    rng = np.random.default_rng(303)
    worst = math.inf
    for _ in range(500):
        d = int(rng.integers(1, 5))
        k = int(rng.integers(1, d + 1))
        p = d + int(rng.integers(k + 1, 20))
        J1, J2 = random_stiefel(p - d, k, rng).data, random_stiefel(p - d, k, rng).data
        eps = float(rng.uniform(0, 1))
        A1 = stiefel_embedding(J1, eps, p, d, k).data
        A2 = stiefel_embedding(J2, eps, p, d, k).data
        s = 0.5 * np.linalg.norm(A1 @ A1.T - A2 @ A2.T) ** 2
        dj = np.linalg.norm(J1 - J2) ** 2
        worst = min(worst, s - eps ** 2 * (1 - eps ** 2) * dj, eps ** 2 * dj - s)
    assert report(3, "embedding sandwich", worst >= -1e-9, f"min slack {worst:.2e}",
                  time.perf_counter() - start, 20)


# ----------------------------------------------------------------------- 4


def _psd_with_gap(p, d, rng):
    """Random PSD matrix whose relative gap (lambda_d - lambda_{d+1}) / lambda_1 is >= 0.05."""
    while True:
        lam = np.sort(rng.exponential(1.0, p))[::-1]
        if (lam[d - 1] - lam[d]) / lam[0] >= 0.05:
            break
    Q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    return (Q * lam) @ Q.T


def test_criterion_04_curvature_and_variational():
    start = time.perf_counter()
    rng = np.random.default_rng(404)
    violations = 0
    for _ in range(500):
        p = int(rng.integers(3, 26))
        d = int(rng.integers(1, p))
        A = _psd_with_gap(p, d, rng)
        F = projector(random_stiefel(p, d, rng))
        violations += not curvature_gap_bound(A, F, d).holds
        # variational form: F maximizes <B, .> - g with g(U) = tau * ||U||_{2,1}-style penalty
        H = rng.standard_normal((p, p))
        B = A + 0.2 * (H + H.T)
        w, V = np.linalg.eigh(B)
        Fb = projector(V[:, -d:])
        tau = float(rng.uniform(0, 0.1))
        gE = tau * row_q_norm(np.linalg.eigh(A)[1][:, -d:], 1)
        gF = tau * row_q_norm(V[:, -d:], 1)
        g = variational_sin_theta_bound(B, A, Fb, gE, gF, d)
        violations += not g.holds
    dk_fail = 0
    for _ in range(200):
        p = int(rng.integers(3, 26))
        d = int(rng.integers(1, p))
        A = _psd_with_gap(p, d, rng)
        H = rng.standard_normal((p, p))
        B = A + float(rng.uniform(0.01, 0.5)) * (H + H.T)
        w, V = np.linalg.eigh(B)
        F = projector(V[:, -d:])
        g = variational_sin_theta_bound(B, A, F, 0.0, 0.0, d)
        lam = np.linalg.eigvalsh(A)[::-1]
        gap = lam[d - 1] - lam[d]
        dk_fail += not (g.applicable and g.holds
                        and math.sqrt(g.lhs) / math.sqrt(2) <= np.linalg.norm(B - A) / gap + 1e-9)
    ok = violations == 0 and dk_fail == 0
    assert report(4, "curvature / variational sin-theta", ok,
                  f"{violations} violations in 500 instances, {dk_fail} Davis-Kahan failures in 200",
                  time.perf_counter() - start, 60)


# ----------------------------------------------------------------------- 5


def test_criterion_05_packing_certification():
    start = time.perf_counter()
    problems = []
    for m in (16, 64, 256):
        for s in (2, 4, 8):
            P = hypercube_packing(m, s, seed=0)
            X = P.stack()[:, :, 0]
            s0 = P.meta["s0"]
            if any(row_q_norm(x, 0) > s for x in X):
                problems.append(f"sparsity m={m} s={s}")
            if P.meta["source"] == "greedy":
                B = (X > 0).astype(np.int64)
                ham = B.sum(1)[:, None] + B.sum(1)[None, :] - 2 * B @ B.T
                off = ~np.eye(len(B), dtype=bool)
                if not np.all(4 * ham[off] > s0):
                    problems.append(f"hamming m={m} s={s}")
            G = X @ X.T
            sq = np.diag(G)[:, None] + np.diag(G)[None, :] - 2 * G
            off = ~np.eye(len(X), dtype=bool)
            if not np.all(sq[off] >= 0.25 - 1e-12):
                problems.append(f"distance m={m} s={s}")
            if not P.log_count >= math.log(m) - 1e-12:
                problems.append(f"cardinality m={m} s={s}")
    for p in (10, 22):
        C = column_sparse_packing(p, 2, 1, seed=0)
        H = C.stack().reshape(len(C), -1)
        G = H @ H.T
        sq = np.diag(G)[:, None] + np.diag(G)[None, :] - 2 * G
        off = ~np.eye(len(H), dtype=bool)
        if not np.all(sq[off] >= 2 / 8 - 1e-12):
            problems.append(f"column p={p}")
    assert report(5, "packing certification", not problems,
                  "all properties hold" if not problems else "; ".join(problems),
                  time.perf_counter() - start, 60)


# ----------------------------------------------------------------------- 6


def test_criterion_06_estimator_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(606)
    hits, exact_bad = 0, 0
    for _ in range(100):
        p = int(rng.integers(5, 13))
        d = int(rng.integers(1, 3))
        R0 = int(rng.integers(max(d, 2), 5))
        V = np.zeros((p, d))
        V[rng.choice(p, size=R0, replace=False)] = random_stiefel(R0, d, rng).data
        X = sample_gaussian(spiked_covariance(V, 1.0), 200, int(rng.integers(2**32)))
        S = sample_covariance(X)
        c = SparsityConstraint(Mode.ROW, 0.0, R0)
        ex = estimate_exact(S, d, c)
        U = ex.basis.data
        if not (row_q_norm(U, 0) <= R0 and np.max(np.abs(U.T @ U - np.eye(d))) <= 1e-10):
            exact_bad += 1
        it = estimate_iterative(S, d, c, SolverOptions(restarts=8, seed=int(rng.integers(2**31))))
        hits += it.objective >= ex.objective - 1e-6
    ok = hits >= 90 and exact_bad == 0
    assert report(6, "estimator oracle equivalence", ok,
                  f"{hits}/100 iterative within 1e-6 of enumeration, {exact_bad} infeasible exact outputs",
                  time.perf_counter() - start, 180)


# ----------------------------------------------------------------------- 7, 8


def _scaling_run(cells, master_seed):
    cfg = ExperimentConfig(cells=cells, replicates=200, master_seed=master_seed,
                           estimator="iterative", solver_options=SolverOptions(restarts=8))
    summary = aggregate(run_experiment(cfg))
    return summary, rate_fit(summary, "row")


def test_criterion_07_rate_scaling_in_n():
    start = time.perf_counter()
    cells = [Cell(p=64, n=n, d=2, R_q=6, q=0.0, b=1.0) for n in (500, 1000, 2000, 4000)]
    summary, fit = _scaling_run(cells, master_seed=7)
    means = ", ".join(f"n={r['n']}: {r['mean']:.4g}" for r in summary)
    ok = 0.75 <= fit.slope <= 1.25 and fit.r2 >= 0.9
    assert report(7, "rate scaling in n", ok,
                  f"slope {fit.slope:.3f}, r2 {fit.r2:.3f} (means {means})",
                  time.perf_counter() - start, 480)


def test_criterion_08_rate_scaling_in_R0():
    start = time.perf_counter()
    cells = [Cell(p=64, n=2000, d=2, R_q=R, q=0.0, b=1.0) for R in (4, 8, 16)]
    summary, fit = _scaling_run(cells, master_seed=8)
    means = [r["mean"] for r in summary]
    monotone = all(a < b for a, b in zip(means, means[1:]))
    slope_ok = 0.6 <= fit.slope <= 1.4
    detail = (f"monotone {monotone}, slope {fit.slope:.3f} (required [0.6, 1.4]), r2 {fit.r2:.3f}, "
              f"means " + ", ".join(f"R0={r['R_q']:g}: {r['mean']:.4g}" for r in summary))
    assert report(8, "rate scaling in R0", monotone and slope_ok, detail,
                  time.perf_counter() - start, 300)


# ----------------------------------------------------------------------- 9


def test_criterion_09_gaussian_row_norm():
    start = time.perf_counter()
    rng = np.random.default_rng(909)
    parts, ok = [], True
    for p, d in ((10, 1), (50, 2), (200, 5)):
        Z = rng.standard_normal((2000, p, d))
        mean = float(np.mean(np.max(np.linalg.norm(Z, axis=2), axis=1)))
        bound = 4.15 * math.sqrt(d + math.log(p))
        ok &= mean <= bound
        parts.append(f"(p={p}, d={d}) mean {mean:.3f} <= {bound:.3f}")
    assert report(9, "Gaussian row-norm bound", ok, "; ".join(parts), time.perf_counter() - start, 30)


# ----------------------------------------------------------------------- 10


def test_criterion_10_fano():
    start = time.perf_counter()
    problems = []
    # clamp
    if fano_bound(FanoInputs(1.0, 10.0, 3)) != 0.0:
        problems.append("clamp")
    if stiefel_fano_bound(0.3, 0.0, 10, 1, 1.0, 100) != 0.0 or stiefel_fano_bound(0.3, 1.0, 10, 1, 1.0, 100) != 0.0:
        problems.append("epsilon endpoints")
    # monotonicity grids
    betas = np.linspace(0, 10, 41)
    logs = np.linspace(0.8, 50, 41)
    for alpha in (0.1, 1.0, 3.0):
        for logN in logs:
            v = [fano_bound(FanoInputs(alpha, b, math.exp(logN))) for b in betas]
            if any(x < y - 1e-15 for x, y in zip(v, v[1:])):
                problems.append("beta monotonicity")
        for beta in betas:
            v = [fano_bound(FanoInputs(alpha, beta, math.exp(L))) for L in logs]
            if any(x > y + 1e-15 for x, y in zip(v, v[1:])):
                problems.append("log N monotonicity")
    # composition identity
    rng = np.random.default_rng(1010)
    worst = 0.0
    for _ in range(2000):
        delta, eps = float(rng.uniform(0, 2)), float(rng.uniform(0, 1))
        n, k = int(rng.integers(1, 5000)), int(rng.integers(1, 10))
        sig, N = float(rng.uniform(0.1, 10)), float(math.exp(rng.uniform(math.log(2), 200)))
        lhs = stiefel_fano_bound(delta, eps, n, k, sig, N)
        rhs = fano_bound(FanoInputs(delta * eps * math.sqrt(1 - eps ** 2), 4 * n * k * eps ** 2 / sig, N))
        worst = max(worst, abs(lhs - rhs))
    if worst > 1e-12:
        problems.append(f"composition residual {worst:.2e}")
    problems = sorted(set(problems))
    assert report(10, "Fano evaluators", not problems,
                  f"clamp, monotonicity and composition (max residual {worst:.1e}) "
                  + ("hold" if not problems else "FAILED: " + ", ".join(problems)),
                  time.perf_counter() - start, 5)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
