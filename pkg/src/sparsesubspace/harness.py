"""Monte Carlo harness for spiked-covariance sparse PCA experiments.

For every grid cell and replicate the harness draws a random row-sparse
truth ``V``, samples ``n`` observations from ``N(0, b V V^T + I)``, estimates
the principal subspace from the sample covariance and records
``||sin Theta(V_hat, V)||_F^2``. Results depend only on the configuration:
each replicate gets its own counter-based random stream derived from
``(master_seed, cell, replicate)``, so thread count and execution order
never change the output.
"""

from __future__ import annotations

import csv
import enum
import itertools
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .covariance import make_rng, sample_covariance, sample_gaussian, spiked_covariance
from .errors import InsufficientGrid, InvalidParameter
from .estimators import (
    DEFAULT_BUDGET,
    Mode,
    SolverOptions,
    SparsityConstraint,
    estimate_column_sparse_exact,
    estimate_exact,
    estimate_iterative,
    estimation_error,
)
from .geometry import StiefelMatrix, random_stiefel
from .matrix_io import read_matrix
from .rates import column_rate_driver, row_rate_driver

log = logging.getLogger(__name__)

RECORD_FIELDS = ["cell_id", "p", "n", "d", "q", "R_q", "b", "sigma_sq", "estimator",
                 "replicate", "seed", "error_sq", "objective", "converged", "runtime_ms"]
SUMMARY_FIELDS = ["cell_id", "p", "n", "d", "q", "R_q", "b", "sigma_sq", "count", "mean", "sd",
                  "median", "q10", "q90", "convergence_rate", "failures", "warning"]


class Estimator(str, enum.Enum):
    EXACT = "exact"
    ITERATIVE = "iterative"
    COLUMN_EXACT = "column_exact"


@dataclass(frozen=True)
class Cell:
    p: int
    n: int
    d: int
    R_q: float
    q: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if not 1 <= self.d < self.p:
            raise InvalidParameter(f"need 1 <= d < p, got d={self.d}, p={self.p}")
        if self.n < 2:
            raise InvalidParameter("n must be at least 2")
        if not self.b > 0:
            raise InvalidParameter("b must be positive")
        SparsityConstraint(Mode.ROW, self.q, self.R_q).check(self.p, self.d)

    @property
    def sigma_sq(self) -> float:
        return (1 + self.b) / self.b ** 2


@dataclass
class ExperimentConfig:
    cells: list
    replicates: int = 100
    master_seed: int = 0
    estimator: Estimator = Estimator.ITERATIVE
    solver_options: SolverOptions = field(default_factory=SolverOptions)
    truth: str | None = None
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        self.cells = [c if isinstance(c, Cell) else Cell(**c) for c in self.cells]
        self.estimator = Estimator(self.estimator)
        if isinstance(self.solver_options, dict):
            self.solver_options = SolverOptions(**self.solver_options)
        if self.replicates < 1:
            raise InvalidParameter("replicates must be at least 1")
        if not self.cells:
            raise InvalidParameter("the grid has no cells")

    @classmethod
    def from_dict(cls, cfg: dict) -> "ExperimentConfig":
        """Build from the JSON layout; ``grid`` is a list of cells or a dict of value lists."""
        cfg = dict(cfg)
        grid = cfg.pop("grid", None) or cfg.pop("cells", None)
        if isinstance(grid, dict):
            keys = list(grid)
            values = [v if isinstance(v, list) else [v] for v in grid.values()]
            grid = [dict(zip(keys, combo)) for combo in itertools.product(*values)]
        truth = cfg.pop("truth", None)
        if isinstance(truth, dict):
            truth = truth.get("file")
        elif truth in ("random_sparse", "RandomSparseStiefel"):
            truth = None
        cfg.pop("driver", None)
        return cls(cells=grid, truth=truth, **cfg)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {
            "grid": [asdict(c) for c in self.cells],
            "replicates": self.replicates,
            "master_seed": self.master_seed,
            "estimator": self.estimator.value,
            "solver_options": asdict(self.solver_options),
            "truth": {"file": self.truth} if self.truth else "random_sparse",
            "budget": self.budget,
        }


@dataclass
class SimulationRecord:
    cell_id: int
    p: int
    n: int
    d: int
    q: float
    R_q: float
    b: float
    sigma_sq: float
    estimator: str
    replicate: int
    seed: int
    error_sq: float
    objective: float
    converged: bool
    runtime_ms: float
    error: str = ""


def replicate_seed(master_seed: int, cell_id: int, replicate: int) -> int:
    """64-bit seed for one replicate, hashed from its coordinates."""
    ss = np.random.SeedSequence([int(master_seed), int(cell_id), int(replicate)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def truth_support_size(p: int, d: int, q: float, R_q: float) -> int:
    """Largest k with ``d^{q/2} k^{1-q/2} <= R_q``, capped at p.

    Any orthonormal basis supported on k rows then lies in the q-ball of
    radius ``R_q``; for q = 0 this is ``floor(R_q)``.
    """
    if q == 0:
        k = int(math.floor(R_q + 1e-12))
    else:
        k = int(math.floor((R_q / d ** (q / 2)) ** (1 / (1 - q / 2)) + 1e-9))
    return max(d, min(k, p))


def make_truth(p: int, d: int, R0: int, seed) -> StiefelMatrix:
    """Random row-sparse basis: a Haar point of V_{R0,d} placed on R0 random rows."""
    if not 1 <= d <= R0 <= p:
        raise InvalidParameter(f"need d <= R0 <= p, got d={d}, R0={R0}, p={p}")
    rng = make_rng(seed)
    support = np.sort(rng.choice(p, size=R0, replace=False))
    V = np.zeros((p, d))
    V[support] = random_stiefel(R0, d, rng).data
    return StiefelMatrix(V)


def _estimate(S, cell, config, seed):
    opts = config.solver_options
    if config.estimator is Estimator.EXACT:
        return estimate_exact(S, cell.d, SparsityConstraint(Mode.ROW, 0.0, cell.R_q), config.budget)
    if config.estimator is Estimator.COLUMN_EXACT:
        return estimate_column_sparse_exact(S, cell.d, int(math.floor(cell.R_q)), config.budget)
    opts = SolverOptions(opts.max_iterations, opts.tolerance, opts.restarts, seed)
    return estimate_iterative(S, cell.d, SparsityConstraint(Mode.ROW, cell.q, cell.R_q), opts)


def run_replicate(config: ExperimentConfig, cell_id: int, replicate: int,
                  truth=None) -> SimulationRecord:
    cell = config.cells[cell_id]
    seed = replicate_seed(config.master_seed, cell_id, replicate)
    rec = SimulationRecord(cell_id, cell.p, cell.n, cell.d, cell.q, cell.R_q, cell.b,
                           cell.sigma_sq, config.estimator.value, replicate, seed,
                           math.nan, math.nan, False, 0.0)
    start = time.perf_counter()
    try:
        if truth is None:
            k = truth_support_size(cell.p, cell.d, cell.q, cell.R_q)
            truth = make_truth(cell.p, cell.d, k, [seed, 0])
        model = spiked_covariance(truth, cell.b)
        X = sample_gaussian(model, cell.n, [seed, 1])
        S = sample_covariance(X)
        est = _estimate(S, cell, config, seed)
        rec.error_sq = estimation_error(est.basis, truth)
        rec.objective = est.objective
        rec.converged = bool(est.converged)
    except Exception as exc:  # recorded, never aborts the run
        rec.error = f"{type(exc).__name__}: {exc}"
        log.warning("cell %d replicate %d failed: %s", cell_id, replicate, rec.error)
    rec.runtime_ms = 1000.0 * (time.perf_counter() - start)
    return rec


def run_experiment(config: ExperimentConfig, threads: int = 1) -> list:
    """Run every cell x replicate; records are sorted by (cell_id, replicate)."""
    truth = None
    if config.truth:
        truth = StiefelMatrix(read_matrix(config.truth))
        for c in config.cells:
            if truth.shape != (c.p, c.d):
                raise InvalidParameter(f"supplied truth has shape {truth.shape}, cell needs {(c.p, c.d)}")
    jobs = [(c, r) for c in range(len(config.cells)) for r in range(config.replicates)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda j: run_replicate(config, *j, truth=truth), jobs))
    else:
        records = [run_replicate(config, c, r, truth=truth) for c, r in jobs]
    records.sort(key=lambda rec: (rec.cell_id, rec.replicate))
    return records


def aggregate(records) -> list:
    """Per-cell summary statistics of ``error_sq``.

    Failed replicates count toward ``failures`` and are excluded from the
    statistics; a cell with no usable record yields a row whose ``warning``
    field is set and whose statistics are NaN. ``sd`` uses divisor N.
    """
    groups = {}
    for rec in records:
        groups.setdefault(rec.cell_id, []).append(rec)
    rows = []
    for cell_id in sorted(groups):
        recs = groups[cell_id]
        first = recs[0]
        ok = [r for r in recs if not r.error and math.isfinite(r.error_sq)]
        row = {k: getattr(first, k) for k in ("cell_id", "p", "n", "d", "q", "R_q", "b", "sigma_sq")}
        row.update(count=len(ok), failures=len(recs) - len(ok), warning="")
        if not ok:
            log.warning("cell %d has no usable records", cell_id)
            row.update(mean=math.nan, sd=math.nan, median=math.nan, q10=math.nan, q90=math.nan,
                       convergence_rate=math.nan, warning="no usable records")
        else:
            e = np.array([r.error_sq for r in ok])
            row.update(mean=float(e.mean()), sd=float(e.std()), median=float(np.median(e)),
                       q10=float(np.quantile(e, 0.1)), q90=float(np.quantile(e, 0.9)),
                       convergence_rate=float(np.mean([r.converged for r in ok])))
        rows.append(row)
    return rows


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r2: float
    driver: str
    cells: int


def rate_fit(summaries, driver: str = "row") -> RateFit:
    """Least-squares fit of ``log(mean error_sq)`` on ``log(rate driver)``.

    The row driver is ``R_q (sigma^2 (d + log p) / n)^{1 - q/2}``; the column
    driver multiplies it by d. A slope near 1 means the errors scale like
    the minimax rate.
    """
    fn = {"row": row_rate_driver, "column": column_rate_driver}.get(str(driver).lower())
    if fn is None:
        raise InvalidParameter(f"unknown driver {driver!r}")
    rows = [s for s in summaries if math.isfinite(s["mean"]) and s["mean"] > 0]
    if len(rows) < 3:
        raise InsufficientGrid(f"need at least 3 usable cells, got {len(rows)}")
    x = np.log([fn(s["p"], s["n"], s["d"], s["q"], s["R_q"], s["sigma_sq"]) for s in rows])
    y = np.log([s["mean"] for s in rows])
    if np.ptp(x) <= 1e-12:
        raise InsufficientGrid("the rate driver does not vary across cells")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(intercept), r2, str(driver).lower(), len(rows))


def write_records(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RECORD_FIELDS)
        for rec in records:
            w.writerow([getattr(rec, k) for k in RECORD_FIELDS])


def write_summary(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS)
        w.writeheader()
        for row in rows:
            w.writerow({k: row[k] for k in SUMMARY_FIELDS})
