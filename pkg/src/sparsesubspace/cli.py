"""Command line interface: ``estimate``, ``packing``, ``bounds`` and ``simulate``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import constructions, estimators, harness, rates
from .covariance import sample_covariance
from .errors import SubspaceError
from .matrix_io import read_matrix, write_matrix


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _dump(obj, path=None):
    text = json.dumps(obj, indent=2, default=_json_default, allow_nan=True)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def _load_input(path, kind):
    M = read_matrix(path)
    square_sym = M.shape[0] == M.shape[1] and np.allclose(M, M.T, atol=1e-12)
    if kind == "data" or (kind == "auto" and not square_sym):
        return sample_covariance(M)
    return M


def cmd_estimate(args):
    S = _load_input(args.input, args.kind)
    mode = estimators.Mode(args.mode)
    if args.solver == "exact":
        if args.q != 0:
            raise SubspaceError("the exact solvers require --q 0")
        if mode is estimators.Mode.ROW:
            c = estimators.SparsityConstraint(mode, 0.0, args.radius)
            res = estimators.estimate_exact(S, args.d, c, budget=args.budget)
        else:
            res = estimators.estimate_column_sparse_exact(S, args.d, int(args.radius),
                                                          budget=args.budget)
    else:
        c = estimators.SparsityConstraint(mode, args.q, args.radius)
        opts = estimators.SolverOptions(args.max_iterations, args.tolerance, args.restarts, args.seed)
        res = estimators.estimate_iterative(S, args.d, c, opts)
    if args.output:
        write_matrix(args.output, res.basis)
    _dump({"objective": res.objective, "converged": res.converged,
           "certified": res.certified, "support": res.support,
           "iterations": len(res.history)})


def _packing_manifest(P):
    return {"count": len(P), "log_count": P.log_count, "metric": P.metric,
            "min_distance": P.min_distance, "required_distance": P.required_distance,
            "row_sparsity": P.row_sparsity, "column_sparsity": P.column_sparsity,
            "target_log_count": P.target_log_count, "target_met": P.target_met,
            "certified": True, "shape": list(P.points[0].shape), **P.meta}


def cmd_packing(args):
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "gv":
        code = constructions.gv_code(args.alphabet, args.length, args.min_hamming, seed=args.seed)
        write_matrix(out / "codewords.txt", code)
        dist = [int(np.count_nonzero(a != b)) for i, a in enumerate(code) for b in code[i + 1:]]
        manifest = {"kind": "gv", "count": int(len(code)), "alphabet": args.alphabet,
                    "length": args.length, "min_hamming": args.min_hamming,
                    "realized_min_hamming": min(dist) if dist else None,
                    "certified": all(x >= args.min_hamming for x in dist)}
        _dump(manifest, out / "manifest.json")
        _dump(manifest)
        return
    if args.kind == "hypercube":
        P = constructions.hypercube_packing(args.m, args.s, seed=args.seed, budget=args.budget)
    elif args.kind == "grassmann":
        P = constructions.grassmann_packing(args.m, args.k, args.delta, seed=args.seed,
                                            budget=args.budget)
    else:
        P = constructions.column_sparse_packing(args.p, args.d, args.s, seed=args.seed,
                                                budget=args.budget)
    files = []
    for i, pt in enumerate(P.points):
        name = f"point_{i:05d}.txt"
        write_matrix(out / name, pt)
        files.append(name)
    manifest = _packing_manifest(P)
    manifest["files"] = files
    _dump(manifest, out / "manifest.json")
    manifest.pop("files")
    _dump(manifest)


def cmd_bounds(args):
    raw = sys.stdin.read() if args.params == "-" else Path(args.params).read_text()
    cfg = json.loads(raw)
    c = cfg.pop("c", 1.0)
    if "b" in cfg:
        b = cfg.pop("b")
        params = rates.ProblemParams.spiked(b=b, **cfg)
    elif "sigma_sq" not in cfg:
        params = rates.ProblemParams.from_spectrum(**cfg)
    else:
        params = rates.ProblemParams(**cfg)
    _dump(rates.bounds_report(params, c), args.output)


def cmd_simulate(args):
    raw = json.loads(Path(args.config).read_text())
    driver = raw.get("driver", "row")
    config = harness.ExperimentConfig.from_dict(raw)
    records = harness.run_experiment(config, threads=args.threads)
    summary = harness.aggregate(records)
    if args.output_records:
        harness.write_records(args.output_records, records)
    if args.output_summary:
        harness.write_summary(args.output_summary, summary)
    try:
        fit = asdict(harness.rate_fit(summary, driver))
    except SubspaceError as exc:
        fit = {"error": str(exc)}
    fit["config"] = config.to_dict()
    fit["rng"] = "numpy.random.Philox (SeedSequence per master_seed, cell, replicate)"
    _dump(fit, args.output_fit)
    if not args.output_fit:
        return
    for row in summary:
        print(f"cell {row['cell_id']}: n={row['n']} R_q={row['R_q']} mean={row['mean']:.6g} "
              f"failures={row['failures']}")


def build_parser():
    ap = argparse.ArgumentParser(prog="sparsesubspace",
                                 description="Sparse principal subspace estimation toolkit.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    e = sub.add_parser("estimate", help="estimate a sparse principal subspace")
    e.add_argument("--input", required=True, help="covariance or data matrix file")
    e.add_argument("--kind", choices=["auto", "covariance", "data"], default="auto")
    e.add_argument("--d", type=int, required=True)
    e.add_argument("--q", type=float, default=0.0)
    e.add_argument("--radius", type=float, required=True)
    e.add_argument("--mode", choices=["row", "column"], default="row")
    e.add_argument("--solver", choices=["exact", "iterative"], default="iterative")
    e.add_argument("--restarts", type=int, default=8)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--max-iterations", type=int, default=200)
    e.add_argument("--tolerance", type=float, default=1e-10)
    e.add_argument("--budget", type=int, default=estimators.DEFAULT_BUDGET)
    e.add_argument("--output", help="write the basis to this matrix file")
    e.set_defaults(func=cmd_estimate)

    k = sub.add_parser("packing", help="build a certified packing set")
    k.add_argument("--kind", choices=["hypercube", "grassmann", "column-block", "gv"],
                   required=True)
    k.add_argument("--m", type=int, help="ambient dimension (hypercube, grassmann)")
    k.add_argument("--s", type=float, default=1.0, help="sparsity level")
    k.add_argument("--k", type=int, default=1, help="subspace dimension (grassmann)")
    k.add_argument("--delta", type=float, default=0.5)
    k.add_argument("--p", type=int, help="dimension p (column-block)")
    k.add_argument("--d", type=int, help="subspace dimension d (column-block)")
    k.add_argument("--alphabet", type=int, default=2)
    k.add_argument("--length", type=int, default=2)
    k.add_argument("--min-hamming", type=int, default=1)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--budget", type=int, default=2000)
    k.add_argument("--output", required=True, help="output directory")
    k.set_defaults(func=cmd_packing)

    b = sub.add_parser("bounds", help="evaluate rates and condition checks")
    b.add_argument("--params", required=True, help="params JSON file, or - for stdin")
    b.add_argument("--output")
    b.set_defaults(func=cmd_bounds)

    s = sub.add_parser("simulate", help="run a Monte Carlo experiment")
    s.add_argument("--config", required=True)
    s.add_argument("--output-records")
    s.add_argument("--output-summary")
    s.add_argument("--output-fit")
    s.add_argument("--threads", type=int, default=1)
    s.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (SubspaceError, OSError, json.JSONDecodeError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
