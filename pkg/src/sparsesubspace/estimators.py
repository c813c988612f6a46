"""Row- and column-sparse principal subspace estimators.

The estimators maximize ``<S, U U^T>`` over p x d orthonormal ``U`` under a
row-sparsity (``||U||_{2,q}^q <= R``) or column-sparsity
(``||U||_{*,q}^q <= R``) constraint.

Two kinds of solver are provided:

* exhaustive support enumeration (:func:`estimate_exact`), which uses the
  fact that, for a fixed row support ``I``, the best objective is the sum of
  the top-d eigenvalues of ``S[I, I]``. This is the global optimum for
  q = 0 and serves as ground truth at small p.
* a truncated orthogonal iteration (:func:`estimate_iterative`) that
  alternates ``U <- orth(S U)`` with a step back onto the constraint set.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .covariance import make_rng
from .errors import DimensionMismatch, EnumerationTooLarge, InvalidParameter, RankDeficiency
from .geometry import (
    StiefelMatrix,
    as_stiefel,
    col_q_norm,
    fix_signs,
    orthonormalize,
    projector,
    row_norms,
    row_q_norm,
    sin_theta_sq,
    sym_eigh,
)

DEFAULT_BUDGET = 2_000_000
_CHUNK = 50_000


class Mode(str, enum.Enum):
    ROW = "row"
    COLUMN = "column"


@dataclass(frozen=True)
class SparsityConstraint:
    """Sparsity constraint on a basis: ``mode``, exponent ``q`` and radius ``R_q``."""

    mode: Mode = Mode.ROW
    q: float = 0.0
    radius: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not 0 <= self.q <= 1:
            raise InvalidParameter(f"q must lie in [0, 1], got {self.q}")
        if not self.radius > 0:
            raise InvalidParameter(f"radius must be positive, got {self.radius}")

    def check(self, p: int, d: int):
        """Validate the radius against the admissible range for (p, d)."""
        R, q = self.radius, self.q
        if self.mode is Mode.ROW:
            upper = p if q == 0 else d ** (q / 2) * p ** (1 - q / 2)
            if not d <= R <= upper + 1e-12:
                raise InvalidParameter(f"row radius must lie in [{d}, {upper:.6g}], got {R}")
        else:
            upper = p ** (1 - q / 2)
            if not 1 <= R <= upper + 1e-12:
                raise InvalidParameter(f"column radius must lie in [1, {upper:.6g}], got {R}")

    def measure(self, U) -> float:
        if self.mode is Mode.ROW:
            return row_q_norm(U, self.q)
        m = col_q_norm(U, self.q)
        return m if self.q == 0 else m ** self.q

    def is_feasible(self, U, tol: float = 1e-9) -> bool:
        return self.measure(U) <= self.radius + tol


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 200
    tolerance: float = 1e-10
    restarts: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InvalidParameter("max_iterations must be at least 1")
        if not self.tolerance > 0:
            raise InvalidParameter("tolerance must be positive")
        if self.restarts < 1:
            raise InvalidParameter("restarts must be at least 1")


@dataclass
class EstimateResult:
    """Solver output.

    ``certified`` is True only when the solver guarantees a global optimum.
    ``history`` holds the accepted objective values of the winning run.
    """

    basis: StiefelMatrix
    objective: float
    converged: bool = True
    certified: bool = False
    support: tuple | None = None
    history: list = field(default_factory=list)
    restart: int = 0

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.basis, dtype=dtype)


def _check_square(S):
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionMismatch(f"S must be square, got shape {S.shape}")
    return (S + S.T) / 2


def objective(S, U) -> float:
    """``<S, U U^T> = trace(U^T S U)``."""
    S = np.asarray(S, dtype=float)
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    if S.shape != (U.shape[0], U.shape[0]):
        raise DimensionMismatch(f"S has shape {S.shape}, U has {U.shape[0]} rows")
    return float(np.sum(U * (S @ U)))


def estimation_error(V_hat, V) -> float:
    """``||sin Theta||_F^2`` between the column spans of two bases."""
    V_hat, V = as_stiefel(V_hat), as_stiefel(V)
    if V_hat.shape != V.shape:
        raise DimensionMismatch(f"shapes differ: {V_hat.shape} vs {V.shape}")
    return sin_theta_sq(projector(V_hat), projector(V))


def _restricted_basis(S, support, d):
    """Top-d eigenbasis of ``S[I, I]`` zero-padded back to p rows."""
    idx = np.asarray(support)
    w, W = sym_eigh(S[np.ix_(idx, idx)])
    U = np.zeros((S.shape[0], d))
    U[idx] = W[:, :d]
    return U, float(np.sum(w[:d]))


def _top_sums(S, supports, d):
    sub = S[supports[:, :, None], supports[:, None, :]]
    w = np.linalg.eigvalsh(sub)
    return np.sum(w[:, -d:], axis=1)


def support_values(S, k: int, d: int, budget: int = DEFAULT_BUDGET):
    """Sum of top-d eigenvalues of ``S[I, I]`` for every size-k support, in lexicographic order.

    Returns ``(supports, values)``; intended for small p only.
    """
    S = _check_square(S)
    p = S.shape[0]
    count = math.comb(p, k)
    if count > budget:
        raise EnumerationTooLarge(f"C({p}, {k}) = {count} supports exceeds budget {budget}")
    combos = itertools.combinations(range(p), k)
    sups, vals = [], []
    while True:
        chunk = np.array(list(itertools.islice(combos, _CHUNK)), dtype=np.intp)
        if chunk.size == 0:
            break
        sups.append(chunk)
        vals.append(_top_sums(S, chunk, d))
    return np.vstack(sups), np.concatenate(vals)


def _argmax_lex(values, rtol=1e-12):
    best = np.max(values)
    tol = rtol * max(1.0, abs(best))
    return int(np.flatnonzero(values >= best - tol)[0])


def estimate_exact(S, d: int, constraint: SparsityConstraint,
                   budget: int = DEFAULT_BUDGET) -> EstimateResult:
    """Global maximizer of ``<S, U U^T>`` under ``||U||_{2,0} <= R`` by enumeration.

    Only supports of size ``floor(R)`` are searched: enlarging a support
    never lowers the top-d eigenvalue sum. Ties go to the lexicographically
    smallest support.

    Raises
    ------
    InvalidParameter
        If the constraint is not a q = 0 row constraint or ``R < d``.
    EnumerationTooLarge
        If ``C(p, floor(R))`` exceeds ``budget``.
    """
    S = _check_square(S)
    p = S.shape[0]
    if constraint.mode is not Mode.ROW or constraint.q != 0:
        raise InvalidParameter("exact enumeration requires a q = 0 row constraint")
    if constraint.radius < d:
        raise InvalidParameter(f"radius {constraint.radius} is smaller than d = {d}")
    if not 1 <= d <= p:
        raise InvalidParameter(f"need 1 <= d <= p, got d={d}, p={p}")
    k = min(int(math.floor(constraint.radius)), p)
    sups, vals = support_values(S, k, d, budget)
    i = _argmax_lex(vals)
    support = tuple(int(j) for j in sups[i])
    U, obj = _restricted_basis(S, support, d)
    return EstimateResult(StiefelMatrix(U), obj, converged=True, certified=True,
                          support=support, history=[obj])


# --- feasibility steps -------------------------------------------------------

def _top_rows(U, k):
    r = row_norms(U)
    order = np.argsort(-r, kind="stable")
    return np.sort(order[:k])


def _truncate_rows(U, k):
    keep = _top_rows(U, k)
    W = np.zeros_like(U)
    W[keep] = U[keep]
    return orthonormalize(W).data


def _shrink_rows(U, tau):
    r = row_norms(U)
    scale = np.where(r > tau, 1.0 - tau / np.where(r > 0, r, 1.0), 0.0)
    return U * scale[:, None]


def _soft_row_feasible(U, q, R):
    """Row soft-shrinkage with the smallest level that meets ``||.||_{2,q}^q <= R``.

    The level is located by bisection to 1e-10; the result is orthonormalized
    after shrinking, which keeps zero rows at zero.
    """
    d = U.shape[1]

    def attempt(tau):
        try:
            W = orthonormalize(_shrink_rows(U, tau)).data
        except RankDeficiency:
            return None
        return W if row_q_norm(W, q) <= R else None

    W0 = attempt(0.0)
    if W0 is not None:
        return W0
    r = np.sort(row_norms(U))[::-1]
    hi = float(r[d]) if r.size > d else 0.0
    W_hi = attempt(hi)
    if W_hi is None:
        # at most d rows survive here, which is always feasible since R >= d
        return _truncate_rows(U, d)
    lo = 0.0
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        W = attempt(mid)
        if W is None:
            lo = mid
        else:
            hi, W_hi = mid, W
    return W_hi


def _row_step(U, constraint):
    if constraint.q == 0:
        k = min(int(math.floor(constraint.radius)), U.shape[0])
        return _truncate_rows(U, k)
    return _soft_row_feasible(U, constraint.q, constraint.radius)


# --- row-sparse truncated orthogonal iteration ------------------------------

def _row_run(S, U, constraint, opts):
    obj = objective(S, U)
    history = [obj]
    converged = False
    for _ in range(opts.max_iterations):
        try:
            cand = _row_step(orthonormalize(S @ U).data, constraint)
        except RankDeficiency:
            converged = True
            break
        new = objective(S, cand)
        if new < obj - opts.tolerance:
            # the truncation step overshot; keep the last accepted iterate
            converged = True
            break
        step = new - obj
        U, obj = cand, new
        history.append(obj)
        if abs(step) <= opts.tolerance:
            converged = True
            break
    if constraint.q == 0:
        # Rayleigh-Ritz on the final support cannot lower the objective
        support = tuple(int(j) for j in np.flatnonzero(row_norms(U) > 1e-12))
        if len(support) >= U.shape[1]:
            V, val = _restricted_basis(S, support, U.shape[1])
            if val >= obj:
                U, obj = V, val
                history.append(obj)
    return U, obj, converged, history


def _row_start(S, d, constraint, rng, restart):
    p = S.shape[0]
    if restart == 0:
        _, V = sym_eigh(S)
        return _row_step(V[:, :d], constraint)
    if constraint.q == 0:
        k = min(int(math.floor(constraint.radius)), p)
        support = np.sort(rng.choice(p, size=k, replace=False))
        return _restricted_basis(S, support, d)[0]
    return _row_step(rng.standard_normal((p, d)), constraint)


# --- column-sparse coordinate updates ---------------------------------------

def _null_basis(C):
    """Orthonormal basis of ``{x : C^T x = 0}``; C has shape (m, r)."""
    m = C.shape[0]
    if C.shape[1] == 0:
        return np.eye(m)
    u, s, _ = np.linalg.svd(C, full_matrices=True)
    rank = int(np.sum(s > 1e-12 * max(1.0, s.max(initial=0.0))))
    return u[:, rank:]


def _column_on_support(S, others, support):
    """Best unit column supported on ``support`` and orthogonal to ``others``."""
    idx = np.asarray(support)
    N = _null_basis(others[idx])
    if N.shape[1] == 0:
        return None, -np.inf
    w, W = sym_eigh(N.T @ S[np.ix_(idx, idx)] @ N)
    u = np.zeros(S.shape[0])
    u[idx] = N @ W[:, 0]
    return fix_signs(u[:, None])[:, 0], float(w[0])


def _soft_vector(v, q, R):
    """Entrywise soft-threshold then normalize, smallest level with ``||.||_q^q <= R``."""

    def attempt(tau):
        w = np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)
        nrm = np.linalg.norm(w)
        if nrm == 0:
            return None
        w = w / nrm
        return w if np.sum(np.abs(w) ** q) <= R else None

    w = attempt(0.0)
    if w is not None:
        return w
    a = np.sort(np.abs(v))[::-1]
    hi = float(a[1]) if a.size > 1 else 0.0
    w_hi = attempt(hi)
    if w_hi is None:
        return None
    lo = 0.0
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        w = attempt(mid)
        if w is None:
            lo = mid
        else:
            hi, w_hi = mid, w
    return w_hi


def _column_update(S, U, k, constraint, start=None):
    """Candidate replacement for column k given the other columns of U."""
    p, d = U.shape
    others = np.delete(U, k, axis=1)
    u = U[:, k] if start is None else start
    v = S @ u
    if others.shape[1]:
        v = v - others @ (others.T @ v)
    if not np.any(np.abs(v) > 1e-14):
        v = u
    if constraint.q == 0:
        R = min(int(math.floor(constraint.radius)), p)
        support = np.sort(np.argsort(-np.abs(v), kind="stable")[:R])
        return _column_on_support(S, others, support)[0]
    # for q > 0 the column lives on rows where every other column vanishes
    free = np.all(np.abs(others) <= 1e-12, axis=1)
    if not np.any(free):
        return None
    vf = np.where(free, v, 0.0)
    w = _soft_vector(vf, constraint.q, constraint.radius)
    return None if w is None else fix_signs(w[:, None])[:, 0]


def _column_run(S, U, constraint, opts):
    d = U.shape[1]
    obj = objective(S, U)
    history = [obj]
    converged = False
    for _ in range(opts.max_iterations):
        before = obj
        for k in range(d):
            cand = _column_update(S, U, k, constraint)
            if cand is None:
                continue
            old = float(U[:, k] @ S @ U[:, k])
            new = float(cand @ S @ cand)
            if new > old:
                U = U.copy()
                U[:, k] = cand
        obj = objective(S, U)
        history.append(obj)
        if obj - before <= opts.tolerance:
            converged = True
            break
    return U, obj, converged, history


def _column_start(S, d, constraint, rng, restart):
    p = S.shape[0]
    _, V = sym_eigh(S)
    seeds = V[:, :d] if restart == 0 else rng.standard_normal((p, d))
    U = np.zeros((p, d))
    for k in range(d):
        Uk = np.hstack([U[:, :k], seeds[:, k:k + 1]])
        cand = _column_update(S, Uk, k, constraint, start=seeds[:, k])
        if cand is None:
            raise RankDeficiency("could not build a feasible column-sparse start")
        U[:, k] = cand
    return U


def estimate_iterative(S, d: int, constraint: SparsityConstraint,
                       opts: SolverOptions | None = None) -> EstimateResult:
    """Truncated orthogonal iteration for the row- or column-sparse problem.

    Restart 0 starts from the leading eigenvectors of S; later restarts use
    random feasible supports. Each run only accepts steps that do not lower
    the objective by more than ``opts.tolerance``; the best run is returned.
    Runs that hit ``max_iterations`` are reported with ``converged=False``.
    """
    opts = opts or SolverOptions()
    S = _check_square(S)
    p = S.shape[0]
    if not 1 <= d < p:
        raise InvalidParameter(f"need 1 <= d < p, got d={d}, p={p}")
    constraint.check(p, d)
    row = constraint.mode is Mode.ROW
    best = None
    for r in range(opts.restarts):
        rng = make_rng([opts.seed, r])
        try:
            U0 = (_row_start if row else _column_start)(S, d, constraint, rng, r)
            U, obj, conv, hist = (_row_run if row else _column_run)(S, U0, constraint, opts)
        except RankDeficiency:
            continue
        if best is None or obj > best.objective + 1e-12:
            best = EstimateResult(StiefelMatrix(U), obj, converged=conv, certified=False,
                                  history=hist, restart=r)
    if best is None:
        raise RankDeficiency("no restart produced a feasible orthonormal iterate")
    if row and constraint.q == 0:
        best.support = tuple(int(j) for j in np.flatnonzero(row_norms(best.basis) > 1e-12))
    return best


# --- column-sparse enumeration ----------------------------------------------

def _best_columns(S, others, supports, shift):
    """For every support, the best unit column on it orthogonal to ``others``."""
    m = supports.shape[1]
    A = S[supports[:, :, None], supports[:, None, :]] + shift * np.eye(m)
    if others.shape[1]:
        C = others[supports]  # (N, m, r)
        P = np.eye(m) - C @ np.linalg.pinv(C)
        A = P @ A @ P
        room = np.trace(P, axis1=1, axis2=2) > 0.5
    else:
        room = np.ones(len(supports), dtype=bool)
    w, W = np.linalg.eigh((A + np.swapaxes(A, 1, 2)) / 2)
    vals = np.where(room, w[:, -1] - shift, -np.inf)
    return vals, W[:, :, -1]


def estimate_column_sparse_exact(S, d: int, radius: int,
                                 budget: int = DEFAULT_BUDGET,
                                 tol: float = 1e-9) -> EstimateResult:
    """Column-sparse (q = 0) estimator by per-column support enumeration.

    Every column support is enumerated; for each starting support of the
    first column the remaining columns are filled greedily and then refined
    by alternating maximization (one column at a time, each over all
    supports and orthogonal to the rest) until the gain drops below ``tol``.
    The best result over all starts is returned. For d = 1 this coincides
    with :func:`estimate_exact` and is flagged ``certified``; for d >= 2 it is
    a heuristic.
    """
    S = _check_square(S)
    p = S.shape[0]
    R = int(radius)
    if not 1 <= R <= p:
        raise InvalidParameter(f"radius must lie in [1, {p}], got {radius}")
    if not 1 <= d < p:
        raise InvalidParameter(f"need 1 <= d < p, got d={d}, p={p}")
    if d == 1:
        return estimate_exact(S, 1, SparsityConstraint(Mode.ROW, 0.0, R), budget)
    count = math.comb(p, R)
    if count * count > budget:
        raise EnumerationTooLarge(f"C({p}, {R})^2 = {count * count} exceeds budget {budget}")
    supports = np.array(list(itertools.combinations(range(p), R)), dtype=np.intp)
    shift = max(0.0, -float(np.linalg.eigvalsh(S)[0])) + 1.0

    def fill(cols, k):
        others = np.delete(cols, k, axis=1)
        vals, vecs = _best_columns(S, others, supports, shift)
        i = _argmax_lex(vals)
        if not np.isfinite(vals[i]):
            return None, -np.inf
        u = np.zeros(p)
        u[supports[i]] = vecs[i]
        return fix_signs(u[:, None])[:, 0], float(vals[i])

    best = None
    for s0 in supports:
        U = np.zeros((p, d))
        U[:, 0] = _restricted_basis(S, s0, 1)[0][:, 0]
        ok = True
        for k in range(1, d):
            u, _ = fill(U[:, : k + 1], k)
            if u is None:
                ok = False
                break
            U[:, k] = u
        if not ok:
            continue
        obj = objective(S, U)
        history = [obj]
        while True:
            for k in range(d):
                u, val = fill(U, k)
                if u is not None and val > float(U[:, k] @ S @ U[:, k]):
                    U[:, k] = u
            new = objective(S, U)
            history.append(new)
            gain, obj = new - obj, new
            if gain <= tol:
                break
        if best is None or obj > best.objective + 1e-12:
            best = EstimateResult(StiefelMatrix(U.copy()), obj, converged=True,
                                  certified=False, history=history)
    if best is None:
        raise RankDeficiency("no feasible column-sparse basis found")
    return best
