"""Subspace representations, sparsity norms and canonical-angle distances.

Two representations of a d-dimensional subspace of R^p are used throughout:

* a Stiefel basis ``V`` (p x d, orthonormal columns), and
* its orthogonal projector ``V V^T`` (p x p, symmetric, idempotent).

Every function here accepts plain ``ndarray`` inputs as well as the thin
:class:`StiefelMatrix` / :class:`SubspaceProjector` wrappers; the wrappers
only exist to validate the invariants once and carry them around.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGap, DimensionMismatch, InvalidParameter, RankDeficiency

ORTHO_TOL = 1e-10
ZERO_ROW_TOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StiefelMatrix:
    """A p x d matrix with orthonormal columns."""

    data: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.data, dtype=float)
        if V.ndim == 1:
            V = V[:, None]
        if V.ndim != 2:
            raise DimensionMismatch(f"expected a 2-d array, got shape {V.shape}")
        p, d = V.shape
        if d < 1 or p < d:
            raise DimensionMismatch(f"need p >= d >= 1, got p={p}, d={d}")
        resid = np.max(np.abs(V.T @ V - np.eye(d)))
        if not resid <= ORTHO_TOL:
            raise InvalidParameter(f"columns are not orthonormal (residual {resid:.3g})")
        object.__setattr__(self, "data", _frozen(V))

    @property
    def p(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


@dataclass(frozen=True, eq=False)
class SubspaceProjector:
    """Orthogonal projector onto a subspace; ``rank`` is the subspace dimension."""

    data: np.ndarray
    rank: int = -1

    def __post_init__(self):
        P = np.asarray(self.data, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise DimensionMismatch(f"projector must be square, got shape {P.shape}")
        if np.max(np.abs(P - P.T), initial=0.0) > 1e-12:
            raise InvalidParameter("projector is not symmetric")
        if np.max(np.abs(P @ P - P), initial=0.0) > 1e-9:
            raise InvalidParameter("projector is not idempotent")
        tr = float(np.trace(P))
        rank = int(round(tr))
        if abs(tr - rank) > 1e-9:
            raise InvalidParameter(f"projector trace {tr} is not an integer")
        if self.rank >= 0 and self.rank != rank:
            raise InvalidParameter(f"declared rank {self.rank} but trace is {rank}")
        object.__setattr__(self, "data", _frozen(P))
        object.__setattr__(self, "rank", rank)

    @property
    def p(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self):
        return self.data.shape

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


def as_stiefel(V) -> StiefelMatrix:
    return V if isinstance(V, StiefelMatrix) else StiefelMatrix(V)


def as_projector(P) -> SubspaceProjector:
    return P if isinstance(P, SubspaceProjector) else SubspaceProjector(P)


def _pair(E, F):
    E, F = as_projector(E), as_projector(F)
    if E.p != F.p or E.rank != F.rank:
        raise DimensionMismatch(
            f"projectors differ: (p={E.p}, d={E.rank}) vs (p={F.p}, d={F.rank})")
    return E, F


def inner(A, B) -> float:
    """Frobenius inner product ``<A, B> = trace(A^T B)``."""
    return float(np.vdot(np.asarray(A, dtype=float), np.asarray(B, dtype=float)))


def fix_signs(V):
    """Flip columns so that each column's largest-magnitude entry is positive."""
    V = np.array(V, dtype=float)
    if V.size == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def sym_eigh(A):
    """Eigen-decomposition of a symmetric matrix, eigenvalues nonincreasing.

    Eigenvector signs follow :func:`fix_signs` so results are reproducible
    across LAPACK builds.
    """
    A = np.asarray(A, dtype=float)
    w, V = np.linalg.eigh((A + A.T) / 2)
    return w[::-1], fix_signs(V[:, ::-1])


def eigengap(eigenvalues, d: int) -> float:
    """``lambda_d - lambda_{d+1}``; raises :class:`DegenerateGap` when it vanishes."""
    lam = np.asarray(eigenvalues, dtype=float)
    if not 1 <= d < lam.size:
        raise InvalidParameter(f"need 1 <= d < p, got d={d}, p={lam.size}")
    gap = float(lam[d - 1] - lam[d])
    scale = max(abs(float(lam[0])), np.finfo(float).tiny)
    if gap <= 1e-10 * scale:
        raise DegenerateGap(f"eigengap lambda_d - lambda_(d+1) = {gap:.3g} is degenerate")
    return gap


def top_eigenspace(A, d: int):
    """Return ``(V, eigenvalues)`` with V the top-d eigenvectors of symmetric A."""
    w, V = sym_eigh(A)
    return V[:, :d], w


def orthonormalize(M) -> StiefelMatrix:
    """Orthonormal basis for the column span of ``M`` (same column count).

    Raises
    ------
    RankDeficiency
        If the smallest singular value of ``M`` is at most ``1e-10`` times the
        largest.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or not s[-1] > 1e-10 * s[0]:
        raise RankDeficiency("matrix does not have full column rank")
    Q, R = np.linalg.qr(M)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    Q = Q * signs
    return StiefelMatrix(Q)


def projector(V) -> SubspaceProjector:
    """Orthogonal projector ``V V^T`` onto the column span of a Stiefel basis."""
    V = np.asarray(as_stiefel(V), dtype=float)
    P = V @ V.T
    return SubspaceProjector((P + P.T) / 2, rank=V.shape[1])


def canonical_angles(E, F) -> np.ndarray:
    """Canonical angles between two subspaces given by their projectors.

    The angles are the arcsines of the d largest singular values of
    ``E (I - F)``, reported in nonincreasing order.
    """
    E, F = _pair(E, F)
    Fperp = np.eye(F.p) - F.data
    s = np.linalg.svd(E.data @ Fperp, compute_uv=False)[: E.rank]
    return np.arcsin(np.clip(s, 0.0, 1.0))


def sin_theta_sq(E, F) -> float:
    """Squared Frobenius sin-theta distance ``||E (I - F)||_F^2``."""
    E, F = _pair(E, F)
    R = E.data - E.data @ F.data
    return float(np.sum(R * R))


def procrustes_distance(V1, V2) -> float:
    """``min_Q ||V1 - V2 Q||_F`` over d x d orthogonal Q.

    Computed from the singular values of ``V2^T V1`` as
    ``sqrt(2 (d - sum(sigma)))``.
    """
    V1, V2 = as_stiefel(V1), as_stiefel(V2)
    if V1.shape != V2.shape:
        raise DimensionMismatch(f"shapes differ: {V1.shape} vs {V2.shape}")
    s = np.linalg.svd(V2.data.T @ V1.data, compute_uv=False)
    return float(np.sqrt(max(0.0, 2.0 * (V1.d - s.sum()))))


def procrustes_rotation(V1, V2) -> np.ndarray:
    """Orthogonal Q minimizing ``||V1 - V2 Q||_F``."""
    V1, V2 = as_stiefel(V1), as_stiefel(V2)
    U, _, Wt = np.linalg.svd(V2.data.T @ V1.data)
    return U @ Wt


def _check_q(q):
    if not 0 <= q < 2:
        raise InvalidParameter(f"q must lie in [0, 2), got {q}")


def row_norms(U) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    return np.sqrt(np.sum(U * U, axis=1))


def row_q_norm(U, q: float) -> float:
    """Row-sparsity measure ``||U||_{2,q}^q`` (number of nonzero rows when q=0)."""
    _check_q(q)
    r = row_norms(U)
    if q == 0:
        return float(np.count_nonzero(r > ZERO_ROW_TOL))
    return float(np.sum(r ** q))


def col_q_norm(U, q: float) -> float:
    """Column-sparsity measure: max column l_q norm (max nonzero count when q=0)."""
    _check_q(q)
    U = np.abs(np.asarray(U, dtype=float))
    if U.ndim == 1:
        U = U[:, None]
    if q == 0:
        return float(np.max(np.count_nonzero(U > ZERO_ROW_TOL, axis=0)))
    return float(np.max(np.sum(U ** q, axis=0) ** (1.0 / q)))


@dataclass(frozen=True)
class GapBound:
    lhs: float
    rhs: float
    applicable: bool = True

    @property
    def holds(self) -> bool:
        return (not self.applicable) or self.lhs <= self.rhs + 1e-9


def _top_projector(A, d):
    A = np.asarray(A, dtype=float)
    V, w = top_eigenspace(A, d)
    gap = eigengap(w, d)
    return projector(V), gap


def curvature_gap_bound(A, F, d: int) -> GapBound:
    """Both sides of the curvature inequality for the top-d eigenspace of A.

    ``lhs = ||sin Theta(E, F)||_F^2`` and
    ``rhs = <A, E - F> / (lambda_d(A) - lambda_{d+1}(A))`` where E projects
    onto the top-d eigenspace of the PSD matrix ``A``.
    """
    F = as_projector(F)
    E, gap = _top_projector(A, d)
    lhs = sin_theta_sq(E, F)
    rhs = inner(A, E.data - F.data) / gap
    return GapBound(lhs, rhs)


def variational_sin_theta_bound(B, A, F, gE: float, gF: float, d: int) -> GapBound:
    """Variational sin-theta bound for a penalized maximizer F of ``<B, .> - g``.

    ``applicable`` records whether ``<B, E> - g(E) <= <B, F> - g(F)``; the
    inequality ``lhs <= rhs`` is only guaranteed when it holds.
    """
    F = as_projector(F)
    B = np.asarray(B, dtype=float)
    A = np.asarray(A, dtype=float)
    E, gap = _top_projector(A, d)
    applicable = inner(B, E.data) - gE <= inner(B, F.data) - gF + 1e-12
    lhs = sin_theta_sq(E, F)
    rhs = (inner(B - A, F.data - E.data) - (gF - gE)) / gap
    return GapBound(lhs, rhs, applicable=bool(applicable))


@dataclass(frozen=True)
class CrossTerms:
    t1: float
    t2: float
    t3: float

    def combined(self) -> float:
        """``-t1 + 2 t2 + t3``, which equals ``<W, F - E>``."""
        return -self.t1 + 2.0 * self.t2 + self.t3


def cross_decomposition(W, E, F) -> CrossTerms:
    """Split ``<W, F - E>`` into the blocks of W relative to E and its complement."""
    E, F = _pair(E, F)
    W = np.asarray(W, dtype=float)
    if W.shape != E.shape:
        raise DimensionMismatch(f"W has shape {W.shape}, projectors {E.shape}")
    Ed, Fd = E.data, F.data
    I = np.eye(E.p)
    Eperp, Fperp = I - Ed, I - Fd
    t1 = inner(Ed @ W @ Ed, Fperp)
    t2 = inner(Eperp @ W @ Ed, Fd)
    t3 = inner(Eperp @ W @ Eperp, Fd)
    return CrossTerms(t1, t2, t3)


def random_stiefel(p: int, d: int, rng=None) -> StiefelMatrix:
    """Haar-distributed point of the Stiefel manifold (orthonormalized Gaussian)."""
    rng = np.random.default_rng(rng)
    return orthonormalize(rng.standard_normal((p, d)))
