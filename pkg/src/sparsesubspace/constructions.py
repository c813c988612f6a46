"""Lower-bound toolkit: Stiefel embeddings, packing sets, KL and Fano evaluators.

The packing constructors are randomized greedy versions of existence
results. Separation and sparsity are always re-verified on the returned
set; cardinality is only reported (``log_count`` against ``target_log_count``).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .covariance import make_rng
from .errors import DimensionMismatch, InvalidParameter
from .geometry import StiefelMatrix, as_stiefel, col_q_norm, projector, row_q_norm, sin_theta_sq

EUCLIDEAN = "euclidean"
SIN_THETA_F = "sin_theta_f"


class CertificationError(AssertionError):
    """A constructed packing failed re-verification of its declared properties."""


def pairwise_sq_distances(stack, metric=EUCLIDEAN):
    """All pairwise squared distances of an (N, m, k) stack of Stiefel points."""
    X = np.asarray(stack, dtype=float)
    N, _, k = X.shape
    if metric == EUCLIDEAN:
        F = X.reshape(N, -1)
        sq = np.sum(F * F, axis=1)
        D = sq[:, None] + sq[None, :] - 2.0 * F @ F.T
    elif metric == SIN_THETA_F:
        # ||sin Theta(J_i, J_j)||_F^2 = k - ||J_i^T J_j||_F^2
        G = np.einsum("iak,jal->ijkl", X, X)
        D = k - np.sum(G * G, axis=(2, 3))
    else:
        raise InvalidParameter(f"unknown metric {metric!r}")
    np.fill_diagonal(D, np.inf)
    return np.maximum(D, 0.0)


@dataclass(frozen=True, eq=False)
class PackingSet:
    """Finite set of Stiefel points with a verified minimum pairwise distance.

    ``min_distance`` is the realized minimum (not squared) in ``metric``;
    ``required_distance`` is the separation the constructor promises.
    ``row_sparsity`` / ``column_sparsity`` are l0 bounds holding for every point.
    """

    points: tuple
    min_distance: float
    metric: str = EUCLIDEAN
    required_distance: float = 0.0
    row_sparsity: int | None = None
    column_sparsity: int | None = None
    target_log_count: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(as_stiefel(P) for P in self.points))
        self.certify()

    def __len__(self):
        return len(self.points)

    @property
    def log_count(self) -> float:
        return math.log(len(self.points))

    @property
    def target_met(self):
        if self.target_log_count is None:
            return None
        return self.log_count >= self.target_log_count - 1e-12

    def stack(self) -> np.ndarray:
        return np.stack([P.data for P in self.points])

    def certify(self, tol: float = 1e-9):
        """Re-verify separation and sparsity; raises :class:`CertificationError`."""
        if len({P.shape for P in self.points}) > 1:
            raise CertificationError("points do not share a common shape")
        if len(self.points) >= 2:
            D = np.sqrt(pairwise_sq_distances(self.stack(), self.metric))
            realized = float(D.min())
            if realized < self.min_distance - tol:
                raise CertificationError(
                    f"pair at distance {realized} below declared minimum {self.min_distance}")
        if self.min_distance < self.required_distance - tol:
            raise CertificationError(
                f"minimum distance {self.min_distance} below required {self.required_distance}")
        for P in self.points:
            if self.row_sparsity is not None and row_q_norm(P, 0) > self.row_sparsity:
                raise CertificationError("row sparsity bound violated")
            if self.column_sparsity is not None and col_q_norm(P, 0) > self.column_sparsity:
                raise CertificationError("column sparsity bound violated")


def _realized_min(stack, metric):
    if len(stack) < 2:
        return math.inf
    return float(np.sqrt(pairwise_sq_distances(stack, metric).min()))


def stiefel_embedding(J, epsilon: float, p: int, d: int, k: int) -> StiefelMatrix:
    """Block embedding of ``J`` in V_{p-d,k} into V_{p,d}.

    Returns ``[[sqrt(1 - eps^2) I_k, 0], [0, I_{d-k}], [eps J, 0]]``. Rows of J
    that vanish stay zero, so ``||A||_{2,0} = ||J||_{2,0} + d`` whenever eps > 0.
    """
    if not 1 <= k <= d < p:
        raise InvalidParameter(f"need 1 <= k <= d < p, got k={k}, d={d}, p={p}")
    if not 0 <= epsilon <= 1:
        raise InvalidParameter(f"epsilon must lie in [0, 1], got {epsilon}")
    J = np.asarray(as_stiefel(J), dtype=float)
    if J.shape != (p - d, k):
        raise DimensionMismatch(f"J must be {(p - d, k)}, got {J.shape}")
    A = np.zeros((p, d))
    A[:k, :k] = math.sqrt(1.0 - epsilon ** 2) * np.eye(k)
    A[k:d, k:d] = np.eye(d - k)
    A[d:, :k] = epsilon * J
    return StiefelMatrix(A)


def hypercube_packing(m: int, s: float, seed=0, budget: int = 2000) -> PackingSet:
    """Sparse unit vectors in R^m with pairwise squared distance at least 1/4.

    Candidates are ``s0^{-1/2}`` times random binary vectors of weight
    ``s0 = floor(min(m/e, s))``; a candidate is kept when its Hamming distance
    to every kept vector exceeds ``s0/4``. ``budget`` candidates are drawn.
    The canonical basis ``{e_1, ..., e_m}`` is returned instead whenever it is
    at least as large.
    """
    if m < 3:
        raise InvalidParameter(f"m must be at least 3, got {m}")
    if not 1 <= s <= m:
        raise InvalidParameter(f"s must lie in [1, m], got {s}")
    s0 = int(math.floor(min(m / math.e, s)))
    rng = make_rng(seed)
    kept = np.zeros((0, m), dtype=np.int64)
    for _ in range(budget):
        w = np.zeros(m, dtype=np.int64)
        w[rng.choice(m, size=s0, replace=False)] = 1
        # Hamming distance between weight-s0 words is 2 (s0 - overlap)
        if kept.shape[0] == 0 or np.all(2 * (s0 - kept @ w) > s0 / 4):
            kept = np.vstack([kept, w])
    if kept.shape[0] > m:
        vectors = kept / math.sqrt(s0)
        source = "greedy"
    else:
        vectors = np.eye(m)
        source = "canonical"
    stack = vectors[:, :, None]
    target = max(s * (1 + math.log(m / s)) / 30.0, math.log(m))
    return PackingSet(tuple(stack), _realized_min(stack, EUCLIDEAN), EUCLIDEAN,
                      required_distance=0.5, row_sparsity=int(math.floor(s)),
                      target_log_count=target,
                      meta={"kind": "hypercube", "m": m, "s": s, "s0": s0, "source": source,
                            "greedy_size": int(kept.shape[0])})


def gv_code(alphabet: int, length: int, min_hamming: int, seed=0,
            max_words: int = 1_000_000) -> np.ndarray:
    """Greedy code over ``{0..M-1}^length`` with pairwise Hamming distance >= ``min_hamming``.

    Words are scanned in odometer order (at most ``max_words`` of them); the
    seed relabels the symbols of each coordinate, which leaves all Hamming
    distances unchanged. Returns an (N, length) integer array.
    """
    M, n = int(alphabet), int(length)
    if M < 2:
        raise InvalidParameter(f"alphabet size must be at least 2, got {M}")
    if not 1 <= min_hamming <= n:
        raise InvalidParameter(f"min_hamming must lie in [1, {n}], got {min_hamming}")
    rng = make_rng(seed)
    relabel = np.stack([rng.permutation(M) for _ in range(n)])
    cols = np.arange(n)
    code = []
    arr = np.zeros((0, n), dtype=np.int64)
    for word in itertools.islice(itertools.product(range(M), repeat=n), max_words):
        w = relabel[cols, word]
        if arr.shape[0] == 0 or np.all(np.count_nonzero(arr != w, axis=1) >= min_hamming):
            code.append(w)
            arr = np.asarray(code)
    return arr.reshape(-1, n)


def column_sparse_packing(p: int, d: int, s: float, seed=0, budget: int = 2000,
                          max_words: int = 1_000_000) -> PackingSet:
    """Packing in V_{p-d,d} whose columns have disjoint supports in separate row blocks.

    Column k lives in rows ``[k m, (k+1) m)`` with ``m = floor((p-d)/d)`` and is
    a hypercube packing vector chosen by the k-th symbol of a greedy code with
    minimum Hamming distance ``ceil(d/2)``. Distinct points differ in at least
    ``ceil(d/2)`` columns, so pairwise squared distances are at least d/8.
    """
    if d < 1 or p <= d:
        raise InvalidParameter(f"need 1 <= d < p, got d={d}, p={p}")
    m = (p - d) // d
    if m < 3:
        raise InvalidParameter(f"row blocks of size floor((p-d)/d) = {m} are too small")
    cube = hypercube_packing(m, min(max(s, 1.0), m), seed=seed, budget=budget)
    J = cube.stack()[:, :, 0]
    M = len(J)
    code = gv_code(M, d, math.ceil(d / 2), seed=seed, max_words=max_words)
    if code.shape[0] < M:
        # constant words differ in every coordinate
        code = np.repeat(np.arange(M)[:, None], d, axis=1)
    H = np.zeros((code.shape[0], p - d, d))
    for k in range(d):
        H[:, k * m:(k + 1) * m, k] = J[code[:, k]]
    target = max(d * s * (1 + math.log(m / min(s, m))) / 30.0, math.log(m))
    return PackingSet(tuple(H), _realized_min(H, EUCLIDEAN), EUCLIDEAN,
                      required_distance=math.sqrt(d / 8), row_sparsity=d * cube.meta["s0"],
                      column_sparsity=int(math.floor(s)), target_log_count=target,
                      meta={"kind": "column-block", "p": p, "d": d, "s": s, "block": m,
                            "hypercube_size": M, "code_size": int(code.shape[0])})


def grassmann_packing(s: int, k: int, delta: float, seed=0, budget: int = 1000) -> PackingSet:
    """Greedy packing of V_{s,k} with pairwise ``||sin Theta||_F >= sqrt(k) delta``.

    ``budget`` Haar samples are drawn; each is kept when it is far enough
    from every point kept so far. The Frobenius distance between the bases
    dominates the sin-theta distance, which is re-checked as well.
    """
    if not 1 <= k <= s - k:
        raise InvalidParameter(f"need 1 <= k <= s - k, got k={k}, s={s}")
    if not delta > 0:
        raise InvalidParameter(f"delta must be positive, got {delta}")
    rng = make_rng(seed)
    thresh = k * delta ** 2
    kept = np.zeros((0, s, k))
    for _ in range(budget):
        Q, R = np.linalg.qr(rng.standard_normal((s, k)))
        J = Q * np.sign(np.diag(R))
        if kept.shape[0]:
            G = np.einsum("iak,al->ikl", kept, J)
            sq = k - np.sum(G * G, axis=(1, 2))
            if np.any(sq < thresh):
                continue
        kept = np.concatenate([kept, J[None]], axis=0)
    realized = _realized_min(kept, SIN_THETA_F)
    if kept.shape[0] >= 2:
        fro = pairwise_sq_distances(kept, EUCLIDEAN)
        sin = pairwise_sq_distances(kept, SIN_THETA_F)
        off = ~np.eye(len(kept), dtype=bool)
        if np.any(fro[off] < sin[off] - 1e-9):
            raise CertificationError("Frobenius distance fell below sin-theta distance")
    return PackingSet(tuple(kept), realized, SIN_THETA_F,
                      required_distance=math.sqrt(k) * delta,
                      meta={"kind": "grassmann", "s": s, "k": k, "delta": delta,
                            "budget": budget})


def kl_spiked(A1, A2, b: float, n: int = 1) -> float:
    """KL divergence between n-fold products of ``N(0, b A_i A_i^T + I)``.

    Both covariances have determinant ``(1 + b)^d``, so the divergence is
    ``(n/2) tr(Sigma_2^{-1} Sigma_1 - I)``, which works out to
    ``n b^2 / (2 (1 + b)) ||sin Theta(A1, A2)||_F^2``.
    """
    A1, A2 = as_stiefel(A1), as_stiefel(A2)
    if A1.shape != A2.shape:
        raise DimensionMismatch(f"shapes differ: {A1.shape} vs {A2.shape}")
    if not b > 0:
        raise InvalidParameter(f"b must be positive, got {b}")
    if n < 1:
        raise InvalidParameter(f"n must be positive, got {n}")
    return 0.5 * n * b * b / (1.0 + b) * sin_theta_sq(projector(A1), projector(A2))


@dataclass(frozen=True)
class FanoInputs:
    """Separation ``alpha``, KL diameter ``beta`` and cardinality ``count`` of a packing."""

    alpha: float
    beta: float
    count: float

    def __post_init__(self):
        if self.count < 2:
            raise InvalidParameter(f"count must be at least 2, got {self.count}")
        if self.alpha < 0 or self.beta < 0:
            raise InvalidParameter("alpha and beta must be nonnegative")


def fano_bound(inputs: FanoInputs) -> float:
    """``max(0, alpha/2 * (1 - (beta + log 2) / log N))``."""
    val = inputs.alpha / 2 * (1 - (inputs.beta + math.log(2)) / math.log(inputs.count))
    return max(0.0, val)


def stiefel_fano_bound(delta_N: float, epsilon: float, n: int, k: int,
                       sigma_sq: float, count: float) -> float:
    """Fano bound for a packing pushed through the local Stiefel embedding.

    Separation ``delta_N eps sqrt(1 - eps^2)``, KL diameter ``4 n k eps^2 / sigma^2``.
    The diameter is an upper bound (by a factor of two) on the exact value
    from :func:`kl_spiked` with ``||J_1 - J_2||_F^2 <= 4k``, so the bound stays valid.
    """
    if not 0 <= epsilon <= 1:
        raise InvalidParameter(f"epsilon must lie in [0, 1], got {epsilon}")
    if not sigma_sq > 0:
        raise InvalidParameter(f"sigma_sq must be positive, got {sigma_sq}")
    if delta_N < 0:
        raise InvalidParameter(f"delta_N must be nonnegative, got {delta_N}")
    alpha = delta_N * epsilon * math.sqrt(1 - epsilon ** 2)
    beta = 4 * n * k * epsilon ** 2 / sigma_sq
    return fano_bound(FanoInputs(alpha, beta, count))
