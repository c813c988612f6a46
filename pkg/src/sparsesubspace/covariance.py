"""Population covariance models, Gaussian sampling and the sample covariance."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InsufficientData, InvalidParameter
from .geometry import StiefelMatrix, as_stiefel, eigengap

RNG_ALGORITHM = "numpy.random.Philox"


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator used for every random draw in the package.

    ``seed`` may be an int, a sequence of ints (hashed by ``SeedSequence``)
    or a ``SeedSequence``.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def effective_noise_variance(spectrum, d: int) -> float:
    """``lambda_1 lambda_{d+1} / (lambda_d - lambda_{d+1})^2``."""
    lam = np.asarray(spectrum, dtype=float)
    gap = eigengap(lam, d)
    return float(lam[0] * lam[d] / gap ** 2)


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    """Covariance ``sum_j spectrum[j] basis[:, j] basis[:, j]^T`` with target dimension d."""

    spectrum: np.ndarray
    basis: np.ndarray
    d: int

    def __post_init__(self):
        lam = np.array(self.spectrum, dtype=float)
        Q = np.array(self.basis, dtype=float)
        p = lam.size
        if Q.shape != (p, p):
            raise DimensionMismatch(f"basis shape {Q.shape} does not match spectrum length {p}")
        if np.any(lam < 0) or np.any(np.diff(lam) > 0):
            raise InvalidParameter("spectrum must be nonnegative and nonincreasing")
        eigengap(lam, self.d)
        if np.max(np.abs(Q.T @ Q - np.eye(p))) > 1e-10:
            raise InvalidParameter("basis is not orthogonal")
        lam.setflags(write=False)
        Q.setflags(write=False)
        object.__setattr__(self, "spectrum", lam)
        object.__setattr__(self, "basis", Q)

    @property
    def p(self) -> int:
        return self.spectrum.size

    @property
    def principal_basis(self) -> StiefelMatrix:
        return StiefelMatrix(self.basis[:, : self.d])

    @property
    def sigma_sq(self) -> float:
        return effective_noise_variance(self.spectrum, self.d)

    @property
    def matrix(self) -> np.ndarray:
        S = (self.basis * self.spectrum) @ self.basis.T
        return (S + S.T) / 2

    def sqrt(self) -> np.ndarray:
        """Symmetric square root, built from the stored spectrum and basis."""
        R = (self.basis * np.sqrt(self.spectrum)) @ self.basis.T
        return (R + R.T) / 2


def spiked_covariance(A, b: float) -> CovarianceModel:
    """Spiked model ``b A A^T + I_p`` with principal subspace ``colspan(A)``."""
    if not b > 0:
        raise InvalidParameter(f"spike strength b must be positive, got {b}")
    A = np.asarray(as_stiefel(A), dtype=float)
    p, d = A.shape
    Q, _ = np.linalg.qr(A, mode="complete")
    basis = np.hstack([A, Q[:, d:]])
    spectrum = np.concatenate([np.full(d, 1.0 + b), np.ones(p - d)])
    return CovarianceModel(spectrum, basis, d)


@dataclass(frozen=True, eq=False)
class DataMatrix:
    data: np.ndarray
    seed: object = None
    rng_algorithm: str = RNG_ALGORITHM

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


def sample_gaussian(model: CovarianceModel, n: int, seed) -> DataMatrix:
    """Draw n i.i.d. rows from ``N(0, Sigma)`` as ``Z Sigma^{1/2}``."""
    if n < 1:
        raise InvalidParameter(f"n must be positive, got {n}")
    rng = make_rng(seed)
    Z = rng.standard_normal((n, model.p))
    X = Z @ model.sqrt()
    X.setflags(write=False)
    return DataMatrix(X, seed=seed)


def sample_covariance(X) -> np.ndarray:
    """``(1/n) sum_i (x_i - xbar)(x_i - xbar)^T`` (divisor n, not n - 1)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch(f"expected an n x p array, got shape {X.shape}")
    n = X.shape[0]
    if n < 2:
        raise InsufficientData(f"need at least 2 observations, got {n}")
    Xc = X - X.mean(axis=0)
    S = Xc.T @ Xc / n
    return (S + S.T) / 2
