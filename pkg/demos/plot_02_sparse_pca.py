"""
Sparse principal subspace estimation
====================================

We draw data from a spiked covariance whose leading subspace lives on a few
coordinates, then compare ordinary PCA with the row-sparse estimators: the
exhaustive support search and the truncated orthogonal iteration.
"""

import numpy as np

from sparsesubspace import (
    Mode,
    SolverOptions,
    SparsityConstraint,
    estimate_exact,
    estimate_iterative,
    estimation_error,
    make_truth,
    sample_covariance,
    sample_gaussian,
    spiked_covariance,
)

p, d, R0, n = 12, 2, 4, 150

# Truth: a 2-dimensional subspace supported on 4 of the 12 coordinates
V = make_truth(p, d, R0, seed=3)
print("truth support:", np.flatnonzero(np.linalg.norm(V.data, axis=1) > 0))

model = spiked_covariance(V, b=1.0)
print("effective noise variance:", model.sigma_sq)

X = sample_gaussian(model, n, seed=4)
S = sample_covariance(X)

# Ordinary PCA ignores sparsity
w, U = np.linalg.eigh(S)
print("PCA error      :", round(estimation_error(U[:, -d:], V), 4))

constraint = SparsityConstraint(Mode.ROW, q=0.0, radius=R0)

# The exhaustive search certifies the global optimum (small p only)
exact = estimate_exact(S, d, constraint)
print("exact error    :", round(estimation_error(exact.basis, V), 4), "support", exact.support)

# The iterative solver scales to larger problems; 8 restarts
it = estimate_iterative(S, d, constraint, SolverOptions(restarts=8, seed=0))
print("iterative error:", round(estimation_error(it.basis, V), 4))
print("objective gap to the certified optimum:", exact.objective - it.objective)

# A soft (q = 1) constraint shrinks rows instead of selecting them
soft = estimate_iterative(S, d, SparsityConstraint(Mode.ROW, 1.0, 3.0), SolverOptions(restarts=4))
print("q=1 error      :", round(estimation_error(soft.basis, V), 4))
