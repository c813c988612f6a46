"""
Packing sets and Fano lower bounds
==================================

Lower bounds come from many well-separated sparse subspaces whose data
distributions are hard to tell apart. We build a hypercube packing, push it
into the Stiefel manifold with the local embedding, and evaluate the Fano
bound for a range of localization levels.
"""

import math

import numpy as np

from sparsesubspace import (
    hypercube_packing,
    kl_spiked,
    sin_theta_sq,
    projector,
    stiefel_embedding,
    stiefel_fano_bound,
)

m, s = 64, 4
P = hypercube_packing(m, s, seed=0)
print(f"{len(P)} points, min distance {P.min_distance:.3f} (required {P.required_distance})")
print(f"log N = {P.log_count:.2f}, target {P.target_log_count:.2f}, met: {P.target_met}")

# Embed two packing points into V_{p,d} with d = 2, k = 1
p, d, k, eps = m + 2, 2, 1, 0.2
A1 = stiefel_embedding(P.points[0], eps, p, d, k)
A2 = stiefel_embedding(P.points[1], eps, p, d, k)
print("sin-theta^2 between embedded points:", sin_theta_sq(projector(A1), projector(A2)))
print("KL between spiked models (n = 100):", kl_spiked(A1, A2, b=1.0, n=100))

# Fano bound as a function of epsilon, sigma^2 = 2
n, sigma_sq = 500, 2.0
for eps in np.linspace(0.01, 0.09, 9):
    val = stiefel_fano_bound(P.min_distance, eps, n, k, sigma_sq, len(P))
    print(f"eps = {eps:.3f}: lower bound {val:.5f}")

# Small eps keeps the models close (small KL) but also the points close;
# the bound peaks in between and is clamped at zero once the KL term wins.
