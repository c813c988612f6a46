"""
Distances between subspaces
===========================

Two bases span the same subspace when they differ by a rotation, so we
compare subspaces through their projectors. This walk-through computes
canonical angles, the sin-theta distance and the Procrustes distance, and
shows how they relate.
"""

import numpy as np

from sparsesubspace import (
    canonical_angles,
    procrustes_distance,
    projector,
    random_stiefel,
    sin_theta_sq,
)

rng = np.random.default_rng(0)

# Two random 3-dimensional subspaces of R^10
V1 = random_stiefel(10, 3, rng)
V2 = random_stiefel(10, 3, rng)
E, F = projector(V1), projector(V2)

angles = canonical_angles(E, F)
print("canonical angles (radians):", np.round(angles, 4))

# The squared sin-theta distance is the sum of squared sines of the angles,
# and can also be read off the projectors directly.
s = sin_theta_sq(E, F)
print("sum of sin^2           :", np.sum(np.sin(angles) ** 2))
print("sin_theta_sq           :", s)
print("half ||E - F||_F^2      :", 0.5 * np.linalg.norm(E.data - F.data) ** 2)

# Rotating a basis does not move the subspace
Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
print("distance to rotated V1 :", sin_theta_sq(E, projector(V1.data @ Q)))

# The Procrustes distance aligns the bases first; it brackets sin-theta
d2 = procrustes_distance(V1, V2) ** 2
print(f"{0.5 * d2:.4f} <= {s:.4f} <= {d2:.4f}")
