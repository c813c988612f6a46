"""
Monte Carlo scaling check
=========================

A small simulation: estimate a sparse subspace at several sample sizes and
fit log(mean error) against log(rate). A slope near one means the error
decays like the theoretical rate. The grid here is a design choice for a
quick run (about ten seconds), not a protocol taken from elsewhere.
"""

from sparsesubspace import ExperimentConfig, aggregate, rate_fit, run_experiment

config = ExperimentConfig.from_dict({
    "grid": {"p": 32, "n": [250, 500, 1000, 2000], "d": 1, "R_q": 4, "b": 1.0},
    "replicates": 40,
    "master_seed": 1,
    "estimator": "iterative",
    "solver_options": {"restarts": 4},
})

summary = aggregate(run_experiment(config))
for row in summary:
    print(f"n = {row['n']:5d}: mean error {row['mean']:.4f} (sd {row['sd']:.4f})")

fit = rate_fit(summary, "row")
print(f"slope {fit.slope:.3f}, r^2 {fit.r2:.3f}")
