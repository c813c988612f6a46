"""Sparse principal subspace estimation: estimators, geometry and minimax tools."""

from .constructions import (
    FanoInputs,
    PackingSet,
    column_sparse_packing,
    fano_bound,
    grassmann_packing,
    gv_code,
    hypercube_packing,
    kl_spiked,
    stiefel_embedding,
    stiefel_fano_bound,
)
from .covariance import (
    CovarianceModel,
    DataMatrix,
    effective_noise_variance,
    sample_covariance,
    sample_gaussian,
    spiked_covariance,
)
from .errors import (
    DegenerateGap,
    DimensionMismatch,
    EnumerationTooLarge,
    InsufficientData,
    InsufficientGrid,
    InvalidParameter,
    RankDeficiency,
    SubspaceError,
)
from .estimators import (
    EstimateResult,
    Mode,
    SolverOptions,
    SparsityConstraint,
    estimate_column_sparse_exact,
    estimate_exact,
    estimate_iterative,
    estimation_error,
    objective,
)
from .geometry import (
    StiefelMatrix,
    SubspaceProjector,
    canonical_angles,
    col_q_norm,
    cross_decomposition,
    curvature_gap_bound,
    orthonormalize,
    procrustes_distance,
    projector,
    random_stiefel,
    row_q_norm,
    sin_theta_sq,
    variational_sin_theta_bound,
)
from .harness import ExperimentConfig, aggregate, make_truth, rate_fit, run_experiment
from .rates import ProblemParams, check_conditions

__version__ = "0.1.0"
