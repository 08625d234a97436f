"""Branching-turnover particle system: simulation, stationary characteristic
functions, and exact moments of the limiting single-particle law."""

from .charfn import (
    CFGrid,
    DEFAULT_CAP,
    ResourceLimitError,
    distance_cf,
    distance_cf_limit,
    distance_pair_cf_three,
    distance_pair_pdf_three,
    distance_pdf,
    distances_joint_cf,
    distances_joint_cf_limit,
    laplace_pdf,
    particle_cf,
    particle_cf_limit,
    particle_cf_three,
)
from .empirical import (
    EmpiricalSummary,
    MomentAccumulator,
    accumulate_moments,
    batch_means_se,
    empirical_cf,
    kde,
    ks_laplace,
    laplace_cdf,
    summarize,
)
from .moments import (
    ExactCoeff,
    PhiTable,
    build_phi_table,
    derivative_bound,
    merge,
    moment,
    partitions,
    partitions_canonical,
    phi_base,
    prune,
    recursion_step,
)
from .offsets import OffsetDistribution, gaussian, two_point, uniform
from .simulator import (
    EnsembleState,
    SimConfig,
    Trajectory,
    apply_move,
    distance_row,
    draw_moves,
    reconstruct_first,
    renormalise,
    run,
    sample_pair,
    step,
    step_distance_row,
)

__version__ = "0.1.0"

__all__ = [
    "CFGrid",
    "DEFAULT_CAP",
    "EmpiricalSummary",
    "EnsembleState",
    "ExactCoeff",
    "MomentAccumulator",
    "OffsetDistribution",
    "PhiTable",
    "ResourceLimitError",
    "SimConfig",
    "Trajectory",
    "accumulate_moments",
    "apply_move",
    "batch_means_se",
    "build_phi_table",
    "derivative_bound",
    "distance_cf",
    "distance_cf_limit",
    "distance_pair_cf_three",
    "distance_pair_pdf_three",
    "distance_pdf",
    "distance_row",
    "distances_joint_cf",
    "distances_joint_cf_limit",
    "draw_moves",
    "empirical_cf",
    "gaussian",
    "kde",
    "ks_laplace",
    "laplace_cdf",
    "laplace_pdf",
    "merge",
    "moment",
    "particle_cf",
    "particle_cf_limit",
    "particle_cf_three",
    "partitions",
    "partitions_canonical",
    "phi_base",
    "prune",
    "reconstruct_first",
    "recursion_step",
    "renormalise",
    "run",
    "sample_pair",
    "step",
    "step_distance_row",
    "summarize",
    "two_point",
    "uniform",
    "__version__",
]
