"""Recovery of hierarchically sparse signals from hierarchical measurements."""

from .model import BlockVector, HiSupport, SparsityPattern, is_hi_sparse, support_of
from .projection import block_threshold, project_hi_sparse
from .operators import (
    HierarchicalOperator,
    make_gaussian_block,
    make_gaussian_mixing,
    make_subsampled_dft,
    restricted_least_squares,
)
from .solver import SolverConfig, SolverDivergence, SolverResult, detect_support, hihtp
from .analysis import (
    EnumerationCapExceeded,
    RipEstimate,
    exact_hirip,
    exact_rip,
    monte_carlo_hirip,
    monte_carlo_rip,
    pairwise_incoherence,
)
from .simulation import (
    AccessConfig,
    SweepConfig,
    TrialRecord,
    analytic_baseline,
    baseline_detect,
    build_signal,
    draw_user_choices,
    grouped_detect,
    run_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "BlockVector", "HiSupport", "SparsityPattern", "is_hi_sparse", "support_of",
    "block_threshold", "project_hi_sparse",
    "HierarchicalOperator", "make_gaussian_block", "make_gaussian_mixing",
    "make_subsampled_dft", "restricted_least_squares",
    "SolverConfig", "SolverDivergence", "SolverResult", "detect_support", "hihtp",
    "EnumerationCapExceeded", "RipEstimate", "exact_hirip", "exact_rip",
    "monte_carlo_hirip", "monte_carlo_rip", "pairwise_incoherence",
    "AccessConfig", "SweepConfig", "TrialRecord", "analytic_baseline",
    "baseline_detect", "build_signal", "draw_user_choices", "grouped_detect",
    "run_sweep",
]
