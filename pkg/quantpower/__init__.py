"""
Quantized power codebook design for wideband spectrum sharing with limited feedback
"""

from .exceptions import (
    QuantPowerError,
    ConfigurationError,
    UnsupportedOperationError,
    UndefinedWaterlevelError,
    AsymptoteExceededError,
    EmptyRegionError,
    InfeasibleConstraintError,
    RootNotFoundError,
    CodebookExhaustedError,
    ConvergenceError,
)
from .models import (
    SolverSettings,
    ConstraintSet,
    DualVariables,
    FullCsiSolution,
    PowerCodebook,
    Partition,
    GlaReport,
    CodebookPropertyReport,
    FeedbackChannel,
    QuantizedSolution,
    CapacityEstimate,
    ConstraintEstimate,
    QuadratureSpec,
)
from .helpers import db_to_linear, linear_to_db
from .fading import (
    FadingModel,
    ChannelModels,
    TrainingSet,
    sample_training_set,
    pdf_eval,
)
from .full_csi import (
    power_point,
    solve_interference_multiplier,
    solve_power_multiplier,
    allocate_full_csi,
    aip_only_power_threshold,
)
from .lloyd import (
    nnc_assign,
    centroid_power,
    run_gla,
    run_gla_restarts,
    lagrangian_value,
    boundary_g1,
    relabel_by_boundaries,
    verify_codebook_properties,
)
from .noisy_feedback import (
    transition_matrix,
    gla2_assign,
    gla2_centroid,
    run_gla2,
    exhaustive_index_search,
)
from .aqpa import (
    region_residual,
    aqpa_seed_level,
    aqpa_recursive_step,
    aqpa_codebook,
)
from .dual_outer import (
    GlaDesigner,
    Gla2Designer,
    AqpaDesigner,
    solve_narrowband,
    algorithm1_wideband,
    solve_quantized,
)
from .evaluation import (
    ConstantPowerRule,
    FullCsiRule,
    QuantizedRule,
    estimate_capacity,
    estimate_constraints,
    capacity_loss_pct,
)
from .experiment import (
    ExperimentConfig,
    load_config,
    parse_config,
    run_sweep,
    run_boundaries,
)
from .results_handler import ResultsHandler, load_codebook

__all__ = [
    "QuantPowerError",
    "ConfigurationError",
    "UnsupportedOperationError",
    "UndefinedWaterlevelError",
    "AsymptoteExceededError",
    "EmptyRegionError",
    "InfeasibleConstraintError",
    "RootNotFoundError",
    "CodebookExhaustedError",
    "ConvergenceError",
    "SolverSettings",
    "ConstraintSet",
    "DualVariables",
    "FullCsiSolution",
    "PowerCodebook",
    "Partition",
    "GlaReport",
    "CodebookPropertyReport",
    "FeedbackChannel",
    "QuantizedSolution",
    "CapacityEstimate",
    "ConstraintEstimate",
    "QuadratureSpec",
    "db_to_linear",
    "linear_to_db",
    "FadingModel",
    "ChannelModels",
    "TrainingSet",
    "sample_training_set",
    "pdf_eval",
    "power_point",
    "solve_interference_multiplier",
    "solve_power_multiplier",
    "allocate_full_csi",
    "aip_only_power_threshold",
    "nnc_assign",
    "centroid_power",
    "run_gla",
    "run_gla_restarts",
    "lagrangian_value",
    "boundary_g1",
    "relabel_by_boundaries",
    "verify_codebook_properties",
    "transition_matrix",
    "gla2_assign",
    "gla2_centroid",
    "run_gla2",
    "exhaustive_index_search",
    "region_residual",
    "aqpa_seed_level",
    "aqpa_recursive_step",
    "aqpa_codebook",
    "GlaDesigner",
    "Gla2Designer",
    "AqpaDesigner",
    "solve_narrowband",
    "algorithm1_wideband",
    "solve_quantized",
    "ConstantPowerRule",
    "FullCsiRule",
    "QuantizedRule",
    "estimate_capacity",
    "estimate_constraints",
    "capacity_loss_pct",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "run_sweep",
    "run_boundaries",
    "ResultsHandler",
    "load_codebook",
]
