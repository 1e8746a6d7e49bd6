"""Zeroth-order optimization with replayable perturbations.

Gradient estimators built from central finite differences along random
directions, optimizers that keep only scalar (or per-block) second-moment
state, synthetic objectives with known curvature, closed-form moment and
stationarity-bound checks, and a config-driven experiment harness.
"""

from .analysis import (
    MomentReport,
    TheoremConstants,
    bound_check_run,
    check_meazo_condition,
    check_smoothing_inequalities,
    classical_sgd_bound,
    collapse_study,
    mc_squared_moment,
    meazo_bound,
    moment_report,
    predicted_squared_moment,
    theorem_constants,
    vt_collapse_metric,
    vt_statistics,
    zosgd_bound,
)
from .errors import (
    ConfigError,
    DegenerateScaleError,
    InvalidArgumentError,
    NumericFailureError,
    PreconditionError,
    StalePrefixError,
    ZoptimError,
)
from .estimators import (
    EvalCounter,
    Partition,
    efficient_grouped_eval,
    grouped_zo_gradient,
    projected_gradient,
    zo_gradient,
)
from .harness import (
    COARSE_GRID,
    TRACE_HEADER,
    ExperimentConfig,
    SweepResult,
    Trace,
    chain_as_objective,
    coarse_fine_sweep,
    fine_candidates,
    load_config,
    make_objective,
    make_x0,
    resolve_partition,
    robust_log_width,
    robustness_curve,
    run,
    trace_summary,
    transfer_step_size,
    write_summary,
    write_trace_csv,
)
from .objectives import (
    BlockQuadratic,
    LayeredChain,
    NoisySample,
    Prefix,
    equal_energy_point,
    make_block_quadratic,
    make_chain,
    sample_noisy,
    smoothed_gradient,
    smoothed_value,
    smoothing_norm_moments,
)
from .optimizers import (
    AdamState,
    FzooState,
    GroupedMeazoState,
    MeazoState,
    fzoo_step,
    grouped_meazo_step,
    meazo_step,
    radazo_step,
    zo_adam_step,
    zo_sgd_step,
)
from .perturb import (
    DISTRIBUTIONS,
    GAUSSIAN,
    RADEMACHER,
    TERNARY,
    UNIFORM,
    PerturbationSpec,
    ReplayCoordinate,
    batch_directions,
    keyed_generator,
    replay_directions,
    sample_direction,
    second_moment_scale,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "BlockQuadratic",
    "COARSE_GRID",
    "ConfigError",
    "DISTRIBUTIONS",
    "DegenerateScaleError",
    "EvalCounter",
    "ExperimentConfig",
    "FzooState",
    "GAUSSIAN",
    "GroupedMeazoState",
    "InvalidArgumentError",
    "LayeredChain",
    "MeazoState",
    "MomentReport",
    "NoisySample",
    "NumericFailureError",
    "Partition",
    "PerturbationSpec",
    "PreconditionError",
    "Prefix",
    "RADEMACHER",
    "ReplayCoordinate",
    "StalePrefixError",
    "SweepResult",
    "TERNARY",
    "TRACE_HEADER",
    "TheoremConstants",
    "Trace",
    "UNIFORM",
    "ZoptimError",
    "batch_directions",
    "bound_check_run",
    "chain_as_objective",
    "check_meazo_condition",
    "check_smoothing_inequalities",
    "classical_sgd_bound",
    "coarse_fine_sweep",
    "collapse_study",
    "efficient_grouped_eval",
    "equal_energy_point",
    "fine_candidates",
    "fzoo_step",
    "grouped_meazo_step",
    "grouped_zo_gradient",
    "keyed_generator",
    "load_config",
    "make_block_quadratic",
    "make_chain",
    "make_objective",
    "make_x0",
    "mc_squared_moment",
    "meazo_bound",
    "meazo_step",
    "moment_report",
    "predicted_squared_moment",
    "projected_gradient",
    "radazo_step",
    "replay_directions",
    "resolve_partition",
    "robust_log_width",
    "robustness_curve",
    "run",
    "sample_direction",
    "sample_noisy",
    "second_moment_scale",
    "smoothed_gradient",
    "smoothed_value",
    "smoothing_norm_moments",
    "theorem_constants",
    "trace_summary",
    "transfer_step_size",
    "vt_collapse_metric",
    "vt_statistics",
    "write_summary",
    "write_trace_csv",
    "zo_adam_step",
    "zo_gradient",
    "zo_sgd_step",
    "zosgd_bound",
]
