"""Sliding-window control charts built on support vector data description.

Train a description of in-control behavior, then monitor a multivariate
stream window by window, tracking the process center and spread against
frozen limits.
"""

from .charts import (
    ChartLimits,
    ChartPoint,
    Phase2Monitor,
    PhaseIModel,
    WindowSpec,
    WindowSummary,
    a_status,
    compute_limits,
    dispersion_stats,
    phase1,
    prune_and_recompute,
    r2_status,
    summarize_windows,
    train_center_model,
    window_bounds,
    window_count,
)
from .sampling import SamplingConfig, SamplingTrace, derive_seed, draw_sample, train_sampled
from .simulate import FaultSpec, SegmentSpec, compose_stream, gen_segment
from .stream_io import (
    IngestPolicy,
    IngestSummary,
    load_model,
    load_phase1,
    read_boundaries,
    read_chart,
    read_observations,
    render_charts,
    save_model,
    save_phase1,
    write_boundaries,
    write_chart,
    write_observations,
)
from .svdd import (
    ConvergenceError,
    KernelSpec,
    SvddModel,
    SvddParams,
    classify,
    compute_threshold,
    dual_objective,
    kernel_eval,
    kernel_matrix,
    median_heuristic_bandwidth,
    score,
    solve_dual,
    train_full,
)

__version__ = "0.1.0"

__all__ = [
    "ChartLimits",
    "ChartPoint",
    "ConvergenceError",
    "FaultSpec",
    "IngestPolicy",
    "IngestSummary",
    "KernelSpec",
    "Phase2Monitor",
    "PhaseIModel",
    "SamplingConfig",
    "SamplingTrace",
    "SegmentSpec",
    "SvddModel",
    "SvddParams",
    "WindowSpec",
    "WindowSummary",
    "a_status",
    "classify",
    "compose_stream",
    "compute_limits",
    "compute_threshold",
    "derive_seed",
    "dispersion_stats",
    "draw_sample",
    "dual_objective",
    "gen_segment",
    "kernel_eval",
    "kernel_matrix",
    "load_model",
    "load_phase1",
    "median_heuristic_bandwidth",
    "phase1",
    "prune_and_recompute",
    "r2_status",
    "read_boundaries",
    "read_chart",
    "read_observations",
    "render_charts",
    "save_model",
    "save_phase1",
    "score",
    "solve_dual",
    "summarize_windows",
    "train_center_model",
    "train_full",
    "train_sampled",
    "window_bounds",
    "window_count",
    "write_boundaries",
    "write_chart",
    "write_observations",
]
