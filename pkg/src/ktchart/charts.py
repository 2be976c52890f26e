"""Sliding-window control charts over a data description.

Phase I slices an in-control history into overlapping windows, trains a
description per window, and derives two charts from the window models:
a center chart (each window's center scored against a description of
all centers) and a spread chart (each window's squared threshold
against three-sigma limits).  Phase II replays the same window training
on a live stream and plots each completed window against the frozen
Phase I limits.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .sampling import SamplingConfig, SamplingTrace, derive_seed, train_sampled
from .svdd import (
    KernelSpec,
    SvddModel,
    median_heuristic_bandwidth,
    score,
    train_full,
    validate_observations,
)

__all__ = [
    "WindowSpec",
    "WindowSummary",
    "ChartLimits",
    "ChartPoint",
    "PhaseIModel",
    "window_bounds",
    "window_count",
    "summarize_windows",
    "dispersion_stats",
    "train_center_model",
    "compute_limits",
    "a_status",
    "r2_status",
    "phase1",
    "prune_and_recompute",
    "Phase2Monitor",
]

A_STATUSES = ("in_control", "out_of_control")
R2_STATUSES = ("in_control", "warning_high", "warning_low", "out_high", "out_low")


@dataclass(frozen=True)
class WindowSpec:
    """Window length n and overlap m; consecutive windows advance by n - m."""

    n: int
    m: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"window length must be >= 2, got {self.n}")
        if not (0 <= self.m <= self.n - 1):
            raise ValueError(
                f"overlap must satisfy 0 <= m <= n-1, got m={self.m} for n={self.n}"
            )

    @property
    def stride(self) -> int:
        return self.n - self.m


def window_bounds(i: int, spec: WindowSpec) -> tuple[int, int]:
    """1-based inclusive (start, end) of window i >= 1."""
    if i < 1:
        raise ValueError(f"window index must be >= 1, got {i}")
    start = (i - 1) * spec.stride + 1
    return start, start + spec.n - 1


def window_count(p: int, spec: WindowSpec) -> int:
    """Number of complete windows in p observations."""
    if p < spec.n:
        raise ValueError(f"need at least n={spec.n} observations, got {p}")
    return (p - spec.n) // spec.stride + 1


@dataclass(frozen=True)
class WindowSummary:
    """One window's trained description plus its position in the stream."""

    index: int
    start: int
    end: int
    model: SvddModel

    @property
    def center(self) -> np.ndarray:
        return self.model.center

    @property
    def r_squared(self) -> float:
        return self.model.r_squared


@dataclass(frozen=True)
class ChartLimits:
    """Control limits for one chart; warning limits are optional."""

    ucl: float
    center_line: float
    lcl: float
    uwl: float | None = None
    lwl: float | None = None

    def __post_init__(self):
        if not (self.lcl <= self.center_line <= self.ucl):
            raise ValueError(
                f"limits must be ordered lcl <= center <= ucl, got "
                f"({self.lcl}, {self.center_line}, {self.ucl})"
            )
        if (self.uwl is None) != (self.lwl is None):
            raise ValueError("warning limits must be set together")
        if self.uwl is not None and not (self.lcl <= self.lwl <= self.uwl <= self.ucl):
            raise ValueError("warning limits must lie within the control limits")


@dataclass(frozen=True)
class ChartPoint:
    """One plotted window: spread statistic, center distance, and statuses."""

    index: int
    start: int
    end: int
    r_squared: float
    center_dist: float
    a_status: str
    r2_status: str

    def __post_init__(self):
        if self.a_status not in A_STATUSES:
            raise ValueError(f"unknown a_status {self.a_status!r}")
        if self.r2_status not in R2_STATUSES:
            raise ValueError(f"unknown r2_status {self.r2_status!r}")


def a_status(center_dist: float, limits: ChartLimits) -> str:
    """Center chart is one-sided: out of control iff the distance exceeds UCL."""
    return "out_of_control" if center_dist > limits.ucl else "in_control"


def r2_status(value: float, limits: ChartLimits) -> str:
    """Spread chart status: control limits first, then optional warning zones."""
    if value > limits.ucl:
        return "out_high"
    if value < limits.lcl:
        return "out_low"
    if limits.uwl is not None and value > limits.uwl:
        return "warning_high"
    if limits.lwl is not None and value < limits.lwl:
        return "warning_low"
    return "in_control"


def summarize_windows(
    data,
    spec: WindowSpec,
    kernel: KernelSpec,
    f: float,
    sampling: SamplingConfig | None = None,
    window_seeds=None,
    collect_traces: bool = False,
) -> list[WindowSummary] | tuple[list[WindowSummary], list[SamplingTrace]]:
    """Train one sampled description per complete window.

    Each window gets its own child seed derived from the config's base
    seed and the window index, so windows are reproducible independently;
    `window_seeds` overrides the derived seeds (one per window).
    """
    X = validate_observations(data)
    sampling = sampling or SamplingConfig()
    k = window_count(X.shape[0], spec)
    if window_seeds is not None:
        window_seeds = list(window_seeds)
        if len(window_seeds) != k:
            raise ValueError(f"expected {k} window seeds, got {len(window_seeds)}")
    summaries = []
    traces = []
    for i in range(1, k + 1):
        start, end = window_bounds(i, spec)
        seed = window_seeds[i - 1] if window_seeds is not None else derive_seed(
            sampling.rng_seed, i
        )
        model, trace = train_sampled(
            X[start - 1 : end], kernel, f, replace(sampling, rng_seed=seed)
        )
        summaries.append(WindowSummary(index=i, start=start, end=end, model=model))
        traces.append(trace)
    return (summaries, traces) if collect_traces else summaries


def dispersion_stats(r2_values) -> tuple[float, float]:
    """Mean and sample standard deviation (k-1 divisor) of window thresholds."""
    vals = np.asarray(list(r2_values), dtype=float)
    if vals.ndim != 1 or len(vals) < 2:
        raise ValueError("need at least 2 window thresholds for a dispersion estimate")
    if not np.isfinite(vals).all():
        raise ValueError("window thresholds must be finite")
    return float(np.mean(vals)), float(np.std(vals, ddof=1))


def train_center_model(
    summaries,
    kernel: KernelSpec | None = None,
    f: float = 0.001,
    tol: float = 1e-6,
) -> SvddModel:
    """Full (non-sampled) description of the window centers.

    With `kernel=None` a Gaussian kernel is used whose bandwidth is the
    median pairwise distance among the centers; centers live on a much
    tighter scale than the raw observations, so the per-window bandwidth
    is a poor default here.
    """
    summaries = list(summaries)
    if len(summaries) < 2:
        raise ValueError("need at least 2 window centers")
    A = np.vstack([s.center for s in summaries])
    if kernel is None:
        kernel = KernelSpec.gaussian(median_heuristic_bandwidth(A))
    return train_full(A, kernel, f, tol=tol)


def compute_limits(
    r_a_squared: float,
    r2_mean: float,
    r2_sigma: float,
    warnings: bool = True,
) -> tuple[ChartLimits, ChartLimits]:
    """Control limits for the center chart and the spread chart.

    Center chart: UCL is the center-description threshold, the center
    line sits at half of it, LCL is zero.  Spread chart: three-sigma
    limits around the mean window threshold, two-sigma warning limits
    when requested; lower limits are clamped at zero since the plotted
    statistic is a squared radius.
    """
    if r2_sigma < 0:
        raise ValueError("sigma must be nonnegative")
    a_chart = ChartLimits(
        ucl=r_a_squared, center_line=r_a_squared / 2.0, lcl=0.0
    )
    r2_chart = ChartLimits(
        ucl=r2_mean + 3.0 * r2_sigma,
        center_line=r2_mean,
        lcl=max(0.0, r2_mean - 3.0 * r2_sigma),
        uwl=r2_mean + 2.0 * r2_sigma if warnings else None,
        lwl=max(0.0, r2_mean - 2.0 * r2_sigma) if warnings else None,
    )
    return a_chart, r2_chart


@dataclass(frozen=True)
class PhaseIModel:
    """Frozen outcome of Phase I: center description, stats, and both limits.

    Window summaries are retained for audit and for re-deriving the
    model after windows with assignable causes are dropped.
    """

    center_model: SvddModel
    r2_mean: float
    r2_sigma: float
    a_chart: ChartLimits
    r2_chart: ChartLimits
    window_spec: WindowSpec
    kernel_window: KernelSpec
    kernel_center: KernelSpec
    center_bandwidth_auto: bool
    f: float
    sampling: SamplingConfig
    warnings_enabled: bool
    summaries: tuple[WindowSummary, ...]

    @property
    def base_seed(self) -> int:
        return self.sampling.rng_seed

    @property
    def dim(self) -> int:
        return self.center_model.dim


def _chart_point(summary_like, a_limits: ChartLimits, r2_limits: ChartLimits,
                 center_model: SvddModel) -> ChartPoint:
    dist2 = float(score(center_model, summary_like.center))
    return ChartPoint(
        index=summary_like.index,
        start=summary_like.start,
        end=summary_like.end,
        r_squared=summary_like.r_squared,
        center_dist=dist2,
        a_status=a_status(dist2, a_limits),
        r2_status=r2_status(summary_like.r_squared, r2_limits),
    )


def _build_phase1(
    summaries: tuple[WindowSummary, ...],
    spec: WindowSpec,
    kernel_window: KernelSpec,
    kernel_center: KernelSpec | None,
    center_auto: bool,
    f: float,
    sampling: SamplingConfig,
    warnings: bool,
) -> tuple[PhaseIModel, list[ChartPoint]]:
    r2_mean, r2_sigma = dispersion_stats([s.r_squared for s in summaries])
    center_model = train_center_model(
        summaries, kernel=None if center_auto else kernel_center, f=f
    )
    a_chart, r2_chart = compute_limits(
        center_model.r_squared, r2_mean, r2_sigma, warnings=warnings
    )
    model = PhaseIModel(
        center_model=center_model,
        r2_mean=r2_mean,
        r2_sigma=r2_sigma,
        a_chart=a_chart,
        r2_chart=r2_chart,
        window_spec=spec,
        kernel_window=kernel_window,
        kernel_center=center_model.kernel,
        center_bandwidth_auto=center_auto,
        f=f,
        sampling=sampling,
        warnings_enabled=warnings,
        summaries=summaries,
    )
    points = [_chart_point(s, a_chart, r2_chart, center_model) for s in summaries]
    return model, points


def phase1(
    data,
    spec: WindowSpec,
    kernel_window: KernelSpec,
    kernel_center: KernelSpec | None = None,
    f: float = 0.001,
    sampling: SamplingConfig | None = None,
    warnings: bool = True,
) -> tuple[PhaseIModel, list[ChartPoint]]:
    """Estimate both charts' limits from an in-control history.

    Trains a sampled description per window, summarizes the window
    thresholds, trains the center description over all window centers
    (`kernel_center=None` picks a Gaussian bandwidth from the centers
    themselves), computes the limits, and scores every Phase I window
    against the fresh limits.
    """
    sampling = sampling or SamplingConfig()
    summaries = tuple(summarize_windows(data, spec, kernel_window, f, sampling))
    return _build_phase1(
        summaries, spec, kernel_window, kernel_center,
        center_auto=kernel_center is None, f=f, sampling=sampling, warnings=warnings,
    )


def prune_and_recompute(
    model: PhaseIModel, excluded_window_indices
) -> tuple[PhaseIModel, list[ChartPoint]]:
    """Drop windows with confirmed assignable causes and re-derive the charts.

    Only the dispersion stats, center description, limits and chart
    points are recomputed; the per-window descriptions are kept as
    trained.  At least two windows must survive.
    """
    if not model.summaries:
        raise ValueError("model carries no window summaries (was it loaded from disk?)")
    excluded = set(int(i) for i in excluded_window_indices)
    known = {s.index for s in model.summaries}
    unknown = excluded - known
    if unknown:
        raise ValueError(f"unknown window indices: {sorted(unknown)}")
    kept = tuple(s for s in model.summaries if s.index not in excluded)
    if len(kept) < 2:
        raise ValueError("at least 2 windows must survive exclusion")
    return _build_phase1(
        kept,
        model.window_spec,
        model.kernel_window,
        model.kernel_center,
        center_auto=model.center_bandwidth_auto,
        f=model.f,
        sampling=model.sampling,
        warnings=model.warnings_enabled,
    )


class Phase2Monitor:
    """Single-writer streaming monitor against a frozen Phase I model.

    Observations are pushed one at a time; once a full window has
    accumulated, the window is trained with the sampled method, scored
    against the frozen center description and limits, and the last m
    observations are retained as the start of the next window.  Peak
    buffered observations never exceed the window length.
    """

    def __init__(self, model: PhaseIModel, seed: int | None = None):
        self._model = model
        self._seed = model.base_seed if seed is None else int(seed)
        self._rows: list[np.ndarray] = []
        self._next_index = 1

    @property
    def window_index(self) -> int:
        """Index of the window currently filling."""
        return self._next_index

    @property
    def buffered(self) -> int:
        return len(self._rows)

    def push(self, observation) -> ChartPoint | None:
        """Add one observation; returns a ChartPoint when a window completes."""
        row = np.asarray(observation, dtype=float).ravel()
        if row.shape[0] != self._model.dim:
            raise ValueError(
                f"dimension mismatch: expected {self._model.dim}, got {row.shape[0]}"
            )
        if not np.isfinite(row).all():
            raise ValueError("observation contains NaN or Inf")
        self._rows.append(row)
        spec = self._model.window_spec
        if len(self._rows) < spec.n:
            return None

        q = self._next_index
        window = np.vstack(self._rows)
        cfg = replace(self._model.sampling, rng_seed=derive_seed(self._seed, q))
        wmodel, _ = train_sampled(window, self._model.kernel_window, self._model.f, cfg)
        start, end = window_bounds(q, spec)
        point = _chart_point(
            WindowSummary(index=q, start=start, end=end, model=wmodel),
            self._model.a_chart,
            self._model.r2_chart,
            self._model.center_model,
        )
        self._rows = self._rows[spec.n - spec.m :]
        self._next_index = q + 1
        return point

    def process(self, data) -> list[ChartPoint]:
        """Push every row of a matrix, collecting the completed windows."""
        X = validate_observations(data, dim=self._model.dim)
        points = []
        for row in X:
            point = self.push(row)
            if point is not None:
                points.append(point)
        return points
