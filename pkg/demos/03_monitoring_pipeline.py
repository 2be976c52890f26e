"""The full monitoring pipeline: limits from history, live window charts.

Phase I turns an in-control history into frozen control limits: each
sliding window gets its own description, the window thresholds set the
spread-chart limits, and a description of the window centers sets the
center-chart limit.  Phase II replays the same window training on a live
stream and flags windows whose center drifts or whose spread changes.
"""

import numpy as np

from ktchart import (
    FaultSpec,
    KernelSpec,
    Phase2Monitor,
    SamplingConfig,
    SegmentSpec,
    WindowSpec,
    compose_stream,
    gen_segment,
    median_heuristic_bandwidth,
    phase1,
    render_charts,
    summarize_windows,
    write_boundaries,
    write_chart,
)

MEAN, SCALE, DIM = (10.0, 5.0, 8.0, 12.0), (1.0, 1.0, 1.0, 1.0), 4
spec = WindowSpec(n=200, m=60)


def segment(label, length, fault=None):
    return SegmentSpec(label=label, length=length, mean=MEAN, scale=SCALE, fault=fault)


# Phase I: 150 windows of in-control history.  The center description is
# given a generous bandwidth (a multiple of the centers' own scatter) so
# its boundary stays smooth; a wiggly center boundary over-alarms.
history = gen_segment(segment("history", spec.n + 149 * spec.stride), seed=100)
bandwidth = median_heuristic_bandwidth(history, max_points=1000, seed=0)
cfg = SamplingConfig(sample_size=DIM + 1, rng_seed=2024, patience=10)
window_models = summarize_windows(history, spec, KernelSpec.gaussian(bandwidth),
                                  0.001, cfg)
centers = np.vstack([w.center for w in window_models])
center_kernel = KernelSpec.gaussian(4.0 * median_heuristic_bandwidth(centers))
model, phase1_points = phase1(
    history, spec, KernelSpec.gaussian(bandwidth),
    kernel_center=center_kernel, f=0.001, sampling=cfg,
)
print(f"phase I: {len(phase1_points)} windows, "
      f"center-chart UCL = {model.a_chart.ucl:.4f}, "
      f"spread-chart UCL = {model.r2_chart.ucl:.4f}")

# Phase II: in-control blocks interleaved with a mean step and a variance
# change, the two canonical fault archetypes for the two charts.
stream, boundaries = compose_stream([
    segment("ok", 2800),
    segment("mean shift", 1400, FaultSpec(kind="mean_step", magnitude=3.0, onset=0)),
    segment("ok", 2800),
    segment("variance up", 1400, FaultSpec(kind="variance_scale", magnitude=2.0, onset=0)),
    segment("ok", 1400),
], seed=555)
write_boundaries(boundaries, "demo_boundaries.txt")
print(f"phase II stream: {stream.shape[0]} rows, fault blocks start at "
      f"{boundaries[0]} and {boundaries[2]}")

monitor = Phase2Monitor(model, seed=321)
points = monitor.process(stream)
flagged = [p for p in points
           if p.a_status != "in_control" or p.r2_status in ("out_high", "out_low")]
print(f"phase II: {len(points)} windows, {len(flagged)} flagged")
for p in flagged:
    print(f"  window {p.index:2d} rows {p.start:5d}..{p.end:5d}: "
          f"a-chart {p.a_status}, spread chart {p.r2_status}")

write_chart(points, "demo_chart.csv")
render_charts(points, (model.a_chart, model.r2_chart), "demo_chart.svg")
print("chart rows written to demo_chart.csv, rendering to demo_chart.svg")
