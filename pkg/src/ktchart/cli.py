"""Command-line surface: simulate, train, monitor, score, plot.

Exit codes: 0 success, 2 usage errors (argparse), 3 I/O and file-format
errors, 4 numerical failures (infeasible parameters, non-convergence).
Each run logs its fully resolved configuration so a chart can be
reproduced from the log line alone.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

import csv

from .charts import Phase2Monitor, WindowSpec, phase1
from .sampling import SamplingConfig
from .simulate import FaultSpec, SegmentSpec, compose_stream, gen_segment
from .stream_io import (
    CHART_HEADER,
    IngestError,
    IngestPolicy,
    ModelFormatError,
    _parse_cells,
    _read_header,
    load_model,
    load_phase1,
    read_chart,
    read_observations,
    render_charts,
    save_phase1,
    write_boundaries,
    write_chart,
    write_observations,
)
from .svdd import ConvergenceError, KernelSpec, median_heuristic_bandwidth, score

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

log = logging.getLogger("ktchart")


def _vector_arg(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}")


def _bandwidth_arg(text: str):
    if text == "auto":
        return "auto"
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bandwidth must be a float or 'auto', got {text!r}")
    if value <= 0:
        raise argparse.ArgumentTypeError("bandwidth must be positive")
    return value


def _segments_arg(text: str) -> list[tuple]:
    """Comma-separated segment specs: LENGTH or LENGTH:FAULT:MAGNITUDE[:ONSET]."""
    out = []
    for part in text.split(","):
        fields = part.split(":")
        try:
            length = int(fields[0])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad segment length in {part!r}")
        if len(fields) == 1:
            out.append((length, None))
            continue
        if len(fields) not in (3, 4):
            raise argparse.ArgumentTypeError(
                f"segment {part!r} must be LENGTH or LENGTH:FAULT:MAGNITUDE[:ONSET]"
            )
        kind = fields[1]
        try:
            magnitude = float(fields[2])
            onset = int(fields[3]) if len(fields) == 4 else 0
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad fault numbers in {part!r}")
        out.append((length, (kind, magnitude, onset)))
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ktchart",
        description="Sliding-window data-description control charts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write a synthetic observation CSV")
    sim.add_argument("--output", required=True)
    sim.add_argument("--dim", type=int, default=4)
    sim.add_argument("--length", type=int, default=None,
                     help="stream length (single segment; or use --segments)")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--mean", type=_vector_arg, default=None,
                     help="comma-separated per-channel means (default zeros)")
    sim.add_argument("--scale", type=_vector_arg, default=None,
                     help="comma-separated per-channel scales (default ones)")
    sim.add_argument("--fault", choices=["mean_step", "variance_scale",
                                         "drift_ramp", "correlation_break"])
    sim.add_argument("--fault-magnitude", type=float, default=3.0)
    sim.add_argument("--fault-onset", type=int, default=0)
    sim.add_argument("--segments", type=_segments_arg, default=None,
                     help="composed stream, e.g. 7000,2100:mean_step:3,7000")
    sim.add_argument("--boundaries-out", default=None,
                     help="sidecar file of segment boundary indices, one per line")

    tr = sub.add_parser("train", help="estimate Phase I limits from in-control data")
    tr.add_argument("--input", required=True)
    tr.add_argument("--model", required=True, help="output path for the Phase I model")
    tr.add_argument("--output", required=True, help="output path for the Phase I chart CSV")
    tr.add_argument("--window-n", type=int, required=True)
    tr.add_argument("--overlap-m", type=int, required=True)
    tr.add_argument("--bandwidth", type=_bandwidth_arg, default="auto",
                    help="Gaussian bandwidth for window training, or 'auto' (median heuristic)")
    tr.add_argument("--center-bandwidth", type=_bandwidth_arg, default="auto",
                    help="Gaussian bandwidth for the center description, or 'auto'")
    tr.add_argument("--fraction-f", type=float, default=0.001)
    tr.add_argument("--sample-size", type=int, default=None,
                    help="sampled-trainer sample size (default: dimension + 1)")
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--warnings", action=argparse.BooleanOptionalAction, default=True,
                    help="include two-sigma warning limits on the spread chart")
    tr.add_argument("--on-missing", choices=["error", "skip-row"], default="error")

    mon = sub.add_parser("monitor", help="stream observations against a Phase I model")
    mon.add_argument("--input", required=True)
    mon.add_argument("--model", required=True)
    mon.add_argument("--output", required=True, help="output path for the chart CSV")
    mon.add_argument("--seed", type=int, default=None,
                     help="monitor seed (default: the model's base seed)")
    mon.add_argument("--on-missing", choices=["error", "skip-row"], default="error")

    sc = sub.add_parser("score", help="squared distances of rows against a saved model")
    sc.add_argument("--input", required=True)
    sc.add_argument("--model", required=True)
    sc.add_argument("--output", required=True)
    sc.add_argument("--on-missing", choices=["error", "skip-row"], default="error")

    pl = sub.add_parser("plot", help="render a chart CSV against a model's limits")
    pl.add_argument("--input", required=True, help="chart CSV")
    pl.add_argument("--model", required=True, help="Phase I model supplying the limits")
    pl.add_argument("--output", required=True, help="SVG destination")

    return parser


def _policy(args) -> IngestPolicy:
    action = "skip_row" if args.on_missing == "skip-row" else "error"
    return IngestPolicy(on_missing=action, on_non_numeric=action)


def _cmd_simulate(args) -> int:
    mean = args.mean if args.mean is not None else [0.0] * args.dim
    scale = args.scale if args.scale is not None else [1.0] * args.dim
    if len(mean) != args.dim or len(scale) != args.dim:
        raise ValueError("--mean/--scale length must equal --dim")

    if args.segments is not None:
        specs = []
        for idx, (length, fault_fields) in enumerate(args.segments):
            fault = None
            if fault_fields is not None:
                kind, magnitude, onset = fault_fields
                fault = FaultSpec(kind=kind, magnitude=magnitude, onset=onset)
            specs.append(SegmentSpec(label=f"segment-{idx + 1}", length=length,
                                     mean=tuple(mean), scale=tuple(scale),
                                     fault=fault))
        data, boundaries = compose_stream(specs, args.seed)
        log.info("simulate: dim=%d segments=%d rows=%d seed=%d",
                 args.dim, len(specs), data.shape[0], args.seed)
    else:
        if args.length is None:
            raise ValueError("either --length or --segments is required")
        fault = None
        if args.fault:
            fault = FaultSpec(kind=args.fault, magnitude=args.fault_magnitude,
                              onset=args.fault_onset)
        spec = SegmentSpec(label="cli", length=args.length, mean=tuple(mean),
                           scale=tuple(scale), fault=fault)
        data, boundaries = gen_segment(spec, args.seed), []
        log.info("simulate: dim=%d length=%d seed=%d fault=%s",
                 args.dim, args.length, args.seed, args.fault or "none")
    write_observations(data, args.output)
    if args.boundaries_out is not None:
        write_boundaries(boundaries, args.boundaries_out)
    return EXIT_OK


def _cmd_train(args) -> int:
    data, summary = read_observations(args.input, _policy(args))
    if summary.rows_skipped:
        log.warning("train: skipped %d bad rows", summary.rows_skipped)
    spec = WindowSpec(n=args.window_n, m=args.overlap_m)
    s = args.bandwidth
    if s == "auto":
        s = median_heuristic_bandwidth(data, max_points=1000, seed=args.seed)
    kernel_window = KernelSpec.gaussian(s)
    kernel_center = (
        None if args.center_bandwidth == "auto"
        else KernelSpec.gaussian(args.center_bandwidth)
    )
    cfg = SamplingConfig(sample_size=args.sample_size, rng_seed=args.seed)
    sample_size = cfg.resolve_sample_size(data.shape[1])
    log.info(
        "train: rows=%d dim=%d n=%d m=%d f=%g bandwidth=%g sample_size=%d "
        "C_sub=%g seed=%d warnings=%s",
        data.shape[0], data.shape[1], spec.n, spec.m, args.fraction_f, s,
        sample_size, 1.0 / (sample_size * args.fraction_f), args.seed, args.warnings,
    )
    model, points = phase1(
        data, spec, kernel_window, kernel_center=kernel_center,
        f=args.fraction_f, sampling=cfg, warnings=args.warnings,
    )
    save_phase1(model, args.model)
    write_chart(points, args.output)
    log.info("train: %d windows, a-chart UCL=%g, spread UCL=%g",
             len(points), model.a_chart.ucl, model.r2_chart.ucl)
    return EXIT_OK


def _cmd_monitor(args) -> int:
    model = load_phase1(args.model)
    policy = IngestPolicy(
        on_missing=_policy(args).on_missing,
        on_non_numeric=_policy(args).on_non_numeric,
        expected_dim=model.dim,
    )
    cfg = model.sampling
    sample_size = cfg.resolve_sample_size(model.dim)
    log.info(
        "monitor: n=%d m=%d f=%g bandwidth=%s sample_size=%d C_sub=%g seed=%s",
        model.window_spec.n, model.window_spec.m, model.f,
        model.kernel_window.bandwidth if model.kernel_window.kind == "gaussian" else "linear",
        sample_size, 1.0 / (sample_size * model.f),
        model.base_seed if args.seed is None else args.seed,
    )
    monitor = Phase2Monitor(model, seed=args.seed)
    points = []
    skipped = 0
    # single pass over the stream: each chart point is emitted the moment
    # its window completes; memory stays bounded by the window length
    with open(args.input, "r", newline="") as fh:
        reader = csv.reader(fh)
        columns = _read_header(reader, policy)
        print(",".join(CHART_HEADER), flush=True)
        for rownum, cells in enumerate(reader, start=1):
            if not cells:
                continue
            status, row = _parse_cells(cells, columns, rownum, policy)
            if status != "ok":
                skipped += 1
                continue
            point = monitor.push(row)
            if point is not None:
                points.append(point)
                print(
                    f"{point.index},{point.start},{point.end},{point.r_squared!r},"
                    f"{point.center_dist!r},{point.a_status},{point.r2_status}",
                    flush=True,
                )
    if skipped:
        log.warning("monitor: skipped %d bad rows", skipped)
    write_chart(points, args.output)
    log.info("monitor: emitted %d windows", len(points))
    return EXIT_OK


def _cmd_score(args) -> int:
    try:
        model = load_model(args.model)
    except ModelFormatError:
        model = load_phase1(args.model).center_model  # fall back to the center model
    policy = IngestPolicy(
        on_missing=_policy(args).on_missing,
        on_non_numeric=_policy(args).on_non_numeric,
        expected_dim=model.dim,
    )
    data, summary = read_observations(args.input, policy)
    if summary.rows_skipped:
        log.warning("score: skipped %d bad rows", summary.rows_skipped)
    dist2 = np.atleast_1d(score(model, data))
    log.info("score: rows=%d r_squared=%g", data.shape[0], model.r_squared)
    with open(args.output, "w", newline="") as fh:
        fh.write("row,dist_squared,status\n")
        for k, v in enumerate(dist2, start=1):
            status = "outside" if v > model.r_squared else "inside"
            fh.write(f"{k},{float(v)!r},{status}\n")
    return EXIT_OK


def _cmd_plot(args) -> int:
    points = read_chart(args.input)
    model = load_phase1(args.model)
    render_charts(points, (model.a_chart, model.r2_chart), args.output)
    log.info("plot: rendered %d points to %s", len(points), args.output)
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "train": _cmd_train,
    "monitor": _cmd_monitor,
    "score": _cmd_score,
    "plot": _cmd_plot,
}


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (OSError, IngestError, ModelFormatError) as exc:
        print(f"ktchart: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConvergenceError, ValueError) as exc:
        print(f"ktchart: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
