"""Observation ingestion, model and chart persistence, and chart rendering.

All persistence is line-oriented text: observation and chart files are
plain CSV, model files use a small self-describing key/value schema with
a format-version tag.  Floats are written with `repr`, which round-trips
exactly, so saving and loading never perturbs a score or a status.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .charts import ChartLimits, ChartPoint, PhaseIModel, WindowSpec
from .sampling import SamplingConfig
from .svdd import KernelSpec, SvddModel, SvddParams, validate_observations

__all__ = [
    "IngestError",
    "ModelFormatError",
    "IngestPolicy",
    "IngestSummary",
    "read_observations",
    "write_observations",
    "write_boundaries",
    "read_boundaries",
    "write_chart",
    "read_chart",
    "save_model",
    "load_model",
    "save_phase1",
    "load_phase1",
    "render_charts",
]

_MODEL_TAG = "ktchart-model"
_PHASE1_TAG = "ktchart-phase1"
_FORMAT_VERSION = 1

CHART_HEADER = ["window_id", "start", "end", "r_squared", "center_dist",
                "a_status", "r2_status"]


class IngestError(ValueError):
    """Malformed observation input under the `error` policy."""


class ModelFormatError(Exception):
    """Model file is malformed, truncated, or of an unsupported version."""


@dataclass(frozen=True)
class IngestPolicy:
    """How to treat bad rows: fail fast or skip and count."""

    on_missing: str = "error"
    on_non_numeric: str = "error"
    expected_dim: int | None = None

    def __post_init__(self):
        for name, v in (("on_missing", self.on_missing),
                        ("on_non_numeric", self.on_non_numeric)):
            if v not in ("error", "skip_row"):
                raise ValueError(f"{name} must be 'error' or 'skip_row', got {v!r}")


@dataclass(frozen=True)
class IngestSummary:
    rows_read: int
    rows_kept: int
    rows_skipped_missing: int
    rows_skipped_non_numeric: int
    columns: tuple[str, ...]

    @property
    def rows_skipped(self) -> int:
        return self.rows_skipped_missing + self.rows_skipped_non_numeric


def _open_for(destination, mode: str):
    if isinstance(destination, (str, bytes)) or hasattr(destination, "__fspath__"):
        return open(destination, mode, newline="" if "b" not in mode else None), True
    return destination, False


def _read_header(reader, policy: IngestPolicy) -> tuple[str, ...]:
    try:
        header = next(reader)
    except StopIteration:
        raise IngestError("empty file: missing header row")
    columns = tuple(name.strip() for name in header)
    if policy.expected_dim is not None and len(columns) != policy.expected_dim:
        raise IngestError(
            f"header has {len(columns)} columns, expected {policy.expected_dim}"
        )
    return columns


def _parse_cells(cells, columns, rownum: int, policy: IngestPolicy):
    """One data row -> ("ok", vector) or ("missing"/"non_numeric", None).

    Raises IngestError under the `error` policy or on a structural
    problem (wrong cell count).
    """
    if len(cells) != len(columns):
        raise IngestError(
            f"row {rownum}: has {len(cells)} cells, expected {len(columns)}"
        )
    parsed = np.empty(len(columns))
    bad = None  # ("missing" | "non_numeric", column name)
    for k, cell in enumerate(cells):
        text = cell.strip()
        if not text:
            bad = ("missing", columns[k])
            break
        try:
            value = float(text)
        except ValueError:
            bad = ("non_numeric", columns[k])
            break
        if not np.isfinite(value):
            bad = ("non_numeric", columns[k])
            break
        parsed[k] = value
    if bad is None:
        return "ok", parsed
    kind, col = bad
    action = policy.on_missing if kind == "missing" else policy.on_non_numeric
    if action == "error":
        what = "empty cell" if kind == "missing" else "non-numeric value"
        raise IngestError(f"row {rownum}: {what} in column {col!r}")
    return kind, None


def read_observations(source, policy: IngestPolicy | None = None):
    """Parse a headered CSV of numeric channels into an observation matrix.

    Returns (matrix, IngestSummary).  Row order is preserved.  Empty
    cells fall under `on_missing`; unparseable or non-finite cells under
    `on_non_numeric` (inner modules assume finite data, so NaN and Inf
    are rejected at this boundary).  Structural problems (wrong column
    count, missing header, no surviving rows) always raise.
    """
    policy = policy or IngestPolicy()
    fh, close = _open_for(source, "r")
    try:
        reader = csv.reader(fh)
        columns = _read_header(reader, policy)
        rows = []
        n_missing = n_non_numeric = n_read = 0
        for rownum, cells in enumerate(reader, start=1):
            if not cells:
                continue  # blank line
            n_read += 1
            status, parsed = _parse_cells(cells, columns, rownum, policy)
            if status == "ok":
                rows.append(parsed)
            elif status == "missing":
                n_missing += 1
            else:
                n_non_numeric += 1
        if not rows:
            raise IngestError("no usable data rows")
        matrix = np.vstack(rows)
        summary = IngestSummary(
            rows_read=n_read,
            rows_kept=len(rows),
            rows_skipped_missing=n_missing,
            rows_skipped_non_numeric=n_non_numeric,
            columns=columns,
        )
        return matrix, summary
    finally:
        if close:
            fh.close()


def write_observations(data, destination, columns=None) -> None:
    """Write an observation matrix as a headered CSV."""
    X = validate_observations(data)
    names = list(columns) if columns is not None else [
        f"x{k + 1}" for k in range(X.shape[1])
    ]
    if len(names) != X.shape[1]:
        raise ValueError(f"need {X.shape[1]} column names, got {len(names)}")
    fh, close = _open_for(destination, "w")
    try:
        w = csv.writer(fh)
        w.writerow(names)
        for row in X:
            w.writerow([repr(float(v)) for v in row])
    finally:
        if close:
            fh.close()


def write_boundaries(boundaries, destination) -> None:
    """Segment-boundary sidecar: one 1-based stream index per line."""
    fh, close = _open_for(destination, "w")
    try:
        for b in boundaries:
            fh.write(f"{int(b)}\n")
    finally:
        if close:
            fh.close()


def read_boundaries(source) -> list[int]:
    """Read back a boundary sidecar written by `write_boundaries`."""
    fh, close = _open_for(source, "r")
    try:
        out = []
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                out.append(int(text))
            except ValueError:
                raise IngestError(f"boundary line {lineno}: not an integer: {text!r}")
        return out
    finally:
        if close:
            fh.close()


def write_chart(points, destination) -> None:
    """One CSV row per chart point; an empty list yields a header-only file."""
    fh, close = _open_for(destination, "w")
    try:
        w = csv.writer(fh)
        w.writerow(CHART_HEADER)
        for p in points:
            w.writerow([p.index, p.start, p.end, repr(p.r_squared),
                        repr(p.center_dist), p.a_status, p.r2_status])
    finally:
        if close:
            fh.close()


def read_chart(source) -> list[ChartPoint]:
    """Read back a chart CSV written by `write_chart`."""
    fh, close = _open_for(source, "r")
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError("empty chart file: missing header")
        if [h.strip() for h in header] != CHART_HEADER:
            raise IngestError(f"unexpected chart header: {header}")
        points = []
        for rownum, cells in enumerate(reader, start=1):
            if not cells:
                continue
            if len(cells) != len(CHART_HEADER):
                raise IngestError(f"chart row {rownum}: wrong cell count")
            try:
                points.append(ChartPoint(
                    index=int(cells[0]), start=int(cells[1]), end=int(cells[2]),
                    r_squared=float(cells[3]), center_dist=float(cells[4]),
                    a_status=cells[5], r2_status=cells[6],
                ))
            except ValueError as exc:
                raise IngestError(f"chart row {rownum}: {exc}") from exc
        return points
    finally:
        if close:
            fh.close()


# ---------------------------------------------------------------------------
# Model persistence

def _fmt_vector(v) -> str:
    return " ".join(repr(float(x)) for x in np.asarray(v, dtype=float).ravel())


def _model_lines(model: SvddModel) -> list[str]:
    kern = model.kernel
    kernel_text = kern.kind if kern.kind == "linear" else f"gaussian {repr(kern.bandwidth)}"
    lines = [
        f"{_MODEL_TAG} {_FORMAT_VERSION}",
        f"kernel: {kernel_text}",
        f"f: {repr(model.params.f)}",
        f"c: {repr(model.params.c)}",
        f"dim: {model.dim}",
        f"n_sv: {model.n_sv}",
        f"r_squared: {repr(model.r_squared)}",
        f"offset: {repr(model.offset)}",
        f"threshold_fallback: {int(model.threshold_fallback)}",
        f"center: {_fmt_vector(model.center)}",
        f"alphas: {_fmt_vector(model.alphas)}",
        "support_vectors:",
    ]
    lines.extend(_fmt_vector(row) for row in model.support_vectors)
    lines.append(f"end {_MODEL_TAG}")
    return lines


def save_model(model: SvddModel, destination) -> None:
    """Write a trained description to the versioned text schema."""
    fh, close = _open_for(destination, "w")
    try:
        fh.write("\n".join(_model_lines(model)) + "\n")
    finally:
        if close:
            fh.close()


class _LineReader:
    """Sequential line access with format-error reporting."""

    def __init__(self, lines: list[str]):
        self._lines = lines
        self._pos = 0

    def next_line(self, context: str) -> str:
        if self._pos >= len(self._lines):
            raise ModelFormatError(f"truncated file: expected {context}")
        line = self._lines[self._pos]
        self._pos += 1
        return line

    def keyed(self, key: str) -> str:
        line = self.next_line(f"field {key!r}")
        prefix = key + ":"
        if not line.startswith(prefix):
            raise ModelFormatError(f"expected field {key!r}, got {line!r}")
        return line[len(prefix):].strip()


def _parse_float(text: str, key: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ModelFormatError(f"invalid value for field {key!r}: {text!r}")


def _parse_int(text: str, key: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ModelFormatError(f"invalid value for field {key!r}: {text!r}")


def _parse_vector(text: str, key: str, length: int) -> np.ndarray:
    parts = text.split()
    if len(parts) != length:
        raise ModelFormatError(
            f"field {key!r}: expected {length} values, got {len(parts)}"
        )
    try:
        return np.array([float(v) for v in parts])
    except ValueError:
        raise ModelFormatError(f"field {key!r}: non-numeric entry")


def _check_tag(line: str, tag: str) -> None:
    parts = line.split()
    if len(parts) != 2 or parts[0] != tag:
        raise ModelFormatError(f"not a {tag} file (first line {line!r})")
    if parts[1] != str(_FORMAT_VERSION):
        raise ModelFormatError(
            f"unsupported {tag} version {parts[1]!r} (supported: {_FORMAT_VERSION})"
        )


def _parse_kernel(text: str) -> KernelSpec:
    parts = text.split()
    if parts == ["linear"]:
        return KernelSpec.linear()
    if len(parts) == 2 and parts[0] == "gaussian":
        return KernelSpec.gaussian(_parse_float(parts[1], "kernel"))
    raise ModelFormatError(f"invalid value for field 'kernel': {text!r}")


def _read_model_block(r: _LineReader) -> SvddModel:
    _check_tag(r.next_line("format tag"), _MODEL_TAG)
    kernel = _parse_kernel(r.keyed("kernel"))
    f = _parse_float(r.keyed("f"), "f")
    c = _parse_float(r.keyed("c"), "c")
    dim = _parse_int(r.keyed("dim"), "dim")
    n_sv = _parse_int(r.keyed("n_sv"), "n_sv")
    r_squared = _parse_float(r.keyed("r_squared"), "r_squared")
    offset = _parse_float(r.keyed("offset"), "offset")
    fallback = bool(_parse_int(r.keyed("threshold_fallback"), "threshold_fallback"))
    center = _parse_vector(r.keyed("center"), "center", dim)
    alphas = _parse_vector(r.keyed("alphas"), "alphas", n_sv)
    if r.next_line("'support_vectors:'") != "support_vectors:":
        raise ModelFormatError("expected 'support_vectors:' section")
    sv = np.vstack([
        _parse_vector(r.next_line(f"support vector row {k + 1}"),
                      "support_vectors", dim)
        for k in range(n_sv)
    ]) if n_sv else np.empty((0, dim))
    if r.next_line("end marker") != f"end {_MODEL_TAG}":
        raise ModelFormatError(f"missing 'end {_MODEL_TAG}' marker")
    try:
        return SvddModel(
            support_vectors=sv,
            alphas=alphas,
            r_squared=r_squared,
            offset=offset,
            center=center,
            kernel=kernel,
            params=SvddParams(f=f, c=c),
            threshold_fallback=fallback,
        )
    except ValueError as exc:
        raise ModelFormatError(f"inconsistent model fields: {exc}") from exc


def load_model(source) -> SvddModel:
    """Load a description saved by `save_model`."""
    fh, close = _open_for(source, "r")
    try:
        lines = fh.read().splitlines()
    finally:
        if close:
            fh.close()
    return _read_model_block(_LineReader(lines))


def _fmt_limits(lim: ChartLimits) -> str:
    parts = [repr(lim.ucl), repr(lim.center_line), repr(lim.lcl)]
    parts.append(repr(lim.uwl) if lim.uwl is not None else "-")
    parts.append(repr(lim.lwl) if lim.lwl is not None else "-")
    return " ".join(parts)


def _parse_limits(text: str, key: str) -> ChartLimits:
    parts = text.split()
    if len(parts) != 5:
        raise ModelFormatError(f"field {key!r}: expected 5 entries, got {len(parts)}")
    vals = [_parse_float(v, key) for v in parts[:3]]
    warn = [None if v == "-" else _parse_float(v, key) for v in parts[3:]]
    try:
        return ChartLimits(ucl=vals[0], center_line=vals[1], lcl=vals[2],
                           uwl=warn[0], lwl=warn[1])
    except ValueError as exc:
        raise ModelFormatError(f"field {key!r}: {exc}") from exc


def save_phase1(model: PhaseIModel, destination) -> None:
    """Write the frozen Phase I state (limits, stats, spec, center model).

    Per-window summaries are an in-memory audit trail and are not
    persisted; a loaded model monitors and scores identically but cannot
    be pruned further.
    """
    cfg = model.sampling
    lines = [
        f"{_PHASE1_TAG} {_FORMAT_VERSION}",
        f"window_n: {model.window_spec.n}",
        f"window_m: {model.window_spec.m}",
        f"f: {repr(model.f)}",
        f"warnings: {int(model.warnings_enabled)}",
        f"r2_mean: {repr(model.r2_mean)}",
        f"r2_sigma: {repr(model.r2_sigma)}",
        f"a_chart: {_fmt_limits(model.a_chart)}",
        f"r2_chart: {_fmt_limits(model.r2_chart)}",
        "kernel_window: "
        + (model.kernel_window.kind if model.kernel_window.kind == "linear"
           else f"gaussian {repr(model.kernel_window.bandwidth)}"),
        f"center_bandwidth_auto: {int(model.center_bandwidth_auto)}",
        f"sample_size: {'auto' if cfg.sample_size is None else cfg.sample_size}",
        f"max_iterations: {cfg.max_iterations}",
        f"eps_r: {repr(cfg.eps_r)}",
        f"eps_a: {repr(cfg.eps_a)}",
        f"patience: {cfg.patience}",
        f"rng_seed: {cfg.rng_seed}",
        "center_model:",
    ]
    lines.extend(_model_lines(model.center_model))
    lines.append(f"end {_PHASE1_TAG}")
    fh, close = _open_for(destination, "w")
    try:
        fh.write("\n".join(lines) + "\n")
    finally:
        if close:
            fh.close()


def load_phase1(source) -> PhaseIModel:
    """Load a Phase I model saved by `save_phase1` (summaries come back empty)."""
    fh, close = _open_for(source, "r")
    try:
        lines = fh.read().splitlines()
    finally:
        if close:
            fh.close()
    r = _LineReader(lines)
    _check_tag(r.next_line("format tag"), _PHASE1_TAG)
    n = _parse_int(r.keyed("window_n"), "window_n")
    m = _parse_int(r.keyed("window_m"), "window_m")
    f = _parse_float(r.keyed("f"), "f")
    warnings = bool(_parse_int(r.keyed("warnings"), "warnings"))
    r2_mean = _parse_float(r.keyed("r2_mean"), "r2_mean")
    r2_sigma = _parse_float(r.keyed("r2_sigma"), "r2_sigma")
    a_chart = _parse_limits(r.keyed("a_chart"), "a_chart")
    r2_chart = _parse_limits(r.keyed("r2_chart"), "r2_chart")
    kernel_window = _parse_kernel(r.keyed("kernel_window"))
    center_auto = bool(_parse_int(r.keyed("center_bandwidth_auto"),
                                  "center_bandwidth_auto"))
    size_text = r.keyed("sample_size")
    sample_size = None if size_text == "auto" else _parse_int(size_text, "sample_size")
    cfg = SamplingConfig(
        sample_size=sample_size,
        max_iterations=_parse_int(r.keyed("max_iterations"), "max_iterations"),
        eps_r=_parse_float(r.keyed("eps_r"), "eps_r"),
        eps_a=_parse_float(r.keyed("eps_a"), "eps_a"),
        patience=_parse_int(r.keyed("patience"), "patience"),
        rng_seed=_parse_int(r.keyed("rng_seed"), "rng_seed"),
    )
    if r.next_line("'center_model:'") != "center_model:":
        raise ModelFormatError("expected 'center_model:' section")
    center_model = _read_model_block(r)
    if r.next_line("end marker") != f"end {_PHASE1_TAG}":
        raise ModelFormatError(f"missing 'end {_PHASE1_TAG}' marker")
    return PhaseIModel(
        center_model=center_model,
        r2_mean=r2_mean,
        r2_sigma=r2_sigma,
        a_chart=a_chart,
        r2_chart=r2_chart,
        window_spec=WindowSpec(n=n, m=m),
        kernel_window=kernel_window,
        kernel_center=center_model.kernel,
        center_bandwidth_auto=center_auto,
        f=f,
        sampling=cfg,
        warnings_enabled=warnings,
        summaries=(),
    )


# ---------------------------------------------------------------------------
# Rendering

_SVG_W = 960
_PANEL_H = 260
_MARGIN_L, _MARGIN_R, _MARGIN_T, _PANEL_GAP = 70, 30, 45, 60


def _scale(v, lo, hi, out_lo, out_hi):
    if hi <= lo:
        return (out_lo + out_hi) / 2.0
    return out_lo + (v - lo) * (out_hi - out_lo) / (hi - lo)


def _panel_svg(
    parts: list[str],
    title: str,
    x_vals,
    y_vals,
    limits: ChartLimits,
    flags,
    top: float,
    panel_id: str,
) -> None:
    left, right = _MARGIN_L, _SVG_W - _MARGIN_R
    bottom = top + _PANEL_H
    y_candidates = list(y_vals) + [limits.ucl, limits.lcl, limits.center_line]
    if limits.uwl is not None:
        y_candidates += [limits.uwl, limits.lwl]
    lo = min(0.0, min(y_candidates))
    hi = max(y_candidates)
    pad = 0.05 * (hi - lo) if hi > lo else max(abs(hi), 1.0) * 0.1
    lo, hi = lo - pad, hi + pad
    x_lo, x_hi = min(x_vals), max(x_vals)
    if x_lo == x_hi:
        x_lo, x_hi = x_lo - 1, x_hi + 1

    def px(v):
        return _scale(v, x_lo, x_hi, left, right)

    def py(v):
        return _scale(v, lo, hi, bottom, top)

    parts.append(f'<g id="{panel_id}">')
    parts.append(
        f'<text x="{left:.2f}" y="{top - 12:.2f}" class="title">{title}</text>'
    )
    parts.append(
        f'<rect x="{left:.2f}" y="{top:.2f}" width="{right - left:.2f}" '
        f'height="{_PANEL_H:.2f}" class="frame"/>'
    )

    def hline(value, cls, dashed=False, label=""):
        y = py(value)
        dash = ' stroke-dasharray="6 4"' if dashed else ""
        parts.append(
            f'<line x1="{left:.2f}" y1="{y:.2f}" x2="{right:.2f}" y2="{y:.2f}" '
            f'class="limit {cls}"{dash}/>'
        )
        parts.append(
            f'<text x="{right + 4:.2f}" y="{y + 3:.2f}" class="limlab">{label}</text>'
        )

    hline(limits.ucl, "ucl", label=f"UCL={limits.ucl:.4g}")
    hline(limits.center_line, "cl", label=f"CL={limits.center_line:.4g}")
    hline(limits.lcl, "lcl", label=f"LCL={limits.lcl:.4g}")
    if limits.uwl is not None:
        hline(limits.uwl, "uwl", dashed=True, label=f"UWL={limits.uwl:.4g}")
        hline(limits.lwl, "lwl", dashed=True, label=f"LWL={limits.lwl:.4g}")

    pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(x_vals, y_vals))
    parts.append(f'<polyline points="{pts}" class="series"/>')
    for x, y, flagged in zip(x_vals, y_vals, flags):
        cls = "pt ooc" if flagged else "pt"
        radius = 4.0 if flagged else 2.5
        parts.append(
            f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="{radius}" class="{cls}"/>'
        )

    # x ticks: first, last, and up to 4 interior window indices
    n_ticks = min(6, int(x_hi - x_lo) + 1)
    ticks = sorted({int(round(v)) for v in np.linspace(x_lo, x_hi, max(n_ticks, 2))})
    for t in ticks:
        x = px(t)
        parts.append(
            f'<line x1="{x:.2f}" y1="{bottom:.2f}" x2="{x:.2f}" '
            f'y2="{bottom + 5:.2f}" class="tick"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{bottom + 18:.2f}" class="ticklab" '
            f'text-anchor="middle">{t}</text>'
        )
    parts.append("</g>")


def render_charts(points, limits, destination) -> None:
    """Render the two stacked panels (center chart above, spread chart below).

    Output is a standalone SVG with horizontal limit lines (warning
    limits dashed) and out-of-control points drawn larger and in a
    distinct color.  Byte-identical for identical inputs.
    """
    points = list(points)
    if not points:
        raise ValueError("need at least one chart point to render")
    a_limits, r2_limits = limits
    idx = [p.index for p in points]
    height = _MARGIN_T + 2 * _PANEL_H + _PANEL_GAP + 40
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" '
        f'height="{height}" viewBox="0 0 {_SVG_W} {height}">',
        "<style>"
        ".frame{fill:none;stroke:#444;stroke-width:1}"
        ".limit{stroke:#888;stroke-width:1}"
        ".limit.ucl,.limit.lcl{stroke:#b22;stroke-width:1.2}"
        ".limit.cl{stroke:#282;stroke-width:1}"
        ".series{fill:none;stroke:#36c;stroke-width:1}"
        ".pt{fill:#36c;stroke:none}"
        ".pt.ooc{fill:#d22;stroke:#800;stroke-width:0.8}"
        ".title{font:bold 14px sans-serif;fill:#222}"
        ".limlab,.ticklab{font:10px sans-serif;fill:#555}"
        ".tick{stroke:#444;stroke-width:1}"
        "</style>",
    ]
    _panel_svg(
        parts,
        "Center (a) chart: window center distance",
        idx,
        [p.center_dist for p in points],
        a_limits,
        [p.a_status == "out_of_control" for p in points],
        _MARGIN_T,
        "panel-a",
    )
    _panel_svg(
        parts,
        "Spread (R^2) chart: window threshold",
        idx,
        [p.r_squared for p in points],
        r2_limits,
        [p.r2_status in ("out_high", "out_low") for p in points],
        _MARGIN_T + _PANEL_H + _PANEL_GAP,
        "panel-r2",
    )
    parts.append("</svg>")
    fh, close = _open_for(destination, "w")
    try:
        fh.write("\n".join(parts) + "\n")
    finally:
        if close:
            fh.close()
