"""Seeded synthetic multivariate process generator with fault injection.

Generates Gaussian (optionally correlated, optionally two-component
mixture) observation segments and splices them into streams, recording
segment boundaries so detection delay can be measured in windows.
Faults transform a segment from a given onset: a location step or ramp
on the first coordinate, a variance scaling of all coordinates, or a
break of the correlation structure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sampling import derive_seed

__all__ = ["FaultSpec", "SegmentSpec", "gen_segment", "compose_stream"]

FAULT_KINDS = ("mean_step", "variance_scale", "drift_ramp", "correlation_break")


@dataclass(frozen=True)
class FaultSpec:
    """Fault transformation applied from `onset` (0-based row within the segment).

    `magnitude` is interpreted per kind: location faults (mean_step,
    drift_ramp) act on the first coordinate in units of that coordinate's
    scale; variance_scale multiplies every coordinate's variance;
    correlation_break blends the correlation matrix toward independence
    with weight clip(magnitude, 0, 1).
    """

    kind: str
    magnitude: float
    onset: int = 0

    def __post_init__(self):
        if self.kind not in FAULT_KINDS:
            raise ValueError(f"unknown fault kind {self.kind!r}")
        if not np.isfinite(self.magnitude):
            raise ValueError("fault magnitude must be finite")
        if self.kind == "variance_scale" and self.magnitude <= 0:
            raise ValueError("variance_scale magnitude must be > 0")
        if self.onset < 0:
            raise ValueError("fault onset must be >= 0")


@dataclass(frozen=True)
class SegmentSpec:
    """One homogeneous stretch of the stream.

    `correlation`, when given, must be a symmetric positive-definite
    matrix with unit diagonal.  A two-component mixture is available via
    `mix_weight` (probability of drawing from the second component) with
    its own mean and scale, for exercising non-elliptical in-control
    regions.
    """

    label: str
    length: int
    mean: tuple
    scale: tuple
    correlation: tuple | None = None
    fault: FaultSpec | None = None
    mix_weight: float = 0.0
    mix_mean: tuple | None = None
    mix_scale: tuple | None = None

    def __post_init__(self):
        if self.length < 1:
            raise ValueError(f"segment length must be >= 1, got {self.length}")
        mean = np.asarray(self.mean, dtype=float)
        scale = np.asarray(self.scale, dtype=float)
        if mean.ndim != 1 or mean.shape != scale.shape:
            raise ValueError("mean and scale must be 1-D vectors of equal length")
        if not (np.isfinite(mean).all() and np.isfinite(scale).all()):
            raise ValueError("mean and scale must be finite")
        if (scale < 0).any():
            raise ValueError("scale components must be nonnegative")
        if self.fault is not None and self.fault.onset >= self.length:
            raise ValueError("fault onset must fall inside the segment")
        if not (0.0 <= self.mix_weight < 1.0):
            raise ValueError("mix_weight must lie in [0, 1)")
        if self.mix_weight > 0.0:
            if self.mix_mean is None or self.mix_scale is None:
                raise ValueError("mixture requires mix_mean and mix_scale")
            mm = np.asarray(self.mix_mean, dtype=float)
            ms = np.asarray(self.mix_scale, dtype=float)
            if mm.shape != mean.shape or ms.shape != scale.shape:
                raise ValueError("mixture mean/scale must match the segment dimension")
            if (ms < 0).any():
                raise ValueError("mixture scale components must be nonnegative")

    @property
    def dim(self) -> int:
        return len(self.mean)


def _cholesky_or_error(correlation, dim: int) -> np.ndarray:
    corr = np.asarray(correlation, dtype=float)
    if corr.shape != (dim, dim):
        raise ValueError(f"correlation must be {dim}x{dim}, got {corr.shape}")
    if not np.allclose(corr, corr.T, atol=1e-12):
        raise ValueError("correlation matrix must be symmetric")
    if not np.allclose(np.diag(corr), 1.0, atol=1e-12):
        raise ValueError("correlation matrix must have a unit diagonal")
    try:
        return np.linalg.cholesky(corr)
    except np.linalg.LinAlgError as exc:
        raise ValueError("correlation matrix must be positive-definite") from exc


def gen_segment(spec: SegmentSpec, seed: int) -> np.ndarray:
    """Draw a length x d segment; deterministic per seed.

    Draw order is fixed (mixture component mask first, then the normal
    deviates), so rows before a fault's onset match the same segment
    generated without the fault under the same seed.
    """
    rng = np.random.default_rng(seed)
    d = spec.dim
    mean = np.asarray(spec.mean, dtype=float)
    scale = np.asarray(spec.scale, dtype=float)

    use_mix = spec.mix_weight > 0.0
    mix_mask = (
        rng.random(spec.length) < spec.mix_weight
        if use_mix
        else np.zeros(spec.length, dtype=bool)
    )
    z = rng.standard_normal((spec.length, d))

    L = None
    if spec.correlation is not None:
        L = _cholesky_or_error(spec.correlation, d)
        corr_z = z @ L.T
    else:
        corr_z = z

    means = np.broadcast_to(mean, (spec.length, d)).copy()
    scales = np.broadcast_to(scale, (spec.length, d)).copy()
    if use_mix:
        means[mix_mask] = np.asarray(spec.mix_mean, dtype=float)
        scales[mix_mask] = np.asarray(spec.mix_scale, dtype=float)

    dev = corr_z * scales

    fault = spec.fault
    if fault is not None:
        t0 = fault.onset
        if fault.kind == "variance_scale":
            dev[t0:] *= np.sqrt(fault.magnitude)
        elif fault.kind == "correlation_break":
            w = min(max(fault.magnitude, 0.0), 1.0)
            base = (
                np.asarray(spec.correlation, dtype=float)
                if spec.correlation is not None
                else np.eye(d)
            )
            L_break = _cholesky_or_error((1.0 - w) * base + w * np.eye(d), d)
            dev[t0:] = (z[t0:] @ L_break.T) * scales[t0:]

    x = means + dev

    if fault is not None:
        t0 = fault.onset
        if fault.kind == "mean_step":
            x[t0:, 0] += fault.magnitude * scale[0]
        elif fault.kind == "drift_ramp":
            span = spec.length - t0
            ramp = (np.arange(t0, spec.length) - t0 + 1) / span
            x[t0:, 0] += fault.magnitude * scale[0] * ramp
    return x


def compose_stream(segments, seed: int) -> tuple[np.ndarray, list[int]]:
    """Concatenate segments in order, recording each boundary.

    Boundaries are the 1-based stream indices of every segment's first
    observation except the first segment's.  Each segment draws from a
    child seed derived from (seed, position), so a stream is reproducible
    segment by segment.
    """
    segments = list(segments)
    if not segments:
        raise ValueError("need at least one segment")
    d = segments[0].dim
    for s in segments[1:]:
        if s.dim != d:
            raise ValueError(
                f"segment {s.label!r} has dimension {s.dim}, expected {d}"
            )
    parts = []
    boundaries = []
    offset = 0
    for idx, s in enumerate(segments):
        if idx > 0:
            boundaries.append(offset + 1)
        parts.append(gen_segment(s, derive_seed(seed, idx)))
        offset += s.length
    return np.vstack(parts), boundaries
