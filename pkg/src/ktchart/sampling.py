"""Fast iterative sampled training of a data description.

Instead of solving one quadratic program over every observation, the
trainer repeatedly draws small random samples (with replacement), trains
on each, and folds the resulting support vectors into a growing master
set.  Retraining on the master union after each draw expands the
description until its threshold and center stop moving.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .svdd import KernelSpec, SvddModel, _train_at_penalty, validate_observations

__all__ = [
    "SamplingConfig",
    "SamplingTrace",
    "derive_seed",
    "draw_sample",
    "train_sampled",
]

_MASK64 = (1 << 64) - 1


def derive_seed(base_seed: int, index: int) -> int:
    """Deterministic 64-bit child seed for stream element `index`.

    Hashing through a seed sequence keeps per-window generators
    uncorrelated while leaving every run reproducible from one base seed.
    """
    ss = np.random.SeedSequence((int(base_seed) & _MASK64, int(index) & _MASK64))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SamplingConfig:
    """Knobs for the sampled trainer.

    `sample_size=None` resolves to d+1 at training time.  Convergence
    requires the relative threshold change and relative center movement
    to stay below their tolerances for `patience` consecutive iterations.
    """

    sample_size: int | None = None
    max_iterations: int = 1000
    eps_r: float = 1e-4
    eps_a: float = 1e-4
    patience: int = 1
    rng_seed: int = 0

    def __post_init__(self):
        if self.sample_size is not None and self.sample_size < 2:
            raise ValueError(f"sample_size must be >= 2, got {self.sample_size}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.eps_r <= 0 or self.eps_a <= 0:
            raise ValueError("tolerances must be positive")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if not (0 <= self.rng_seed <= _MASK64):
            raise ValueError("rng_seed must be a 64-bit unsigned integer")

    def resolve_sample_size(self, dim: int) -> int:
        return self.sample_size if self.sample_size is not None else dim + 1


@dataclass(frozen=True)
class SamplingTrace:
    """Per-iteration observability of the master-set loop."""

    iterations: np.ndarray  # iteration index, 0 = seed training
    r_squared: np.ndarray
    centers: np.ndarray  # one row per iteration
    master_sizes: np.ndarray
    converged: bool
    iterations_used: int

    def __post_init__(self):
        if len(self.iterations) != self.iterations_used:
            raise ValueError("trace length must equal iterations_used")
        for arr in (self.iterations, self.r_squared, self.centers, self.master_sizes):
            arr.flags.writeable = False

    def to_csv(self, destination) -> None:
        """One row per iteration: iteration, r_squared, master_size, center components."""
        close = False
        if isinstance(destination, (str, bytes)) or hasattr(destination, "__fspath__"):
            fh = open(destination, "w", newline="")
            close = True
        else:
            fh = destination
        try:
            w = csv.writer(fh)
            dim = self.centers.shape[1]
            w.writerow(
                ["iteration", "r_squared", "master_size"]
                + [f"center_{k + 1}" for k in range(dim)]
            )
            for t in range(self.iterations_used):
                w.writerow(
                    [int(self.iterations[t]), repr(float(self.r_squared[t])),
                     int(self.master_sizes[t])]
                    + [repr(float(v)) for v in self.centers[t]]
                )
        finally:
            if close:
                fh.close()


def draw_sample(data, size: int, rng: np.random.Generator) -> np.ndarray:
    """`size` rows drawn uniformly with replacement; deterministic per rng state."""
    X = validate_observations(data)
    if size < 1:
        raise ValueError(f"sample size must be >= 1, got {size}")
    idx = rng.integers(0, X.shape[0], size=size)
    return X[idx]


def _dedup_rows(X: np.ndarray) -> np.ndarray:
    """Drop exact duplicate rows, keeping first occurrences in order."""
    _, first = np.unique(X, axis=0, return_index=True)
    return X[np.sort(first)]


def train_sampled(
    data,
    kernel: KernelSpec,
    f: float,
    cfg: SamplingConfig | None = None,
    tol: float = 1e-6,
) -> tuple[SvddModel, SamplingTrace]:
    """Train a data description by iterative sampling.

    Seeds the master support set from one sample, then repeatedly draws a
    fresh sample, trains on it, and retrains on the deduplicated union of
    the master set and the sample's support vectors.  Stops once both the
    relative threshold change and the relative center movement have been
    below their tolerances for `patience` consecutive iterations, or at
    `max_iterations` with the trace marked unconverged.

    Every sub-problem uses the penalty C = 1/(sample_size * f), raised to
    1/q when a sub-problem holds only q < 1/C rows so the equality
    constraint stays feasible.
    """
    X = validate_observations(data)
    if not (0.0 < f <= 1.0):
        raise ValueError(f"outlier fraction must lie in (0, 1], got {f}")
    cfg = cfg or SamplingConfig()
    size = cfg.resolve_sample_size(X.shape[1])
    C = 1.0 / (size * f)
    rng = np.random.default_rng(cfg.rng_seed)

    def _fit(rows: np.ndarray) -> SvddModel:
        c_eff = max(C, 1.0 / rows.shape[0])
        return _train_at_penalty(rows, kernel, c_eff, f, tol, None)

    model = _fit(draw_sample(X, size, rng))
    master = _dedup_rows(model.support_vectors)

    it_idx = [0]
    r2s = [model.r_squared]
    centers = [np.asarray(model.center)]
    sizes = [master.shape[0]]
    converged = False
    streak = 0

    for t in range(1, cfg.max_iterations + 1):
        sample_model = _fit(draw_sample(X, size, rng))
        union = _dedup_rows(np.vstack([master, sample_model.support_vectors]))
        model = _fit(union)
        master = _dedup_rows(model.support_vectors)

        prev_r2, prev_center = r2s[-1], centers[-1]
        it_idx.append(t)
        r2s.append(model.r_squared)
        centers.append(np.asarray(model.center))
        sizes.append(master.shape[0])

        dr = abs(model.r_squared - prev_r2) / (abs(prev_r2) + 1e-12)
        da = float(np.linalg.norm(model.center - prev_center)) / (
            float(np.linalg.norm(prev_center)) + 1e-12
        )
        streak = streak + 1 if (dr <= cfg.eps_r and da <= cfg.eps_a) else 0
        if streak >= cfg.patience:
            converged = True
            break

    trace = SamplingTrace(
        iterations=np.array(it_idx, dtype=int),
        r_squared=np.array(r2s, dtype=float),
        centers=np.vstack(centers),
        master_sizes=np.array(sizes, dtype=int),
        converged=converged,
        iterations_used=len(it_idx),
    )
    return model, trace
