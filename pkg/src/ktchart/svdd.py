"""Support vector data description: kernels, dual solver, model, scoring.

The data description is a minimum-volume hypersphere in kernel feature
space fit to one-class training data.  The dual problem

    max  sum_i a_i K(x_i, x_i) - sum_ij a_i a_j K(x_i, x_j)
    s.t. sum_i a_i = 1,  0 <= a_i <= C

is solved with pairwise analytic coordinate ascent (the equality
constraint only admits two-coefficient moves).  The squared threshold
radius, feature-space offset and input-space center are derived from the
optimal coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

__all__ = [
    "KernelSpec",
    "SvddParams",
    "SvddModel",
    "ConvergenceError",
    "validate_observations",
    "kernel_eval",
    "kernel_matrix",
    "median_heuristic_bandwidth",
    "solve_dual",
    "dual_objective",
    "compute_threshold",
    "train_full",
    "score",
    "classify",
    "position_report",
]

# Coefficients within this relative distance of the box bound C count as
# bound-constrained when the boundary support vectors are selected.
_BOUND_REL_TOL = 1e-7


class ConvergenceError(RuntimeError):
    """Dual solver hit its iteration cap before meeting the KKT tolerance.

    Carries the best iterate (`alphas`) and the residual KKT violation
    (`residual`) so callers can inspect or salvage the partial solve.
    """

    def __init__(self, message: str, alphas: np.ndarray, residual: float):
        super().__init__(message)
        self.alphas = alphas
        self.residual = residual


def validate_observations(values, dim: int | None = None) -> np.ndarray:
    """Coerce to a p x d float matrix and enforce finiteness.

    A 1-D input is treated as a single observation.  `dim`, when given,
    pins the expected number of columns.
    """
    X = np.asarray(values, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise ValueError(f"observations must be a 2-D matrix, got ndim={X.ndim}")
    p, d = X.shape
    if p < 1 or d < 1:
        raise ValueError(f"observation matrix must be non-empty, got shape {X.shape}")
    if dim is not None and d != dim:
        raise ValueError(f"expected dimension {dim}, got {d}")
    if not np.isfinite(X).all():
        raise ValueError("observations contain NaN or Inf")
    return X


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice: plain dot product or Gaussian with bandwidth > 0."""

    kind: str
    bandwidth: float | None = None

    def __post_init__(self):
        if self.kind not in ("linear", "gaussian"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "gaussian":
            s = self.bandwidth
            if s is None or not np.isfinite(s) or s <= 0:
                raise ValueError("gaussian kernel requires a finite bandwidth > 0")
        elif self.bandwidth is not None:
            raise ValueError("linear kernel takes no bandwidth")

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls("linear")

    @classmethod
    def gaussian(cls, bandwidth: float) -> "KernelSpec":
        return cls("gaussian", float(bandwidth))


@dataclass(frozen=True)
class SvddParams:
    """Outlier fraction f and the box penalty C = 1/(n*f) actually used."""

    f: float
    c: float

    def __post_init__(self):
        if not (0.0 < self.f <= 1.0):
            raise ValueError(f"outlier fraction must lie in (0, 1], got {self.f}")
        if not np.isfinite(self.c) or self.c <= 0:
            raise ValueError(f"penalty must be a positive real, got {self.c}")


def kernel_eval(x, y, kernel: KernelSpec) -> float:
    """Evaluate K(x, y) for two vectors of equal dimension."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("kernel arguments must be finite")
    if kernel.kind == "linear":
        return float(x @ y)
    d2 = float(np.sum((x - y) ** 2))
    return float(np.exp(-d2 / (2.0 * kernel.bandwidth**2)))


def kernel_matrix(X, kernel: KernelSpec, Y=None) -> np.ndarray:
    """Gram matrix K(X, Y); Y defaults to X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    if kernel.kind == "linear":
        return X @ Y.T
    d2 = cdist(X, Y, "sqeuclidean")
    return np.exp(-d2 / (2.0 * kernel.bandwidth**2))


def median_heuristic_bandwidth(X, max_points: int = 1000, seed: int = 0) -> float:
    """Median pairwise distance over a seeded subsample of at most `max_points` rows.

    A deterministic stand-in for data-driven bandwidth selection; the
    result is always overridable by passing an explicit bandwidth.
    """
    X = validate_observations(X)
    if X.shape[0] > max_points:
        rng = np.random.default_rng(seed)
        idx = rng.choice(X.shape[0], size=max_points, replace=False)
        X = X[np.sort(idx)]
    if X.shape[0] < 2:
        return 1.0
    d = cdist(X, X)
    med = float(np.median(d[np.triu_indices(X.shape[0], k=1)]))
    return med if med > 0 else 1.0


def dual_objective(alphas, K) -> float:
    """sum_i a_i K_ii - sum_ij a_i a_j K_ij for a given Gram matrix."""
    alphas = np.asarray(alphas, dtype=float)
    return float(alphas @ np.diag(K) - alphas @ K @ alphas)


def solve_dual(
    data,
    kernel: KernelSpec,
    C: float,
    tol: float = 1e-6,
    max_iter: int | None = None,
) -> np.ndarray:
    """Solve the box-constrained dual on `data`, returning the coefficients.

    Pairwise analytic coordinate ascent: each step picks the maximally
    KKT-violating pair (largest gradient among coefficients free to grow,
    smallest among those free to shrink), moves the two coefficients in
    closed form under their constant sum, and clips to [0, C].  Stops
    when the largest violation falls below `tol`.

    Raises ConvergenceError (carrying the best iterate and residual) if
    the iteration cap, default 100*p^2, is hit first.
    """
    X = validate_observations(data)
    p = X.shape[0]
    if not np.isfinite(C) or C <= 0:
        raise ValueError(f"penalty must be a positive real, got {C}")
    if C * p < 1.0 - 1e-9:
        raise ValueError(
            f"infeasible penalty C={C}: need C >= 1/p = {1.0 / p} so that sum(alpha)=1 fits the box"
        )
    if tol <= 0:
        raise ValueError("tolerance must be positive")

    alphas = np.full(p, 1.0 / p)
    if p == 1:
        return np.array([1.0])

    K = kernel_matrix(X, kernel)
    diag = np.diag(K).copy()
    # Gradient of the dual objective: g_i = K_ii - 2 (K alpha)_i.
    g = diag - 2.0 * (K @ alphas)
    cap = 100 * p * p if max_iter is None else max_iter

    violation = np.inf
    for it in range(cap):
        if it % 512 == 511:
            g = diag - 2.0 * (K @ alphas)  # undo incremental-update drift
        can_up = alphas < C
        can_down = alphas > 0.0
        if not can_up.any() or not can_down.any():
            return alphas
        gi = np.where(can_up, g, -np.inf)
        gj = np.where(can_down, g, np.inf)
        i = int(np.argmax(gi))
        j = int(np.argmin(gj))
        violation = float(g[i] - g[j])
        if violation < tol:
            return alphas

        eta = diag[i] + diag[j] - 2.0 * K[i, j]
        room = min(C - alphas[i], alphas[j])
        if eta <= 1e-14:
            delta = room
        else:
            delta = min(violation / (2.0 * eta), room)
        # Land exactly on the box faces so the masks above stay sharp.
        if delta == C - alphas[i]:
            new_j = alphas[j] - delta
            alphas[i] = C
            alphas[j] = new_j
        elif delta == alphas[j]:
            alphas[i] = alphas[i] + delta
            alphas[j] = 0.0
        else:
            alphas[i] += delta
            alphas[j] -= delta
        g -= (2.0 * delta) * (K[:, i] - K[:, j])

    raise ConvergenceError(
        f"dual solver did not reach tol={tol} within {cap} iterations "
        f"(residual {violation:.3e})",
        alphas=alphas,
        residual=violation,
    )


def _boundary_mask(alphas: np.ndarray, C: float) -> np.ndarray:
    # strictly inside the box: genuine support, but not pinned at the bound
    return (alphas > 1e-8 * C) & (alphas < C * (1.0 - _BOUND_REL_TOL))


def compute_threshold(support_vectors, alphas, C: float, kernel: KernelSpec) -> float:
    """Squared threshold radius from the retained support set.

    Averages K(x_k,x_k) - 2 sum_i a_i K(x_i,x_k) + sum_ij a_i a_j K(x_i,x_j)
    over the boundary support vectors (a_k strictly below C); averaging is
    identical to a single evaluation in exact arithmetic but damps solver
    noise.  With no boundary vector the maximum over all support vectors
    is used instead.  Tiny negative float noise is clamped to zero.
    """
    sv = validate_observations(support_vectors)
    alphas = np.asarray(alphas, dtype=float)
    K = kernel_matrix(sv, kernel)
    W = float(alphas @ K @ alphas)
    vals = np.diag(K) - 2.0 * (K @ alphas) + W
    boundary = _boundary_mask(alphas, C)
    r2 = float(np.mean(vals[boundary])) if boundary.any() else float(np.max(vals))
    return max(r2, 0.0)


@dataclass(frozen=True)
class SvddModel:
    """Trained data description; immutable and safe to share across threads.

    `offset` is the precomputed quadratic term sum_ij a_i a_j K(x_i, x_j)
    and `center` the input-space combination sum_i a_i x_i.  When no
    support vector sat strictly inside the box, `threshold_fallback`
    marks that the threshold came from the max-over-support fallback.
    """

    support_vectors: np.ndarray
    alphas: np.ndarray
    r_squared: float
    offset: float
    center: np.ndarray
    kernel: KernelSpec
    params: SvddParams
    threshold_fallback: bool = False

    def __post_init__(self):
        for arr in (self.support_vectors, self.alphas, self.center):
            arr.flags.writeable = False

    @property
    def dim(self) -> int:
        return self.support_vectors.shape[1]

    @property
    def n_sv(self) -> int:
        return self.support_vectors.shape[0]


def _train_at_penalty(
    X: np.ndarray,
    kernel: KernelSpec,
    C: float,
    f: float,
    tol: float,
    max_iter: int | None,
) -> SvddModel:
    alphas = solve_dual(X, kernel, C, tol=tol, max_iter=max_iter)
    keep = alphas > 1e-8 * C  # scale-free cut between numerical zero and support
    sv = np.ascontiguousarray(X[keep])
    a = alphas[keep]
    a = a / a.sum()
    K = kernel_matrix(sv, kernel)
    W = float(a @ K @ a)
    vals = np.diag(K) - 2.0 * (K @ a) + W
    boundary = _boundary_mask(a, C)
    fallback = not bool(boundary.any())
    r2 = float(np.max(vals)) if fallback else float(np.mean(vals[boundary]))
    return SvddModel(
        support_vectors=sv,
        alphas=a,
        r_squared=max(r2, 0.0),
        offset=W,
        center=a @ sv,
        kernel=kernel,
        params=SvddParams(f=f, c=C),
        threshold_fallback=fallback,
    )


def train_full(
    data,
    kernel: KernelSpec,
    f: float,
    tol: float = 1e-6,
    max_iter: int | None = None,
) -> SvddModel:
    """Train on all rows of `data` with penalty C = 1/(p*f)."""
    X = validate_observations(data)
    if not (0.0 < f <= 1.0):
        raise ValueError(f"outlier fraction must lie in (0, 1], got {f}")
    C = 1.0 / (X.shape[0] * f)
    return _train_at_penalty(X, kernel, C, f, tol, max_iter)


def score(model: SvddModel, z) -> float | np.ndarray:
    """Squared feature-space distance of z from the model center.

    Accepts a single d-vector (returns a float) or a q x d matrix
    (returns a length-q array).  Values are clamped at zero from below;
    an observation is an outlier when its score exceeds `r_squared`.
    """
    z_arr = np.asarray(z, dtype=float)
    single = z_arr.ndim == 1
    Z = validate_observations(z_arr, dim=model.dim)
    cross = kernel_matrix(Z, model.kernel, model.support_vectors) @ model.alphas
    if model.kernel.kind == "linear":
        self_k = np.einsum("ij,ij->i", Z, Z)
    else:
        self_k = np.ones(Z.shape[0])
    dist2 = np.maximum(self_k - 2.0 * cross + model.offset, 0.0)
    return float(dist2[0]) if single else dist2


def classify(model: SvddModel, z) -> str | list[str]:
    """Position of z relative to the description: inside, boundary or outside.

    Exact equality with the threshold is measure-zero in floats, so a
    band of max(1e-9, 1e-6 * R^2) around R^2 counts as the boundary.
    """
    dist2 = score(model, z)
    band = max(1e-9, 1e-6 * model.r_squared)

    def _one(v: float) -> str:
        if v > model.r_squared + band:
            return "outside"
        if v < model.r_squared - band:
            return "inside"
        return "boundary"

    if isinstance(dist2, float):
        return _one(dist2)
    return [_one(float(v)) for v in dist2]


def position_report(model: SvddModel, data, tol: float = 1e-6) -> dict:
    """Consistency of coefficient positions for the model's own training data.

    Returns the worst absolute deviation of boundary-support scores from
    R^2 and the largest coefficient carried by a strictly interior
    training point (interior meaning dist^2 < R^2 - 10*tol).  Both should
    be at solver-noise scale for a converged model.
    """
    X = validate_observations(data, dim=model.dim)
    C = model.params.c
    boundary = _boundary_mask(model.alphas, C)
    sv_scores = np.atleast_1d(score(model, model.support_vectors))
    max_boundary_dev = (
        float(np.max(np.abs(sv_scores[boundary] - model.r_squared)))
        if boundary.any()
        else 0.0
    )
    # Map rows of X onto retained support vectors to recover their alphas.
    dist2 = np.atleast_1d(score(model, X))
    interior = dist2 < model.r_squared - 10.0 * tol
    max_interior_alpha = 0.0
    if interior.any():
        eq = cdist(X[interior], model.support_vectors, "sqeuclidean") < 1e-24
        if eq.any():
            max_interior_alpha = float(np.max(eq * model.alphas[None, :]))
    return {
        "max_boundary_score_dev": max_boundary_dev,
        "max_interior_alpha": max_interior_alpha,
        "n_boundary": int(boundary.sum()),
        "n_interior": int(interior.sum()),
    }
