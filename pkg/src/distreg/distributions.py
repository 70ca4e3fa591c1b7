"""Distribution input types and squared 2-Wasserstein distances.

Three input families are supported: 1-D Gaussians, 2-D Gaussians with a full
SPD covariance, and discrete curves normalised to unit mass (treated as
equal-weight atom sets through their sorted values). Distances are closed
forms wherever one exists; a factorial assignment oracle is included for
validating the sorted-quantile formula on small atom sets.

All distance functions return the *squared* distance, which is what the
kernels consume directly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtr, ndtri

__all__ = [
    "Gaussian1D",
    "Gaussian2D",
    "Empirical1D",
    "Distribution",
    "w2sq_gaussian1d",
    "w2sq_empirical",
    "w2sq_atoms",
    "w2sq_oracle",
    "w2sq_gaussian1d_empirical",
    "sqrtm_2x2",
    "w2sq_gaussian2d",
    "sliced_w2sq",
    "sliced_w2sq_integrated",
    "SLICE_GRID_SIZE",
]

# Direction grid for the sliced distance: theta = (cos(c*pi/50), sin(c*pi/50)),
# c in {0, ..., 50}.
SLICE_GRID_SIZE = 51

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Gaussian1D:
    """Gaussian on the line with mean ``m`` and standard deviation ``sigma``."""

    m: float
    sigma: float

    def __post_init__(self):
        if not math.isfinite(self.m):
            raise ValueError(f"mean must be finite, got {self.m!r}")
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma!r}")


@dataclass(frozen=True, eq=False)
class Gaussian2D:
    """Planar Gaussian with mean vector ``mean`` and 2x2 SPD covariance ``cov``."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(2)
        cov = np.array(self.cov, dtype=float)
        if cov.shape != (2, 2):
            raise ValueError(f"covariance must be 2x2, got shape {cov.shape}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("mean and covariance must be finite")
        scale = max(1.0, float(np.abs(cov).max()))
        if abs(cov[0, 1] - cov[1, 0]) > 1e-12 * scale:
            raise ValueError("covariance must be symmetric (off-diagonals differ)")
        lo, _ = _eigvals_2x2_sym(cov)
        if lo <= 0.0:
            raise ValueError(
                f"covariance must be positive definite (min eigenvalue {lo:g})"
            )
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)


@dataclass(frozen=True, eq=False)
class Empirical1D:
    """Discrete curve normalised to unit mass.

    The ``M`` nonnegative weights sum to one; sorted ascending they play the
    role of the quantile values of the distribution, i.e. the distribution is
    the set of M equally weighted atoms located at the weight values.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a nonempty 1-D sequence")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        total = float(np.sum(w))
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1 within 1e-9, got {total!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def M(self) -> int:
        return self.weights.size


Distribution = Gaussian1D | Gaussian2D | Empirical1D


def _eigvals_2x2_sym(A: np.ndarray) -> tuple[float, float]:
    """Analytic eigenvalues (ascending) of a symmetric 2x2 matrix."""
    a = float(A[0, 0])
    b = 0.5 * (float(A[0, 1]) + float(A[1, 0]))
    c = float(A[1, 1])
    half_trace = 0.5 * (a + c)
    disc = math.hypot(0.5 * (a - c), b)
    return half_trace - disc, half_trace + disc


def w2sq_gaussian1d(a: Gaussian1D, b: Gaussian1D) -> float:
    """Squared 2-Wasserstein distance between two 1-D Gaussians."""
    return (a.m - b.m) ** 2 + (a.sigma - b.sigma) ** 2


def w2sq_atoms(x, y) -> float:
    """Squared 2-Wasserstein distance between equal-size sets of equally
    weighted atoms: sort both ascending and average the squared gaps."""
    xs = np.sort(np.asarray(x, dtype=float), kind="stable")
    ys = np.sort(np.asarray(y, dtype=float), kind="stable")
    if xs.ndim != 1 or xs.shape != ys.shape:
        raise ValueError(
            f"atom sets must be 1-D and of equal length, got {np.shape(x)} vs {np.shape(y)}"
        )
    return float(np.mean((xs - ys) ** 2))


def w2sq_empirical(a: Empirical1D, b: Empirical1D, *, scaled: bool = False) -> float:
    """Discretised squared distance between two normalised curves.

    Both weight vectors are sorted ascending and the squared gaps are summed.
    The default is the plain sum over bins; ``scaled=True`` divides by the bin
    count, giving the Riemann form (the squared distance between the two
    equal-weight atom sets).
    """
    if a.M != b.M:
        raise ValueError(f"bin counts differ: {a.M} vs {b.M}")
    xs = np.sort(a.weights, kind="stable")
    ys = np.sort(b.weights, kind="stable")
    total = float(np.sum((xs - ys) ** 2))
    return total / a.M if scaled else total


def w2sq_oracle(x, y) -> float:
    """Brute-force transport cost between equal-size atom sets.

    Minimum over all pairings of the mean squared displacement. Enumeration is
    factorial, so inputs are limited to 8 atoms.
    """
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape:
        raise ValueError(
            f"atom sets must be 1-D and of equal length, got {np.shape(x)} vs {np.shape(y)}"
        )
    n = xs.size
    if n > 8:
        raise ValueError(f"oracle enumerates all pairings; limited to n <= 8, got {n}")
    best = math.inf
    for perm in itertools.permutations(range(n)):
        cost = float(np.mean((xs - ys[list(perm)]) ** 2))
        if cost < best:
            best = cost
    return best


@lru_cache(maxsize=128)
def _atom_grid_coeffs(M: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-segment integrals of the standard normal quantile over the uniform
    M-grid of [0, 1]: (integral of z dt, integral of z^2 dt) per segment."""
    t = np.arange(M + 1) / M
    z = np.zeros(M + 1)
    z[1:-1] = ndtri(t[1:-1])
    pdf = np.zeros(M + 1)
    pdf[1:-1] = _INV_SQRT_2PI * np.exp(-0.5 * z[1:-1] ** 2)
    zpdf = z * pdf  # -> 0 at the endpoints, matching the t -> 0, 1 limits
    j1 = pdf[:-1] - pdf[1:]
    j2 = (1.0 / M) - (zpdf[1:] - zpdf[:-1])
    j1.setflags(write=False)
    j2.setflags(write=False)
    return j1, j2


def w2sq_gaussian1d_empirical(g: Gaussian1D, e: Empirical1D) -> float:
    """Exact squared 2-Wasserstein distance between a 1-D Gaussian and the
    equal-weight atom set of a normalised curve.

    Computed segment-by-segment from the L2 distance between the two quantile
    functions on [0, 1]; the normal quantile integrals have closed forms.
    """
    x = np.sort(e.weights, kind="stable")
    j1, j2 = _atom_grid_coeffs(e.M)
    d = g.m - x
    return float(
        np.sum(d * d) / e.M
        + 2.0 * g.sigma * np.sum(d * j1)
        + g.sigma**2 * np.sum(j2)
    )


def sqrtm_2x2(A) -> np.ndarray:
    """Principal square root of a symmetric positive-definite 2x2 matrix.

    Uses the analytic eigenvalues: with s = sqrt(lam1*lam2),
    sqrt(A) = (A + s*I) / sqrt(lam1 + lam2 + 2*s). An eigenvalue within 1e-12
    of zero gets a 1e-12 diagonal jitter; anything more negative is rejected.
    """
    B = np.array(A, dtype=float)
    if B.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {B.shape}")
    if not np.all(np.isfinite(B)):
        raise ValueError("matrix entries must be finite")
    scale = max(1.0, float(np.abs(B).max()))
    if abs(B[0, 1] - B[1, 0]) > 1e-12 * scale:
        raise ValueError("matrix must be symmetric (off-diagonals differ)")
    B = 0.5 * (B + B.T)
    lo, hi = _eigvals_2x2_sym(B)
    if lo <= 1e-12:
        if lo < -1e-12:
            raise ValueError(f"matrix is not positive definite (min eigenvalue {lo:g})")
        B = B + 1e-12 * np.eye(2)
        lo += 1e-12
        hi += 1e-12
    s = math.sqrt(lo * hi)
    denom = math.sqrt(hi + lo + 2.0 * s)
    return (B + s * np.eye(2)) / denom


def w2sq_gaussian2d(a: Gaussian2D, b: Gaussian2D) -> float:
    """Squared 2-Wasserstein distance between planar Gaussians: squared mean
    gap plus squared Frobenius gap of the covariance square roots."""
    sa = sqrtm_2x2(a.cov)
    sb = sqrtm_2x2(b.cov)
    dm = a.mean - b.mean
    ds = sa - sb
    return float(np.sum(dm * dm) + np.sum(ds * ds))


def slice_direction(c: int) -> tuple[float, float]:
    """Unit direction (cos(c*pi/50), sin(c*pi/50)) for grid index c in [0, 50]."""
    if not isinstance(c, (int, np.integer)) or isinstance(c, bool):
        raise ValueError(f"direction index must be an integer, got {c!r}")
    if not 0 <= c <= SLICE_GRID_SIZE - 1:
        raise ValueError(f"direction index must be in [0, {SLICE_GRID_SIZE - 1}], got {c}")
    angle = math.pi * c / (SLICE_GRID_SIZE - 1)
    return math.cos(angle), math.sin(angle)


def project_gaussian2d(g: Gaussian2D, c: int) -> Gaussian1D:
    """1-D Gaussian obtained by projecting onto the grid direction ``c``."""
    tx, ty = slice_direction(c)
    mean = tx * g.mean[0] + ty * g.mean[1]
    var = tx * tx * g.cov[0, 0] + 2.0 * tx * ty * g.cov[0, 1] + ty * ty * g.cov[1, 1]
    return Gaussian1D(mean, math.sqrt(var))


def sliced_w2sq(a: Gaussian2D, b: Gaussian2D, c: int) -> float:
    """Squared distance between the 1-D projections of two planar Gaussians
    along grid direction ``c``."""
    pa = project_gaussian2d(a, c)
    pb = project_gaussian2d(b, c)
    return w2sq_gaussian1d(pa, pb)


def sliced_w2sq_integrated(a: Gaussian2D, b: Gaussian2D) -> float:
    """Uniform average of the sliced squared distance over the 51-direction
    grid (quadrature approximation of the half-circle integral)."""
    return float(np.mean([sliced_w2sq(a, b, c) for c in range(SLICE_GRID_SIZE)]))
