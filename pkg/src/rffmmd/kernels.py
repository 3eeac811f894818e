"""Product Gaussian kernel, its spectral sampler, and the median heuristic."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .core import (
    DegeneratePooledSample,
    DimensionMismatch,
    PooledSample,
    RngStream,
    derive_stream,
)

DEFAULT_MEDIAN_CAP = 1000


@dataclass(frozen=True)
class KernelSpec:
    """Product Gaussian kernel with per-coordinate bandwidths.

    k(x, y) = prod_i (sqrt(pi) * lam_i)^-1 * exp(-(x_i - y_i)^2 / lam_i^2)

    ``kappa0`` is the kernel evaluated at x == y; all kernel values lie in
    (0, kappa0]. In high dimension kappa0 can underflow to 0.0 in float64;
    computations that only need relative comparisons should work with the
    unit-normalized kernel (see :func:`gram_unit`) and rescale at the end.
    """

    lam: np.ndarray
    kappa0: float = field(init=False)

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lam, dtype=np.float64))
        if lam.ndim != 1:
            raise DimensionMismatch("bandwidth must be a vector")
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
            raise ValueError("bandwidths must be finite and strictly positive")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "kappa0", float(np.prod(1.0 / (np.sqrt(np.pi) * lam))))

    @property
    def d(self) -> int:
        return self.lam.shape[0]


def eval_kernel(spec: KernelSpec, x: np.ndarray, y: np.ndarray) -> float:
    """Evaluate the kernel at a single pair of points."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if x.shape != y.shape or x.shape[0] != spec.d:
        raise DimensionMismatch(
            f"points must both have length d={spec.d}, got {x.shape} and {y.shape}"
        )
    u = (x - y) / spec.lam
    return spec.kappa0 * float(np.exp(-np.dot(u, u)))


def gram_unit(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Unit-normalized kernel matrix exp(-sum_i (a_i-b_i)^2/lam_i^2).

    Multiply by ``spec.kappa0`` to recover actual kernel values.
    """
    if a.shape[1] != spec.d or b.shape[1] != spec.d:
        raise DimensionMismatch(
            f"rows must have d={spec.d}, got {a.shape[1]} and {b.shape[1]}"
        )
    sq = cdist(a / spec.lam, b / spec.lam, "sqeuclidean")
    return np.exp(-sq, out=sq)


def gram(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kernel matrix k(a_i, b_j)."""
    return spec.kappa0 * gram_unit(spec, a, b)


def median_heuristic(
    z: PooledSample,
    cap: int = DEFAULT_MEDIAN_CAP,
    rng: RngStream | None = None,
) -> KernelSpec:
    """Bandwidth from the median pairwise distance of the pooled sample.

    All coordinates share the bandwidth lam_i = m, where m is the lower
    median (index (M-1)//2 of the sorted list) of the Euclidean distances
    between all distinct row pairs. When N > cap, the rows are subsampled
    to ``cap`` without replacement first; the subsample stream defaults to
    a fixed internal one so the rule stays deterministic.

    Raises
    ------
    DegeneratePooledSample
        If the median distance is zero.
    """
    if cap < 2:
        raise ValueError(f"cap must be >= 2, got {cap}")
    rows = z.z.data
    if rows.shape[0] > cap:
        stream = rng if rng is not None else derive_stream(0, "median-heuristic-subsample")
        idx = stream.generator().choice(rows.shape[0], size=cap, replace=False)
        rows = rows[np.sort(idx)]
    sq = cdist(rows, rows, "sqeuclidean")
    iu = np.triu_indices(rows.shape[0], k=1)
    dists = np.sqrt(sq[iu])
    dists.sort()
    m = float(dists[(dists.shape[0] - 1) // 2])
    if m <= 0.0:
        raise DegeneratePooledSample("median pairwise distance is zero")
    return KernelSpec(np.full(z.d, m))


@dataclass(frozen=True)
class FrequencyDraw:
    """R spectral frequencies, one per row, plus the stream that drew them."""

    omegas: np.ndarray
    provenance: RngStream | None = None

    def __post_init__(self):
        om = np.asarray(self.omegas, dtype=np.float64)
        if om.ndim == 1:
            om = om[:, None]
        if om.ndim != 2 or om.shape[0] < 1:
            raise ValueError("omegas must be a non-empty (R, d) matrix")
        if not np.all(np.isfinite(om)):
            raise ValueError("omegas must be finite")
        object.__setattr__(self, "omegas", om)

    @property
    def R(self) -> int:
        return self.omegas.shape[0]

    @property
    def d(self) -> int:
        return self.omegas.shape[1]


def sample_frequencies(spec: KernelSpec, R: int, rng: RngStream) -> FrequencyDraw:
    """Draw R iid frequencies from the kernel's spectral probability measure.

    For the product Gaussian kernel the normalized spectral measure factors
    into independent Normal(0, 2 / lam_i^2) coordinates, so that
    E[cos(w . u)] = exp(-sum_i u_i^2 / lam_i^2) for every separation u.
    """
    if R < 1:
        raise ValueError(f"R must be >= 1, got {R}")
    sigma = np.sqrt(2.0) / spec.lam
    omegas = rng.generator().standard_normal((R, spec.d)) * sigma
    return FrequencyDraw(omegas, provenance=rng)
