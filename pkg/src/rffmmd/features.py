"""Random Fourier feature maps and batched feature-matrix construction."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .core import DimensionMismatch, SampleSet
from .kernels import FrequencyDraw


@dataclass(frozen=True)
class FeatureMatrix:
    """Feature rows phi(x_i) stacked into an (n, 2R) matrix.

    Column layout interleaves per frequency: [cos_1, sin_1, cos_2, sin_2, ...].
    ``scale`` = sqrt(kappa0 / R) is already folded into the entries, so every
    row has squared norm kappa0 and plain Euclidean inner products of rows
    estimate kernel values.
    """

    phi: np.ndarray
    scale: float

    @property
    def n(self) -> int:
        return self.phi.shape[0]

    @property
    def width(self) -> int:
        return self.phi.shape[1]

    @property
    def R(self) -> int:
        return self.phi.shape[1] // 2


def feature_map(x: np.ndarray, freqs: FrequencyDraw, kappa0: float) -> np.ndarray:
    """Map one point to its length-2R random Fourier feature vector."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.shape[0] != freqs.d:
        raise DimensionMismatch(f"point has length {x.shape[0]}, frequencies have d={freqs.d}")
    return feature_matrix(SampleSet(x[None, :]), freqs, kappa0).phi[0]


def feature_matrix(s: SampleSet, freqs: FrequencyDraw, kappa0: float) -> FeatureMatrix:
    """Featurize every row of a sample; costs O(n R d)."""
    if s.d != freqs.d:
        raise DimensionMismatch(f"samples have d={s.d}, frequencies have d={freqs.d}")
    proj = s.data @ freqs.omegas.T
    scale = float(np.sqrt(kappa0 / freqs.R))
    phi = np.empty((s.n, 2 * freqs.R), dtype=np.float64)
    np.cos(proj, out=phi[:, 0::2])
    np.sin(proj, out=phi[:, 1::2])
    phi *= scale
    return FeatureMatrix(phi, scale)


@numba.njit(cache=True)
def _feature_sums(data, omegas):  # pragma: no cover - jitted
    n, d = data.shape
    R = omegas.shape[0]
    out = np.zeros(2 * R)
    for i in range(n):
        for r in range(R):
            p = 0.0
            for k in range(d):
                p += data[i, k] * omegas[r, k]
            out[2 * r] += np.cos(p)
            out[2 * r + 1] += np.sin(p)
    return out


def feature_mean(s: SampleSet, freqs: FrequencyDraw, kappa0: float) -> np.ndarray:
    """Mean feature row, accumulated without materializing the matrix.

    Same value as ``feature_matrix(...).phi.mean(axis=0)`` up to roundoff,
    but with O(R) memory instead of O(n R); preferred when only one
    statistic is needed rather than a permutation batch.
    """
    if s.d != freqs.d:
        raise DimensionMismatch(f"samples have d={s.d}, frequencies have d={freqs.d}")
    sums = _feature_sums(s.data, freqs.omegas)
    return sums * (np.sqrt(kappa0 / freqs.R) / s.n)
