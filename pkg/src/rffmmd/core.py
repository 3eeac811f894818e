"""Shared domain types, error hierarchy, and deterministic RNG streams."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


class DimensionMismatch(ValueError):
    """Inputs disagree on the number of coordinates."""


class TooFewSamples(ValueError):
    """An operation needs more observations than were supplied."""


class NonFiniteInput(ValueError):
    """Input data contains NaN or infinite entries."""


class DegeneratePooledSample(ValueError):
    """Pooled sample has zero median pairwise distance."""


class FeatureWidthMismatch(ValueError):
    """Feature matrices were built with different frequency counts."""


class UnequalSampleSizes(ValueError):
    """Estimator requires n1 == n2."""


class OddSampleSize(ValueError):
    """Estimator requires an even per-group sample size."""


class BadBlockSize(ValueError):
    """Block size outside [2, n]."""


class InvalidScenarioParams(ValueError):
    """Scenario parameters outside their supported ranges."""


class NegativeDensity(ValueError):
    """A constructed density is negative somewhere on its support."""


class RetryCapExceeded(RuntimeError):
    """Rejection sampler exhausted its retry budget."""


class BadMagic(ValueError):
    """IDX file does not start with the expected magic number."""


class CountMismatch(ValueError):
    """Image and label files report different record counts."""


class TruncatedFile(ValueError):
    """IDX file is shorter than its header promises."""


class EmptyLabelGroup(ValueError):
    """A required label group contains no images."""


class SingularMatrix(ValueError):
    """Covariance-plus-bandwidth matrix is not positive definite."""


class DegeneratePair(ValueError):
    """Gaussian pair has zero mean gap where a gap is required."""


class SpectralMassTooCentral(ValueError):
    """Bandwidth puts too much spectral mass on the low-frequency band."""


@dataclass(frozen=True)
class SampleSet:
    """An (n, d) float64 matrix of observations; rows are observations.

    A 1-D input of length n is treated as n univariate observations.
    All entries must be finite.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise DimensionMismatch(f"expected a 2-D sample matrix, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise TooFewSamples(f"sample matrix must be at least 1x1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteInput("sample matrix contains NaN or Inf")
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class PooledSample:
    """Two stacked samples: the first n1 rows came from X, the rest from Y."""

    z: SampleSet
    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 2 or self.n2 < 2:
            raise TooFewSamples(f"need n1, n2 >= 2, got ({self.n1}, {self.n2})")
        if self.n1 + self.n2 != self.z.n:
            raise DimensionMismatch(
                f"pooled size {self.z.n} != n1 + n2 = {self.n1 + self.n2}"
            )

    @property
    def N(self) -> int:
        return self.z.n

    @property
    def d(self) -> int:
        return self.z.d

    def x(self) -> SampleSet:
        return SampleSet(self.z.data[: self.n1])

    def y(self) -> SampleSet:
        return SampleSet(self.z.data[self.n1 :])


@dataclass(frozen=True)
class SignificanceLevel:
    alpha: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class RngStream:
    """A named, reproducible random stream.

    The (seed, stream_id) pair keys a counter-based Philox generator, so the
    mapping to a draw sequence is pure: the same pair always reproduces the
    same sequence, and distinct stream ids give independent-quality streams
    regardless of the order streams are consumed in.
    """

    seed: int
    stream_id: int

    def generator(self) -> np.random.Generator:
        key = ((self.stream_id & _MASK64) << 64) | (self.seed & _MASK64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, label: str | bytes) -> "RngStream":
        """Derive a sub-stream; same seed, label mixed into the stream id."""
        raw = label.encode() if isinstance(label, str) else bytes(label)
        payload = self.stream_id.to_bytes(8, "big") + b"/" + raw
        return RngStream(self.seed & _MASK64, _hash64(payload))


def _hash64(payload: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "big")


def derive_stream(seed: int, label: str | bytes) -> RngStream:
    """Map a (seed, label) pair to a reproducible stream.

    Distinct labels hash to distinct stream ids, so modules can carve
    independent streams out of one experiment seed without coordination.
    """
    raw = label.encode() if isinstance(label, str) else bytes(label)
    return RngStream(seed & _MASK64, _hash64(raw))


def validate_pair(x: SampleSet, y: SampleSet) -> PooledSample:
    """Check a two-sample pair and stack it into a pooled sample.

    X rows come first and row order is preserved.

    Raises
    ------
    DimensionMismatch
        If the two samples have different dimension.
    TooFewSamples
        If either sample has fewer than 2 rows.
    """
    if x.d != y.d:
        raise DimensionMismatch(f"x has d={x.d} but y has d={y.d}")
    if x.n < 2 or y.n < 2:
        raise TooFewSamples(f"need at least 2 rows per sample, got ({x.n}, {y.n})")
    pooled = SampleSet(np.vstack([x.data, y.data]))
    return PooledSample(pooled, x.n, y.n)
