"""Squared-MMD estimators: quadratic-time, random-feature, and sub-quadratic."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .core import (
    BadBlockSize,
    DimensionMismatch,
    FeatureWidthMismatch,
    OddSampleSize,
    RngStream,
    SampleSet,
    TooFewSamples,
    UnequalSampleSizes,
)
from .features import FeatureMatrix, feature_mean
from .kernels import FrequencyDraw, KernelSpec, gram_unit

_VALID_TAGS = ("QuadB", "QuadU", "RffB", "RffU", "Linear", "Block", "Incomplete")


@dataclass(frozen=True)
class EstimatorId:
    """Identifies one estimator from the menu plus its required parameters.

    R is required for RffB/RffU, b for Block, Rprime for Incomplete; other
    tags take no parameters.
    """

    tag: str
    R: int | None = None
    b: int | None = None
    Rprime: int | None = None

    def __post_init__(self):
        if self.tag not in _VALID_TAGS:
            raise ValueError(f"unknown estimator tag {self.tag!r}")
        needs = {"RffB": "R", "RffU": "R", "Block": "b", "Incomplete": "Rprime"}
        for name in ("R", "b", "Rprime"):
            val = getattr(self, name)
            if needs.get(self.tag) == name:
                if val is None or val < 1:
                    raise ValueError(f"{self.tag} requires {name} >= 1")
            elif val is not None:
                raise ValueError(f"{self.tag} does not take parameter {name}")

    @property
    def is_rff(self) -> bool:
        return self.tag in ("RffB", "RffU")

    def label(self) -> str:
        if self.tag in ("RffB", "RffU"):
            return f"{self.tag}(R={self.R})"
        if self.tag == "Block":
            return f"Block(b={self.b})"
        if self.tag == "Incomplete":
            return f"Incomplete(Rp={self.Rprime})"
        return self.tag


def _check_dims(x: SampleSet, y: SampleSet):
    if x.d != y.d:
        raise DimensionMismatch(f"x has d={x.d} but y has d={y.d}")


@numba.njit(cache=True)
def _unit_sum_pairs(a, b, inv_lam2):  # pragma: no cover - jitted
    na, d = a.shape
    nb = b.shape[0]
    total = 0.0
    for i in range(na):
        # two-level accumulation bounds drift on multi-million-term sums
        row = 0.0
        for j in range(nb):
            acc = 0.0
            for k in range(d):
                u = a[i, k] - b[j, k]
                acc += u * u * inv_lam2[k]
            row += np.exp(-acc)
        total += row
    return total


def _unit_sums(x: SampleSet, y: SampleSet, spec: KernelSpec):
    """Full-block sums of the unit-normalized kernel.

    Fused loops keep memory O(N d) and the per-pair cost flat across sample
    sizes, which the timing bench relies on.
    """
    inv = 1.0 / spec.lam**2
    sxx = _unit_sum_pairs(x.data, x.data, inv)
    syy = _unit_sum_pairs(y.data, y.data, inv)
    sxy = _unit_sum_pairs(x.data, y.data, inv)
    return sxx, syy, sxy


def mmd2_biased(x: SampleSet, y: SampleSet, spec: KernelSpec) -> float:
    """Plug-in squared-MMD estimate (all pairs, diagonals included).

    Nonnegative by construction; costs Theta(N^2 d).
    """
    _check_dims(x, y)
    sxx, syy, sxy = _unit_sums(x, y, spec)
    raw = sxx / x.n**2 + syy / y.n**2 - 2.0 * sxy / (x.n * y.n)
    return spec.kappa0 * max(raw, 0.0)


def mmd2_unbiased(x: SampleSet, y: SampleSet, spec: KernelSpec) -> float:
    """Unbiased squared-MMD estimate (within-sample diagonals excluded).

    May be negative; costs Theta(N^2 d).
    """
    _check_dims(x, y)
    if x.n < 2 or y.n < 2:
        raise TooFewSamples(f"need n1, n2 >= 2, got ({x.n}, {y.n})")
    sxx, syy, sxy = _unit_sums(x, y, spec)
    raw = (
        (sxx - x.n) / (x.n * (x.n - 1))
        + (syy - y.n) / (y.n * (y.n - 1))
        - 2.0 * sxy / (x.n * y.n)
    )
    return spec.kappa0 * raw


def _check_widths(fx: FeatureMatrix, fy: FeatureMatrix):
    if fx.width != fy.width:
        raise FeatureWidthMismatch(f"feature widths differ: {fx.width} vs {fy.width}")


def rff_mmd2_biased(fx: FeatureMatrix, fy: FeatureMatrix) -> float:
    """Squared distance between the two mean feature rows; Theta(N R)."""
    _check_widths(fx, fy)
    diff = fx.phi.mean(axis=0) - fy.phi.mean(axis=0)
    return float(diff @ diff)


def _gap_from_means(mx: np.ndarray, my: np.ndarray, n1: int, n2: int, kappa0: float) -> float:
    # Row norms are kappa0 up to roundoff, so each term is clamped at 0 to
    # keep the gap inside its exact algebraic range.
    gx = max(kappa0 - float(mx @ mx), 0.0)
    gy = max(kappa0 - float(my @ my), 0.0)
    return gx / (n1 - 1) + gy / (n2 - 1)


def mean_embedding_gap(fx: FeatureMatrix, fy: FeatureMatrix, kappa0: float) -> float:
    """The exact gap between the biased and unbiased feature statistics.

    Equals kappa0*(1/(n1-1) + 1/(n2-1)) minus the per-sample mean-row norms
    weighted the same way; always in [0, kappa0*(1/(n1-1) + 1/(n2-1))].
    """
    _check_widths(fx, fy)
    if fx.n < 2 or fy.n < 2:
        raise TooFewSamples(f"need n1, n2 >= 2, got ({fx.n}, {fy.n})")
    return _gap_from_means(fx.phi.mean(axis=0), fy.phi.mean(axis=0), fx.n, fy.n, kappa0)


def rff_mmd2_unbiased(fx: FeatureMatrix, fy: FeatureMatrix, kappa0: float) -> float:
    """Unbiased feature statistic in Theta(N R) time.

    Computed as the biased statistic minus the exact mean-embedding gap,
    which reproduces the diagonal-excluded triple sum over feature inner
    products without forming it.
    """
    return rff_mmd2_biased(fx, fy) - mean_embedding_gap(fx, fy, kappa0)


def rff_mmd2_streamed(
    x: SampleSet,
    y: SampleSet,
    freqs: FrequencyDraw,
    kappa0: float,
    unbiased: bool = False,
) -> float:
    """Feature statistic computed from accumulated feature means.

    Identical value to the matrix route up to roundoff, but featurization
    never materializes the n x 2R matrix, so a single evaluation runs in
    O(N R d) time with O(R) extra memory.
    """
    _check_dims(x, y)
    if unbiased and (x.n < 2 or y.n < 2):
        raise TooFewSamples(f"need n1, n2 >= 2, got ({x.n}, {y.n})")
    mx = feature_mean(x, freqs, kappa0)
    my = feature_mean(y, freqs, kappa0)
    diff = mx - my
    v = float(diff @ diff)
    if not unbiased:
        return v
    return v - _gap_from_means(mx, my, x.n, y.n, kappa0)


def mmd2_linear(x: SampleSet, y: SampleSet, spec: KernelSpec) -> float:
    """Linear-time estimate over floor(n/2) disjoint quadruples.

    Quadruple i combines (x_{2i}, x_{2i+1}, y_{2i}, y_{2i+1}) through
    h = k(x,x') + k(y,y') - k(x,y') - k(x',y); costs Theta(n d).
    """
    _check_dims(x, y)
    if x.n != y.n:
        raise UnequalSampleSizes(f"need n1 == n2, got ({x.n}, {y.n})")
    if x.n % 2 != 0:
        raise OddSampleSize(f"need an even sample size, got {x.n}")
    a = x.data[0::2]
    a2 = x.data[1::2]
    c = y.data[0::2]
    c2 = y.data[1::2]
    h = (
        _pair_kernel(spec, a, a2)
        + _pair_kernel(spec, c, c2)
        - _pair_kernel(spec, a, c2)
        - _pair_kernel(spec, a2, c)
    )
    return spec.kappa0 * float(h.mean())


def _pair_kernel(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Unit kernel of matched rows a_i vs b_i."""
    u = (a - b) / spec.lam
    return np.exp(-(u * u).sum(axis=1))


def mmd2_block(x: SampleSet, y: SampleSet, spec: KernelSpec, b: int) -> float:
    """Average of per-block paired U-statistics over consecutive blocks.

    The indices 0..n-1 are cut into floor(n/b) consecutive blocks of size b
    (a short remainder is dropped). Within a block the statistic averages
    h = k(x_i,x_j) + k(y_i,y_j) - k(x_i,y_j) - k(x_j,y_i) over ordered pairs
    i != j, so b == 2 reproduces the linear-time estimate on the same
    pairing. Costs Theta(n b d).
    """
    _check_dims(x, y)
    if x.n != y.n:
        raise UnequalSampleSizes(f"need n1 == n2, got ({x.n}, {y.n})")
    if not (2 <= b <= x.n):
        raise BadBlockSize(f"need 2 <= b <= n, got b={b}, n={x.n}")
    nb = x.n // b
    xb = x.data[: nb * b].reshape(nb, b, -1)
    yb = y.data[: nb * b].reshape(nb, b, -1)
    vals = np.empty(nb)
    for i in range(nb):
        kxx = gram_unit(spec, xb[i], xb[i])
        kyy = gram_unit(spec, yb[i], yb[i])
        kxy = gram_unit(spec, xb[i], yb[i])
        s = (kxx.sum() - b) + (kyy.sum() - b) - 2.0 * (kxy.sum() - np.trace(kxy))
        vals[i] = s / (b * (b - 1))
    return spec.kappa0 * float(vals.mean())


@dataclass(frozen=True)
class IncompleteDesign:
    """Sampled quadruples (i, i2, j, j2) with i != i2 and j != j2."""

    i: np.ndarray
    i2: np.ndarray
    j: np.ndarray
    j2: np.ndarray

    @property
    def size(self) -> int:
        return self.i.shape[0]


def sample_incomplete_design(n: int, Rprime: int, rng: RngStream) -> IncompleteDesign:
    """Draw Rprime rounds of n quadruples each.

    Quadruples are uniform over {(i, i2, j, j2): i != i2, j != j2}, distinct
    within a round; repeats across rounds are allowed.
    """
    if n < 2:
        raise TooFewSamples(f"need n >= 2, got {n}")
    if Rprime < 1:
        raise ValueError(f"Rprime must be >= 1, got {Rprime}")
    gen = rng.generator()
    rounds = []
    for _ in range(Rprime):
        rounds.append(_draw_round(n, gen))
    cols = [np.concatenate([r[k] for r in rounds]) for k in range(4)]
    return IncompleteDesign(*cols)


def _draw_round(n: int, gen: np.random.Generator):
    """n distinct quadruples; resample any within-round duplicates."""
    m = n
    i = gen.integers(0, n, size=m)
    i2 = (i + gen.integers(1, n, size=m)) % n
    j = gen.integers(0, n, size=m)
    j2 = (j + gen.integers(1, n, size=m)) % n
    for _ in range(64):
        keys = ((i * n + i2) * n + j) * n + j2
        _, first = np.unique(keys, return_index=True)
        if first.shape[0] == m:
            break
        dup = np.setdiff1d(np.arange(m), first, assume_unique=False)
        i[dup] = gen.integers(0, n, size=dup.shape[0])
        i2[dup] = (i[dup] + gen.integers(1, n, size=dup.shape[0])) % n
        j[dup] = gen.integers(0, n, size=dup.shape[0])
        j2[dup] = (j[dup] + gen.integers(1, n, size=dup.shape[0])) % n
    return i, i2, j, j2


def mmd2_incomplete_from_design(
    x: SampleSet, y: SampleSet, spec: KernelSpec, design: IncompleteDesign
) -> float:
    """Average of h over an explicit quadruple design."""
    _check_dims(x, y)
    h = (
        _pair_kernel(spec, x.data[design.i], x.data[design.i2])
        + _pair_kernel(spec, y.data[design.j], y.data[design.j2])
        - _pair_kernel(spec, x.data[design.i], y.data[design.j2])
        - _pair_kernel(spec, x.data[design.i2], y.data[design.j])
    )
    return spec.kappa0 * float(h.mean())


def mmd2_incomplete(
    x: SampleSet, y: SampleSet, spec: KernelSpec, Rprime: int, rng: RngStream
) -> float:
    """Incomplete-design estimate from Rprime * n random quadruples.

    Unbiased for the squared MMD; costs Theta(Rprime n d).
    """
    if x.n != y.n:
        raise UnequalSampleSizes(f"need n1 == n2, got ({x.n}, {y.n})")
    design = sample_incomplete_design(x.n, Rprime, rng)
    return mmd2_incomplete_from_design(x, y, spec, design)
