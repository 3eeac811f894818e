"""Monte-Carlo permutation calibration for every estimator in the menu."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .core import (
    BadBlockSize,
    OddSampleSize,
    PooledSample,
    RngStream,
    SampleSet,
    SignificanceLevel,
    UnequalSampleSizes,
    validate_pair,
)
from .estimators import EstimatorId, sample_incomplete_design
from .features import feature_matrix
from .kernels import FrequencyDraw, KernelSpec, gram_unit, median_heuristic, sample_frequencies

DEFAULT_B = 199
DEFAULT_ALPHA = 0.05


@dataclass(frozen=True)
class PermutationPlan:
    """How to calibrate: B Monte-Carlo permutations at a given level."""

    B: int = DEFAULT_B
    rng: RngStream | None = None
    alpha: float | SignificanceLevel = DEFAULT_ALPHA
    keep_permuted: bool = True

    def __post_init__(self):
        if self.B < 1:
            raise ValueError(f"B must be >= 1, got {self.B}")
        if self.rng is None:
            raise ValueError("a PermutationPlan needs an RngStream")
        if not isinstance(self.alpha, SignificanceLevel):
            object.__setattr__(self, "alpha", SignificanceLevel(float(self.alpha)))

    @property
    def level(self) -> float:
        return self.alpha.alpha


@dataclass(frozen=True)
class Timings:
    featurize_s: float
    statistic_s: float
    permutations_s: float


@dataclass(frozen=True)
class TestResult:
    """Outcome of one calibrated two-sample test.

    ``reject`` is decided by comparing scale-free (unit kernel normalization)
    statistic values, so the decision survives even when the reported
    kernel-scaled values underflow in very high dimension.
    """

    statistic: float
    critical_value: float
    p_value: float
    reject: bool
    permuted_stats: np.ndarray | None
    elapsed: Timings


class _Engine:
    """Evaluates one statistic on many relabelings of a fixed pooled sample.

    Kernel values (or features) are computed once, in unit normalization;
    each permutation only re-indexes them. ``evaluate`` returns unit-scale
    values; multiply by kappa0 for kernel-scaled ones.
    """

    def __init__(
        self,
        z: PooledSample,
        stat: EstimatorId,
        spec: KernelSpec,
        freqs: FrequencyDraw | None,
        design_rng: RngStream | None,
    ):
        self.z = z
        self.stat = stat
        self.spec = spec
        n1, n2, N = z.n1, z.n2, z.N
        if stat.is_rff:
            if freqs is None:
                raise ValueError(f"{stat.tag} requires a FrequencyDraw")
            self.F = feature_matrix(z.z, freqs, kappa0=1.0).phi
        else:
            if freqs is not None:
                raise ValueError(f"{stat.tag} does not take a FrequencyDraw")
            self.G = gram_unit(spec, z.z.data, z.z.data)
        if stat.tag in ("Linear", "Block", "Incomplete"):
            if n1 != n2:
                raise UnequalSampleSizes(f"{stat.tag} needs n1 == n2, got ({n1}, {n2})")
        if stat.tag == "Linear" and n1 % 2 != 0:
            raise OddSampleSize(f"Linear needs an even sample size, got {n1}")
        if stat.tag == "Block" and not (2 <= stat.b <= n1):
            raise BadBlockSize(f"need 2 <= b <= n, got b={stat.b}, n={n1}")
        if stat.tag == "Incomplete":
            if design_rng is None:
                raise ValueError("Incomplete needs a design stream")
            self.design = sample_incomplete_design(n1, stat.Rprime, design_rng)

    def evaluate(self, perms: np.ndarray) -> np.ndarray:
        """Unit-scale statistic value for each permutation row."""
        tag = self.stat.tag
        if tag in ("QuadB", "QuadU"):
            return self._eval_quad(perms, biased=(tag == "QuadB"))
        if tag in ("RffB", "RffU"):
            return self._eval_rff(perms, biased=(tag == "RffB"))
        if tag == "Linear":
            return self._eval_linear(perms)
        if tag == "Block":
            return self._eval_block(perms)
        return self._eval_incomplete(perms)

    def _indicators(self, perms: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """0/1 group-membership columns for the X and Y groups of each row.

        Both groups are materialized so downstream sums treat the two sides
        with identical arithmetic; relabelings that produce equal group
        statistics then tie exactly instead of differing in the last ulp.
        """
        n1, N = self.z.n1, self.z.N
        M = perms.shape[0]
        vx = np.zeros((N, M))
        cols = np.repeat(np.arange(M), n1)
        vx[perms[:, :n1].ravel(), cols] = 1.0
        vy = np.zeros((N, M))
        cols = np.repeat(np.arange(M), N - n1)
        vy[perms[:, n1:].ravel(), cols] = 1.0
        return vx, vy

    def _eval_quad(self, perms: np.ndarray, biased: bool) -> np.ndarray:
        n1, n2 = self.z.n1, self.z.n2
        vx, vy = self._indicators(perms)
        gvx = self.G @ vx
        gvy = self.G @ vy
        sxx = np.einsum("nm,nm->m", vx, gvx)
        syy = np.einsum("nm,nm->m", vy, gvy)
        sxy = np.einsum("nm,nm->m", vx, gvy)
        if biased:
            raw = sxx / n1**2 + syy / n2**2 - 2.0 * sxy / (n1 * n2)
            return np.maximum(raw, 0.0)
        return (
            (sxx - n1) / (n1 * (n1 - 1))
            + (syy - n2) / (n2 * (n2 - 1))
            - 2.0 * sxy / (n1 * n2)
        )

    def _eval_rff(self, perms: np.ndarray, biased: bool) -> np.ndarray:
        n1, n2 = self.z.n1, self.z.n2
        vx, vy = self._indicators(perms)
        mean_x = (self.F.T @ vx) / n1
        mean_y = (self.F.T @ vy) / n2
        diff = mean_x - mean_y
        v = np.einsum("km,km->m", diff, diff)
        if biased:
            return v
        gx = np.maximum(1.0 - np.einsum("km,km->m", mean_x, mean_x), 0.0)
        gy = np.maximum(1.0 - np.einsum("km,km->m", mean_y, mean_y), 0.0)
        return v - gx / (n1 - 1) - gy / (n2 - 1)

    def _eval_linear(self, perms: np.ndarray) -> np.ndarray:
        n = self.z.n1
        ix = perms[:, :n]
        iy = perms[:, n:]
        a, a2 = ix[:, 0::2], ix[:, 1::2]
        c, c2 = iy[:, 0::2], iy[:, 1::2]
        h = self.G[a, a2] + self.G[c, c2] - self.G[a, c2] - self.G[a2, c]
        return h.mean(axis=1)

    def _eval_block(self, perms: np.ndarray) -> np.ndarray:
        n, b = self.z.n1, self.stat.b
        nb = n // b
        xb = perms[:, : nb * b].reshape(-1, nb, b)
        yb = perms[:, n : n + nb * b].reshape(-1, nb, b)
        kxx = self.G[xb[..., :, None], xb[..., None, :]].sum(axis=(2, 3)) - b
        kyy = self.G[yb[..., :, None], yb[..., None, :]].sum(axis=(2, 3)) - b
        cross = self.G[xb[..., :, None], yb[..., None, :]].sum(axis=(2, 3))
        cross_diag = self.G[xb, yb].sum(axis=2)
        per_block = (kxx + kyy - 2.0 * (cross - cross_diag)) / (b * (b - 1))
        return per_block.mean(axis=1)

    def _eval_incomplete(self, perms: np.ndarray) -> np.ndarray:
        n, N = self.z.n1, self.z.N
        dz = self.design
        gf = self.G.ravel()
        p32 = perms.astype(np.int32)
        ai = p32[:, dz.i]
        ai2 = p32[:, dz.i2]
        cj = p32[:, n + dz.j]
        cj2 = p32[:, n + dz.j2]
        h = gf[ai * N + ai2]
        h += gf[cj * N + cj2]
        h -= gf[ai * N + cj2]
        h -= gf[ai2 * N + cj]
        return h.mean(axis=1)


def draw_permutations(N: int, B: int, rng: RngStream) -> np.ndarray:
    """B uniform permutations of 0..N-1, sampled with replacement."""
    keys = rng.generator().random((B, N))
    return np.argsort(keys, axis=1)


def permute_and_evaluate(
    z: PooledSample,
    stat: EstimatorId,
    spec: KernelSpec,
    freqs: FrequencyDraw | None,
    plan: PermutationPlan,
) -> TestResult:
    """Run one permutation-calibrated test on a pooled sample.

    The statistic is evaluated on the original labeling and on B random
    relabelings; the kernel, features, and (for the incomplete design) the
    sampled quadruples are shared bit-for-bit across all evaluations. The
    critical value is the ceil((1-alpha)(B+1))-th smallest of the B+1
    values and the null is rejected only on strict exceedance, so ties
    favor non-rejection.
    """
    t0 = time.perf_counter()
    engine = _Engine(z, stat, spec, freqs, design_rng=plan.rng.child("design"))
    t1 = time.perf_counter()
    identity = np.arange(z.N)[None, :]
    raw_obs = float(engine.evaluate(identity)[0])
    t2 = time.perf_counter()
    perms = draw_permutations(z.N, plan.B, plan.rng.child("permutations"))
    raw_perm = engine.evaluate(perms)
    t3 = time.perf_counter()

    pooled_vals = np.concatenate([[raw_obs], raw_perm])
    k = math.ceil((1.0 - plan.level) * (plan.B + 1))
    raw_crit = float(np.sort(pooled_vals)[k - 1])
    p_value = (1.0 + int(np.count_nonzero(raw_perm >= raw_obs))) / (plan.B + 1)
    reject = raw_obs > raw_crit

    kappa0 = spec.kappa0
    return TestResult(
        statistic=kappa0 * raw_obs,
        critical_value=kappa0 * raw_crit,
        p_value=p_value,
        reject=reject,
        permuted_stats=kappa0 * raw_perm if plan.keep_permuted else None,
        elapsed=Timings(t1 - t0, t2 - t1, t3 - t2),
    )


def rff_mmd_test(
    x: SampleSet,
    y: SampleSet,
    R: int,
    plan: PermutationPlan,
    bandwidth: KernelSpec | None = None,
    estimator: str = "RffB",
) -> TestResult:
    """Convenience wrapper: features + permutation test in one call.

    One frequency draw is sampled up front and held fixed across all B
    permutation evaluations. ``bandwidth=None`` selects the median
    heuristic on the pooled sample; ``estimator`` picks the biased
    ("RffB") or unbiased ("RffU") feature statistic.
    """
    if estimator not in ("RffB", "RffU"):
        raise ValueError(f"estimator must be RffB or RffU, got {estimator!r}")
    z = validate_pair(x, y)
    spec = bandwidth if bandwidth is not None else median_heuristic(z)
    freqs = sample_frequencies(spec, R, plan.rng.child("frequencies"))
    return permute_and_evaluate(z, EstimatorId(estimator, R=R), spec, freqs, plan)
