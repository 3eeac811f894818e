"""Closed-form Gaussian references used to validate the estimators.

For Gaussian pairs with a shared covariance and the product Gaussian
kernel, the population squared MMD, the second spectral moment of the
single-frequency statistic, and the moment-ratio bound all admit exact
expressions; these anchor the Monte-Carlo tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .core import DegeneratePair, DimensionMismatch, RngStream, SampleSet, SingularMatrix
from .estimators import mmd2_unbiased
from .kernels import KernelSpec, gram_unit


@dataclass(frozen=True)
class GaussianPair:
    """Two Gaussians N(mu_x, sigma) and N(mu_y, sigma) with shared covariance."""

    mu_x: np.ndarray
    mu_y: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mx = np.atleast_1d(np.asarray(self.mu_x, dtype=np.float64))
        my = np.atleast_1d(np.asarray(self.mu_y, dtype=np.float64))
        sg = np.atleast_2d(np.asarray(self.sigma, dtype=np.float64))
        if mx.shape != my.shape or sg.shape != (mx.shape[0], mx.shape[0]):
            raise DimensionMismatch(
                f"shapes disagree: mu_x {mx.shape}, mu_y {my.shape}, sigma {sg.shape}"
            )
        if not np.allclose(sg, sg.T):
            raise SingularMatrix("covariance must be symmetric")
        try:
            np.linalg.cholesky(sg)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrix("covariance must be positive definite") from exc
        object.__setattr__(self, "mu_x", mx)
        object.__setattr__(self, "mu_y", my)
        object.__setattr__(self, "sigma", sg)

    @property
    def d(self) -> int:
        return self.mu_x.shape[0]

    @property
    def gap(self) -> np.ndarray:
        return self.mu_x - self.mu_y

    def sample(self, n1: int, n2: int, rng: RngStream) -> tuple[SampleSet, SampleSet]:
        gen = rng.generator()
        chol = np.linalg.cholesky(self.sigma)
        x = gen.standard_normal((n1, self.d)) @ chol.T + self.mu_x
        y = gen.standard_normal((n2, self.d)) @ chol.T + self.mu_y
        return SampleSet(x), SampleSet(y)


def _quad_and_logdet(gap: np.ndarray, m: np.ndarray) -> tuple[float, float]:
    """gap' m^-1 gap and log det m via Cholesky; raises on non-PD input."""
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix("covariance + bandwidth matrix is not positive definite") from exc
    half = solve_triangular(chol, gap, lower=True)
    quad = float(half @ half)
    logdet = 2.0 * float(np.log(np.diag(chol)).sum())
    return quad, logdet


def gaussian_mmd2_closed_form(pair: GaussianPair, spec: KernelSpec) -> float:
    """Population squared MMD between the two Gaussians under this kernel.

    2 (1/4pi)^(d/2) * (1 - exp{-gap' (sigma + diag(lam^2/4))^-1 gap / 4})
                    / det(sigma + diag(lam^2/4))^(1/2)
    """
    if spec.d != pair.d:
        raise DimensionMismatch(f"kernel has d={spec.d}, pair has d={pair.d}")
    m = pair.sigma + np.diag(spec.lam**2 / 4.0)
    quad, logdet = _quad_and_logdet(pair.gap, m)
    amp = 2.0 * (4.0 * np.pi) ** (-pair.d / 2.0) * np.exp(-0.5 * logdet)
    return amp * -np.expm1(-quad / 4.0)


def _closed_form_cov(gap: np.ndarray, cov: np.ndarray, lam: np.ndarray, d: int) -> float:
    m = cov + np.diag(lam**2 / 4.0)
    quad, logdet = _quad_and_logdet(gap, m)
    amp = 2.0 * (4.0 * np.pi) ** (-d / 2.0) * np.exp(-0.5 * logdet)
    return amp * -np.expm1(-quad / 4.0)


def moment_identity_rhs(pair: GaussianPair, spec: KernelSpec) -> float:
    """Second spectral moment of the single-frequency statistic's mean.

    With Z1 ~ N(0, 2 sigma), Z2 ~ N(gap, 2 sigma), Z3 ~ N(2 mu_x, 2 sigma)
    and Z4 ~ N(2 mu_y, 2 sigma), the value equals
    4 kappa0 MMD^2(Z1, Z2) - kappa0 MMD^2(Z3, Z4).
    """
    if spec.d != pair.d:
        raise DimensionMismatch(f"kernel has d={spec.d}, pair has d={pair.d}")
    cov2 = 2.0 * pair.sigma
    t12 = _closed_form_cov(pair.gap, cov2, spec.lam, pair.d)
    t34 = _closed_form_cov(2.0 * pair.gap, cov2, spec.lam, pair.d)
    return spec.kappa0 * (4.0 * t12 - t34)


def scalar_ratio_factors(s_a: float, s_b: float) -> tuple[float, float, float]:
    """The (f, g(s_a), g(s_b)) factors of the moment-to-MMD^2 ratio.

    f(x) = 3 + 2 e^-x + e^-2x is decreasing from 6; g(x) = (1 - e^-x)^2 is
    increasing; together f(s_a) g(s_a) / g(s_b) <= 6 whenever s_b >= s_a >= 0.
    """
    f = 3.0 + 2.0 * np.exp(-s_a) + np.exp(-2.0 * s_a)
    g_a = np.expm1(-s_a) ** 2
    g_b = np.expm1(-s_b) ** 2
    return float(f), float(g_a), float(g_b)


@dataclass(frozen=True)
class MomentRatioReport:
    ratio: float
    s_a: float
    s_b: float
    scalar_product: float


def moment_ratio_bound_check(pair: GaussianPair, spec: KernelSpec) -> MomentRatioReport:
    """Ratio of the second spectral moment to the squared population MMD^2.

    Also evaluates the scalar factorization f(s_a) g(s_a)/g(s_b), which is
    bounded by 6; the ratio itself is bounded by 6 kappa0 C2/C3 where the
    constants depend only on (d, lam, sigma).
    """
    gap = pair.gap
    if float(gap @ gap) == 0.0:
        raise DegeneratePair("mean gap must be nonzero")
    m_a = 2.0 * pair.sigma + np.diag(spec.lam**2 / 4.0)
    m_b = pair.sigma + np.diag(spec.lam**2 / 4.0)
    s_a = _quad_and_logdet(gap, m_a)[0] / 4.0
    s_b = _quad_and_logdet(gap, m_b)[0] / 4.0
    f, g_a, g_b = scalar_ratio_factors(s_a, s_b)
    mmd2 = gaussian_mmd2_closed_form(pair, spec)
    ratio = moment_identity_rhs(pair, spec) / mmd2**2
    return MomentRatioReport(ratio=ratio, s_a=s_a, s_b=s_b, scalar_product=f * g_a / g_b)


def mean_u1_given_omega(pair: GaussianPair, spec: KernelSpec, omegas: np.ndarray) -> np.ndarray:
    """Exact data-expectation of the single-frequency statistic at each omega.

    Uses the Gaussian characteristic function per term:
    2 kappa0 exp(-w' sigma w) (1 - cos(w . gap)).
    """
    om = np.atleast_2d(np.asarray(omegas, dtype=np.float64))
    quad = np.einsum("ri,ij,rj->r", om, pair.sigma, om)
    return 2.0 * spec.kappa0 * np.exp(-quad) * (1.0 - np.cos(om @ pair.gap))


def bootstrap_se_mmd2_unbiased(
    x: SampleSet, y: SampleSet, spec: KernelSpec, n_boot: int, rng: RngStream
) -> tuple[float, float]:
    """The unbiased estimate plus its bootstrap standard error.

    Resamples each sample with replacement; every replicate is evaluated
    from the cached kernel matrices through count-weight quadratic forms,
    so the cost is two matrix products per kernel block rather than a
    fresh O(N^2 d) pass per replicate.
    """
    n1, n2 = x.n, y.n
    gen = rng.generator()
    cx = gen.multinomial(n1, np.full(n1, 1.0 / n1), size=n_boot).T.astype(np.float64)
    cy = gen.multinomial(n2, np.full(n2, 1.0 / n2), size=n_boot).T.astype(np.float64)

    gxx = gram_unit(spec, x.data, x.data)
    axx = float(gxx.sum()) - n1
    bxx = np.einsum("ib,ib->b", cx, gxx @ cx) - n1
    del gxx
    gyy = gram_unit(spec, y.data, y.data)
    ayy = float(gyy.sum()) - n2
    byy = np.einsum("ib,ib->b", cy, gyy @ cy) - n2
    del gyy
    gxy = gram_unit(spec, x.data, y.data)
    axy = float(gxy.sum())
    bxy = np.einsum("ib,ib->b", cx, gxy @ cy)
    del gxy

    point = spec.kappa0 * (
        axx / (n1 * (n1 - 1)) + ayy / (n2 * (n2 - 1)) - 2.0 * axy / (n1 * n2)
    )
    reps = spec.kappa0 * (
        bxx / (n1 * (n1 - 1)) + byy / (n2 * (n2 - 1)) - 2.0 * bxy / (n1 * n2)
    )
    return point, float(reps.std(ddof=1))


def mc_crosscheck_mmd2(
    pair: GaussianPair, spec: KernelSpec, n: int, rng: RngStream
) -> tuple[float, float]:
    """Unbiased estimate on fresh samples of size n plus a plug-in s.e."""
    x, y = pair.sample(n, n, rng)
    est = mmd2_unbiased(x, y, spec)
    _, se = bootstrap_se_mmd2_unbiased(x, y, spec, n_boot=100, rng=rng.child("boot"))
    return est, se
