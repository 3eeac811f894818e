"""Samplers for the simulation-study distributions.

Covers univariate and high-dimensional Gaussian mean/scale alternatives,
bump-perturbed uniforms, MNIST even/odd mixtures, and a family of scaled
Fejer-kernel densities whose characteristic functions vanish outside a
compact band (so no fixed set of spectral frequencies can tell two members
apart).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .core import (
    BadMagic,
    CountMismatch,
    EmptyLabelGroup,
    InvalidScenarioParams,
    NegativeDensity,
    RetryCapExceeded,
    RngStream,
    SampleSet,
    TruncatedFile,
)

SCENARIO_IDS = (
    "Gauss1dMean",
    "Gauss1dVar",
    "GaussHighDimMean",
    "GaussHighDimVar",
    "PerturbedUniform",
    "MnistMix",
    "PolyaCF",
)

_REJECTION_MAX_ROUNDS = 1000


@dataclass(frozen=True)
class ScenarioSpec:
    """A named experiment distribution plus its parameter record."""

    id: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.id not in SCENARIO_IDS:
            raise InvalidScenarioParams(f"unknown scenario id {self.id!r}")

    def with_param(self, name: str, value) -> "ScenarioSpec":
        merged = dict(self.params)
        merged[name] = value
        return ScenarioSpec(self.id, merged)


def _param(params: dict, name: str, default=None):
    if name in params:
        return params[name]
    if default is None:
        raise InvalidScenarioParams(f"missing scenario parameter {name!r}")
    return default


def sample_scenario(
    spec: ScenarioSpec, n1: int, n2: int, rng: RngStream, mnist_store: "MnistStore | None" = None
) -> tuple[SampleSet, SampleSet]:
    """Draw two independent iid samples of the requested sizes."""
    gen = rng.generator()
    p = spec.params
    if spec.id == "Gauss1dMean":
        mu = float(_param(p, "mu", 0.0))
        x = gen.standard_normal((n1, 1))
        y = gen.standard_normal((n2, 1)) + mu
        return SampleSet(x), SampleSet(y)
    if spec.id == "Gauss1dVar":
        sigma = float(_param(p, "sigma", 1.0))
        if sigma <= 0:
            raise InvalidScenarioParams(f"sigma must be positive, got {sigma}")
        x = gen.standard_normal((n1, 1))
        y = gen.standard_normal((n2, 1)) * sigma
        return SampleSet(x), SampleSet(y)
    if spec.id == "GaussHighDimMean":
        d = int(_param(p, "d"))
        shift = float(_param(p, "shift", 0.1))
        k = int(_param(p, "shifted_coords", 20))
        if d < k:
            raise InvalidScenarioParams(f"need d >= {k}, got d={d}")
        x = gen.standard_normal((n1, d))
        y = gen.standard_normal((n2, d))
        y[:, :k] += shift
        return SampleSet(x), SampleSet(y)
    if spec.id == "GaussHighDimVar":
        d = int(_param(p, "d"))
        sigma = float(_param(p, "sigma", 1.0))
        if d < 1 or sigma <= 0:
            raise InvalidScenarioParams(f"need d >= 1 and sigma > 0, got d={d}, sigma={sigma}")
        x = gen.standard_normal((n1, d))
        y = gen.standard_normal((n2, d)) * sigma
        return SampleSet(x), SampleSet(y)
    if spec.id == "PerturbedUniform":
        d = int(_param(p, "d"))
        size = int(_param(p, "p"))
        a = float(_param(p, "a", 0.0))
        theta = p.get("theta")
        x = SampleSet(gen.random((n1, d)))
        y = sample_perturbed_uniform(d, size, a, theta, n2, rng.child("perturbed"))
        return x, y
    if spec.id == "PolyaCF":
        delta_x = float(_param(p, "delta_x", 1.0))
        delta_y = float(_param(p, "delta_y", 1.0))
        x = sample_polya(delta_x, n1, rng.child("polya-x"))
        y = sample_polya(delta_y, n2, rng.child("polya-y"))
        return x, y
    if spec.id == "MnistMix":
        if mnist_store is None:
            raise InvalidScenarioParams("MnistMix needs an MnistStore")
        gamma = float(_param(p, "gamma", 0.0))
        downsampled = bool(p.get("downsampled", False))
        return sample_mnist_mix(mnist_store, gamma, n1, n2, rng.child("mnist"), downsampled)
    raise InvalidScenarioParams(f"unknown scenario id {spec.id!r}")


# --- perturbed uniforms ----------------------------------------------------


def bump(t: np.ndarray) -> np.ndarray:
    """Antisymmetric pair of smooth bumps supported on (-1, 0).

    Positive bump on (-1, -1/2), mirrored negative bump on (-1/2, 0); the
    two halves integrate to zero jointly.
    """
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros_like(t)
    for lo, hi, sign, shift in ((-1.0, -0.5, 1.0, 3.0), (-0.5, 0.0, -1.0, 1.0)):
        mask = (t > lo) & (t < hi)
        if np.any(mask):
            s = 4.0 * t[mask] + shift
            out[mask] = sign * np.exp(-1.0 / (1.0 - s * s))
    return out


def _theta_array(d: int, p: int, theta) -> np.ndarray:
    if theta is None:
        return np.ones([p] * d)
    arr = np.asarray(theta, dtype=np.float64).reshape([p] * d)
    if not np.all(np.isin(arr, (-1.0, 1.0))):
        raise InvalidScenarioParams("theta entries must be +1 or -1")
    return arr


def perturbation_field(t: np.ndarray, d: int, p: int, theta=None) -> np.ndarray:
    """Mean-zero perturbation field built from p^d signed product bumps.

    ``t`` is an (m, d) batch of points in [0, 1]^d; returns the field value
    at each point. Each coordinate lies in exactly one of p tiles, so only
    one product term is active per point.
    """
    t = np.atleast_2d(np.asarray(t, dtype=np.float64))
    if t.shape[1] != d:
        raise InvalidScenarioParams(f"points must have d={d} coordinates")
    th = _theta_array(d, p, theta)
    # active tile per coordinate: u_i = ceil(p * t_i), clipped into 1..p
    u = np.clip(np.ceil(p * t).astype(int), 1, p)
    prod = np.ones(t.shape[0])
    for i in range(d):
        prod *= bump(p * t[:, i] - u[:, i])
    signs = th[tuple(u[:, i] - 1 for i in range(d))]
    return (np.e**d / p) * signs * prod


def perturbation_density(t: np.ndarray, d: int, p: int, a: float, theta=None) -> np.ndarray:
    """Density 1 + a * field on [0, 1]^d; validated nonnegative on a grid."""
    _validate_perturbation(d, p, a, theta)
    return 1.0 + a * perturbation_field(t, d, p, theta)


def _validate_perturbation(d: int, p: int, a: float, theta):
    if d < 1 or p < 1:
        raise InvalidScenarioParams(f"need d >= 1 and p >= 1, got d={d}, p={p}")
    if a < 0:
        raise InvalidScenarioParams(f"amplitude must be >= 0, got a={a}")
    if a == 0:
        return
    grid = _probe_grid(d)
    vals = 1.0 + a * perturbation_field(grid, d, p, theta)
    if vals.min() < 0:
        raise NegativeDensity(f"density dips to {vals.min():.4g}; lower the amplitude")


def _probe_grid(d: int, total: int = 10000) -> np.ndarray:
    per_axis = max(2, int(round(total ** (1.0 / d))))
    axes = [np.linspace(0.0, 1.0, per_axis) for _ in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def sample_perturbed_uniform(
    d: int, p: int, a: float, theta, n: int, rng: RngStream
) -> SampleSet:
    """Rejection-sample the perturbed uniform from a flat envelope."""
    _validate_perturbation(d, p, a, theta)
    gen = rng.generator()
    if a == 0:
        return SampleSet(gen.random((n, d)))
    grid = _probe_grid(d)
    density_max = float((1.0 + a * perturbation_field(grid, d, p, theta)).max()) * 1.01
    out = np.empty((n, d))
    filled = 0
    for _ in range(_REJECTION_MAX_ROUNDS):
        m = max(64, int(1.2 * (n - filled) * density_max))
        cand = gen.random((m, d))
        accept_p = (1.0 + a * perturbation_field(cand, d, p, theta)) / density_max
        keep = cand[gen.random(m) < accept_p]
        take = min(keep.shape[0], n - filled)
        out[filled : filled + take] = keep[:take]
        filled += take
        if filled == n:
            return SampleSet(out)
    raise RetryCapExceeded("perturbed-uniform sampler did not fill its quota")


# --- band-limited characteristic function family ---------------------------


def polya_density(x: np.ndarray, delta: float) -> np.ndarray:
    """Density delta * (1 - cos(x/delta)) / (pi x^2).

    Its characteristic function is the triangle (1 - delta*|w|)+, which is
    identically zero outside [-1/delta, 1/delta].
    """
    if delta <= 0:
        raise InvalidScenarioParams(f"delta must be positive, got {delta}")
    x = np.asarray(x, dtype=np.float64)
    u = x / delta
    small = np.abs(u) < 1e-6
    g = np.empty_like(u)
    # (1 - cos u)/u^2 -> 1/2 as u -> 0
    g[small] = 0.5 - u[small] ** 2 / 24.0
    ub = u[~small]
    g[~small] = (1.0 - np.cos(ub)) / (ub * ub)
    return g / (np.pi * delta)


def _polya_envelope(x: np.ndarray, delta: float) -> np.ndarray:
    return np.minimum(1.0 / (2.0 * np.pi * delta), 2.0 * delta / (np.pi * x * x))


def sample_polya(delta: float, n: int, rng: RngStream) -> SampleSet:
    """Draw n points whose characteristic function is the delta-triangle.

    Rejection from the envelope min(1/(2 pi delta), 2 delta/(pi x^2)):
    uniform core on [-2 delta, 2 delta] plus 1/x^2 tails, accepted with
    probability density/envelope. The envelope's pointwise dominance is
    re-checked on a grid before sampling.
    """
    if delta <= 0:
        raise InvalidScenarioParams(f"delta must be positive, got {delta}")
    probe = delta * np.concatenate([np.linspace(1e-9, 50.0, 20001)])
    if np.any(polya_density(probe, delta) > _polya_envelope(probe, delta) * (1 + 1e-12)):
        raise NegativeDensity("envelope fails to dominate the target density")
    gen = rng.generator()
    out = np.empty(n)
    filled = 0
    # envelope mass: 2/pi from the core, 2/pi from the tails
    for _ in range(_REJECTION_MAX_ROUNDS):
        m = max(64, int(1.5 * (n - filled)))
        from_core = gen.random(m) < 0.5
        x = np.empty(m)
        x[from_core] = gen.uniform(-2.0 * delta, 2.0 * delta, size=int(from_core.sum()))
        n_tail = m - int(from_core.sum())
        tail = 2.0 * delta / (1.0 - gen.random(n_tail))
        x[~from_core] = tail * np.where(gen.random(n_tail) < 0.5, 1.0, -1.0)
        accept_p = polya_density(x, delta) / _polya_envelope(x, delta)
        keep = x[gen.random(m) < accept_p]
        take = min(keep.shape[0], n - filled)
        out[filled : filled + take] = keep[:take]
        filled += take
        if filled == n:
            return SampleSet(out)
    raise RetryCapExceeded("band-limited-CF sampler did not fill its quota")


# --- MNIST -----------------------------------------------------------------

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


@dataclass(frozen=True)
class MnistStore:
    """Parsed image/label pair: (count, rows*cols) uint8 plus labels 0..9."""

    images: np.ndarray
    labels: np.ndarray
    rows: int
    cols: int

    def downsampled(self) -> np.ndarray:
        """Mean-pool non-overlapping 4x4 patches (28x28 -> 7x7)."""
        if self.rows % 4 or self.cols % 4:
            raise InvalidScenarioParams("downsampling needs sides divisible by 4")
        imgs = self.images.reshape(-1, self.rows, self.cols).astype(np.float64)
        pooled = imgs.reshape(-1, self.rows // 4, 4, self.cols // 4, 4).mean(axis=(2, 4))
        return pooled.reshape(imgs.shape[0], -1)


def _read_be32(buf: bytes, offset: int, path: str) -> int:
    if offset + 4 > len(buf):
        raise TruncatedFile(f"{path}: header cut short")
    return struct.unpack(">I", buf[offset : offset + 4])[0]


def load_mnist(images_path, labels_path) -> MnistStore:
    """Parse a big-endian IDX image/label file pair."""
    with open(images_path, "rb") as f:
        raw = f.read()
    magic = _read_be32(raw, 0, str(images_path))
    if magic != IDX_IMAGE_MAGIC:
        raise BadMagic(f"{images_path}: magic {magic:#010x} != {IDX_IMAGE_MAGIC:#010x}")
    count = _read_be32(raw, 4, str(images_path))
    rows = _read_be32(raw, 8, str(images_path))
    cols = _read_be32(raw, 12, str(images_path))
    need = 16 + count * rows * cols
    if len(raw) < need:
        raise TruncatedFile(f"{images_path}: expected {need} bytes, got {len(raw)}")
    images = np.frombuffer(raw, dtype=np.uint8, count=count * rows * cols, offset=16)
    images = images.reshape(count, rows * cols).copy()

    with open(labels_path, "rb") as f:
        raw = f.read()
    magic = _read_be32(raw, 0, str(labels_path))
    if magic != IDX_LABEL_MAGIC:
        raise BadMagic(f"{labels_path}: magic {magic:#010x} != {IDX_LABEL_MAGIC:#010x}")
    lcount = _read_be32(raw, 4, str(labels_path))
    if lcount != count:
        raise CountMismatch(f"{count} images vs {lcount} labels")
    if len(raw) < 8 + lcount:
        raise TruncatedFile(f"{labels_path}: expected {8 + lcount} bytes, got {len(raw)}")
    labels = np.frombuffer(raw, dtype=np.uint8, count=lcount, offset=8).copy()
    if labels.max(initial=0) > 9:
        raise InvalidScenarioParams("labels must lie in 0..9")
    return MnistStore(images, labels, rows, cols)


def sample_mnist_mix(
    store: MnistStore,
    gamma: float,
    n1: int,
    n2: int,
    rng: RngStream,
    downsampled: bool = False,
) -> tuple[SampleSet, SampleSet]:
    """X from even-digit images; Y mixes odd-digit images in with rate gamma.

    Rows are drawn with replacement and pixel values rescaled to [0, 1].
    """
    if not (0.0 <= gamma <= 1.0):
        raise InvalidScenarioParams(f"gamma must lie in [0, 1], got {gamma}")
    pixels = store.downsampled() if downsampled else store.images.astype(np.float64)
    even = np.flatnonzero(store.labels % 2 == 0)
    odd = np.flatnonzero(store.labels % 2 == 1)
    if even.size == 0 or (gamma > 0 and odd.size == 0):
        raise EmptyLabelGroup("need images in both the even and odd label groups")
    gen = rng.generator()
    xi = even[gen.integers(0, even.size, size=n1)]
    use_odd = gen.random(n2) < gamma
    yi = np.where(
        use_odd,
        odd[gen.integers(0, max(odd.size, 1), size=n2)] if odd.size else 0,
        even[gen.integers(0, even.size, size=n2)],
    )
    return SampleSet(pixels[xi] / 255.0), SampleSet(pixels[yi] / 255.0)
