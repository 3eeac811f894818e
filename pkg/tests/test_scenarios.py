import struct

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import ks_2samp

from rffmmd.core import (
    BadMagic,
    CountMismatch,
    EmptyLabelGroup,
    InvalidScenarioParams,
    NegativeDensity,
    TruncatedFile,
    derive_stream,
)
from rffmmd.scenarios import (
    MnistStore,
    ScenarioSpec,
    bump,
    load_mnist,
    perturbation_density,
    polya_density,
    sample_mnist_mix,
    sample_perturbed_uniform,
    sample_polya,
    sample_scenario,
)


# --- scenario dispatch -------------------------------------------------------


def test_gauss1d_null_is_exchangeable():
    spec = ScenarioSpec("Gauss1dMean", {"mu": 0.0})
    x, y = sample_scenario(spec, 10_000, 10_000, derive_stream(1, "gauss-null"))
    stat = ks_2samp(x.data.ravel(), y.data.ravel()).statistic
    assert stat < 0.03


def test_gauss1d_mean_shift_applied():
    spec = ScenarioSpec("Gauss1dMean", {"mu": 0.5})
    x, y = sample_scenario(spec, 20_000, 20_000, derive_stream(2, "gauss-shift"))
    assert abs(x.data.mean()) < 0.025
    assert abs(y.data.mean() - 0.5) < 0.025


def test_high_dim_mean_structure():
    spec = ScenarioSpec("GaussHighDimMean", {"d": 1000})
    x, y = sample_scenario(spec, 2000, 2000, derive_stream(3, "hd"))
    head = y.data[:, :20].mean()
    tail = y.data[:, 20:].mean()
    se_head = 1.0 / np.sqrt(2000 * 20)
    se_tail = 1.0 / np.sqrt(2000 * 980)
    assert abs(head - 0.1) < 3 * se_head
    assert abs(tail) < 3 * se_tail
    assert abs(x.data.mean()) < 3 * se_tail


def test_high_dim_var_scale():
    spec = ScenarioSpec("GaussHighDimVar", {"d": 50, "sigma": 1.5})
    _, y = sample_scenario(spec, 4000, 4000, derive_stream(4, "hdv"))
    assert abs(y.data.std() - 1.5) < 0.02


def test_scenario_determinism():
    spec = ScenarioSpec("PerturbedUniform", {"d": 1, "p": 2, "a": 0.6})
    a1 = sample_scenario(spec, 50, 60, derive_stream(5, "det"))
    a2 = sample_scenario(spec, 50, 60, derive_stream(5, "det"))
    np.testing.assert_array_equal(a1[0].data, a2[0].data)
    np.testing.assert_array_equal(a1[1].data, a2[1].data)


def test_unknown_scenario_rejected():
    with pytest.raises(InvalidScenarioParams):
        ScenarioSpec("Gauss3dMean")


# --- perturbed uniforms ------------------------------------------------------


def test_bump_shape_values():
    assert bump(np.array([-0.75]))[0] == pytest.approx(np.exp(-1.0), rel=1e-12)
    assert bump(np.array([0.5]))[0] == 0.0
    assert bump(np.array([-0.25]))[0] == pytest.approx(-np.exp(-1.0), rel=1e-12)


def test_perturbation_integrates_to_zero_1d():
    total, err = quad(
        lambda t: perturbation_density(np.array([[t]]), 1, 2, 0.6)[0],
        0.0,
        1.0,
        points=[0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875],
        limit=200,
    )
    assert abs(total - 1.0) < 1e-6


def test_perturbation_integrates_to_one_2d():
    from scipy.integrate import dblquad

    total, err = dblquad(
        lambda u, v: perturbation_density(np.array([[u, v]]), 2, 1, 0.45)[0],
        0.0,
        1.0,
        0.0,
        1.0,
        epsabs=1e-9,
    )
    assert abs(total - 1.0) < 1e-6


def test_zero_amplitude_is_plain_uniform():
    s = sample_perturbed_uniform(2, 1, 0.0, None, 5000, derive_stream(6, "unif"))
    assert s.data.shape == (5000, 2)
    assert s.data.min() >= 0.0 and s.data.max() <= 1.0


def test_negative_density_detected():
    with pytest.raises(NegativeDensity):
        perturbation_density(np.array([[0.5]]), 1, 2, 5.0)


def test_rejection_sampler_matches_quadrature_cdf():
    n = 100_000
    s = sample_perturbed_uniform(1, 2, 0.6, None, n, derive_stream(7, "pert-cdf")).data.ravel()
    grid = np.linspace(0.05, 0.95, 20)
    for g in grid:
        cdf_q, _ = quad(
            lambda t: perturbation_density(np.array([[t]]), 1, 2, 0.6)[0],
            0.0,
            float(g),
            points=[p for p in (0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875) if p < g],
            limit=200,
        )
        emp = float((s <= g).mean())
        assert abs(emp - cdf_q) < 0.02


def test_2d_marginals_stay_uniform():
    # with p=1 the perturbation factorizes through zero-mean bumps, so both
    # marginals remain exactly uniform
    n = 100_000
    s = sample_perturbed_uniform(2, 1, 0.45, None, n, derive_stream(8, "pert-2d")).data
    for axis in (0, 1):
        hist, _ = np.histogram(s[:, axis], bins=20, range=(0, 1))
        np.testing.assert_allclose(hist / n, 0.05, atol=0.02)


# --- band-limited CF family --------------------------------------------------


def test_polya_density_normalizes():
    # finite-range quadrature plus the exact oscillatory tail
    # int_X^inf (1-cos u)/u^2 du = (1-cos X)/X + pi/2 - Si(X)
    from scipy.special import sici

    delta, X = 1.0, 60.0
    core, _ = quad(
        lambda x: polya_density(np.array([x]), delta)[0], -X, X, limit=2000, points=[0.0]
    )
    U = X / delta
    si, _ = sici(U)
    tail = ((1.0 - np.cos(U)) / U + np.pi / 2.0 - si) / np.pi
    assert abs(core + 2.0 * tail - 1.0) < 1e-6


def _ecf(samples, omega):
    return np.mean(np.exp(1j * omega * samples))


def test_polya_cf_vanishes_outside_band():
    n = 100_000
    s = sample_polya(1.0, n, derive_stream(9, "polya")).data.ravel()
    for omega in (1.0, 1.5, 2.0, 5.0):
        assert abs(_ecf(s, omega)) < 4.0 / np.sqrt(n)


def test_polya_cf_half_height():
    n = 100_000
    for delta in (1.0, 2.0):
        s = sample_polya(delta, n, derive_stream(10, f"polya/{delta}")).data.ravel()
        val = _ecf(s, 1.0 / (2.0 * delta))
        assert abs(val - 0.5) < 4.0 / np.sqrt(n)


def test_polya_scaling_equivalence():
    n = 10_000
    s1 = sample_polya(1.0, n, derive_stream(11, "polya-scale")).data.ravel()
    s2 = sample_polya(2.0, n, derive_stream(12, "polya-scale-2")).data.ravel()
    stat = ks_2samp(2.0 * s1, s2).statistic
    assert stat < 0.03


def test_polya_pair_degeneracy_outside_band():
    # two different scales, both with CF support inside [-1, 1]
    n = 100_000
    s1 = sample_polya(1.0, n, derive_stream(13, "deg-1")).data.ravel()
    s2 = sample_polya(2.0, n, derive_stream(14, "deg-2")).data.ravel()
    for omega in (1.0, 1.3, 2.4, 4.0):
        assert abs(_ecf(s1, omega) - _ecf(s2, omega)) < 2 * 4.0 / np.sqrt(n)


# --- MNIST -------------------------------------------------------------------


def _idx_bytes(images: np.ndarray, rows=28, cols=28) -> bytes:
    n = images.shape[0]
    return struct.pack(">IIII", 0x00000803, n, rows, cols) + images.astype(np.uint8).tobytes()


def _label_bytes(labels) -> bytes:
    arr = np.asarray(labels, dtype=np.uint8)
    return struct.pack(">II", 0x00000801, arr.shape[0]) + arr.tobytes()


@pytest.fixture()
def mnist_files(tmp_path):
    gen = derive_stream(15, "mnist-fix").generator()
    images = gen.integers(0, 256, size=(3, 28, 28), dtype=np.uint16).astype(np.uint8)
    ipath = tmp_path / "images.idx"
    lpath = tmp_path / "labels.idx"
    ipath.write_bytes(_idx_bytes(images))
    lpath.write_bytes(_label_bytes([0, 1, 2]))
    return ipath, lpath


def test_load_mnist_fixture(mnist_files):
    store = load_mnist(*mnist_files)
    assert store.images.shape == (3, 784)
    assert store.labels.tolist() == [0, 1, 2]


def test_load_mnist_bad_magic(mnist_files, tmp_path):
    ipath, lpath = mnist_files
    bad = tmp_path / "bad.idx"
    bad.write_bytes(b"\x00\x00\x08\x99" + ipath.read_bytes()[4:])
    with pytest.raises(BadMagic):
        load_mnist(bad, lpath)


def test_load_mnist_count_mismatch(mnist_files, tmp_path):
    ipath, _ = mnist_files
    lpath = tmp_path / "short-labels.idx"
    lpath.write_bytes(_label_bytes([0, 1]))
    with pytest.raises(CountMismatch):
        load_mnist(ipath, lpath)


def test_load_mnist_truncated(mnist_files, tmp_path):
    ipath, lpath = mnist_files
    cut = tmp_path / "cut.idx"
    cut.write_bytes(ipath.read_bytes()[:-10])
    with pytest.raises(TruncatedFile):
        load_mnist(cut, lpath)


def test_downsample_constant_image():
    images = np.full((2, 784), 37, dtype=np.uint8)
    store = MnistStore(images, np.array([0, 2], dtype=np.uint8), 28, 28)
    pooled = store.downsampled()
    assert pooled.shape == (2, 49)
    np.testing.assert_allclose(pooled, 37.0)


def test_mnist_mix_rates(mnist_files):
    gen = derive_stream(16, "mnist-mix").generator()
    images = gen.integers(0, 256, size=(200, 784), dtype=np.uint16).astype(np.uint8)
    labels = np.tile(np.arange(10, dtype=np.uint8), 20)
    store = MnistStore(images, labels, 28, 28)

    x, y = sample_mnist_mix(store, 1.0, 50, 50, derive_stream(17, "g1"))
    odd_pixels = {tuple(row) for row in images[labels % 2 == 1]}
    assert all(tuple((row * 255.0).round().astype(int)) in odd_pixels for row in y.data)

    x, y = sample_mnist_mix(store, 0.5, 100, 10_000, derive_stream(18, "g05"))
    odd_frac = np.mean([tuple((row * 255.0).round().astype(int)) in odd_pixels for row in y.data])
    assert abs(odd_frac - 0.5) < 3 * np.sqrt(0.25 / 10_000)
    assert x.data.max() <= 1.0 and x.data.min() >= 0.0


def test_mnist_mix_empty_group(mnist_files):
    images = np.zeros((4, 784), dtype=np.uint8)
    labels = np.array([0, 2, 4, 6], dtype=np.uint8)
    store = MnistStore(images, labels, 28, 28)
    with pytest.raises(EmptyLabelGroup):
        sample_mnist_mix(store, 0.5, 5, 5, derive_stream(19, "empty"))
    # gamma == 0 with no odd images is the legitimate null case
    sample_mnist_mix(store, 0.0, 5, 5, derive_stream(20, "null"))
