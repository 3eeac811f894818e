"""Acceptance gate: every criterion at its stated tolerance.

Each test prints one `[acceptance] <criterion>: PASS/FAIL` line; the full
module is expected to take roughly 15-25 minutes on a 2-core desktop.
"""

import math

import numpy as np
import pytest
from scipy.integrate import dblquad, quad

from rffmmd.core import SampleSet, derive_stream, validate_pair
from rffmmd.estimators import (
    EstimatorId,
    mmd2_biased,
    mmd2_block,
    mmd2_incomplete_from_design,
    mmd2_linear,
    mmd2_unbiased,
    rff_mmd2_biased,
    rff_mmd2_unbiased,
    sample_incomplete_design,
)
from rffmmd.features import feature_matrix
from rffmmd.harness import (
    ExperimentConfig,
    run_inconsistency_demo,
    run_power_sweep,
    run_timing_bench,
    theory_parameter_policy,
)
from rffmmd.kernels import KernelSpec, sample_frequencies
from rffmmd.oracles import (
    GaussianPair,
    bootstrap_se_mmd2_unbiased,
    gaussian_mmd2_closed_form,
    mean_u1_given_omega,
    moment_identity_rhs,
    scalar_ratio_factors,
)
from rffmmd.permutation import PermutationPlan, permute_and_evaluate
from rffmmd.scenarios import ScenarioSpec, perturbation_density, sample_perturbed_uniform

import naive


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'} ({detail})", flush=True)
    assert ok, f"{name}: {detail}"


ALL_ESTIMATORS = (
    EstimatorId("QuadB"),
    EstimatorId("QuadU"),
    EstimatorId("RffB", R=10),
    EstimatorId("RffU", R=10),
    EstimatorId("Linear"),
    EstimatorId("Block", b=14),  # b = sqrt(200) rounded
    EstimatorId("Incomplete", Rprime=100),
)


def test_type_i_error_control():
    """Null Scenario 1, n=200, B=199, alpha=0.05, 2000 reps per estimator."""
    cfg = ExperimentConfig(
        scenario=ScenarioSpec("Gauss1dMean", {"mu": 0.0}),
        estimators=ALL_ESTIMATORS,
        sweep_name="mu",
        sweep_values=(0.0,),
        n1=200,
        n2=200,
        B=199,
        alpha=0.05,
        repetitions=2000,
        seed=101,
    )
    rec = run_power_sweep(cfg, threads=2)
    rates = {r.estimator: r.reject_rate for r in rec.rows}
    ok = all(0.030 <= rate <= 0.065 for rate in rates.values())
    detail = ", ".join(f"{k}={v:.4f}" for k, v in rates.items())
    _report("type-I error control", ok, detail)


def test_small_instance_oracle_equivalence():
    """All seven estimators vs naive loops to 1e-12 on 50 random instances."""
    gen = derive_stream(202, "oracle-eq").generator()
    worst = 0.0
    for k in range(50):
        lam = np.array([float(gen.uniform(0.7, 1.6))])
        spec = KernelSpec(lam)
        n1 = int(gen.integers(2, 6))
        n2 = int(gen.integers(2, 6))
        x = SampleSet(gen.standard_normal((n1, 1)) * 1.5)
        y = SampleSet(gen.standard_normal((n2, 1)) * 1.5 + 0.4)
        worst = max(worst, abs(mmd2_biased(x, y, spec) - naive.mmd2_biased(x.data, y.data, lam)))
        worst = max(worst, abs(mmd2_unbiased(x, y, spec) - naive.mmd2_unbiased(x.data, y.data, lam)))

        R = int(gen.integers(1, 4))
        freqs = sample_frequencies(spec, R, derive_stream(300 + k, "oracle-freq"))
        fx = feature_matrix(x, freqs, spec.kappa0)
        fy = feature_matrix(y, freqs, spec.kappa0)
        worst = max(
            worst,
            abs(rff_mmd2_biased(fx, fy) - naive.rff_mmd2_biased(x.data, y.data, freqs.omegas, spec.kappa0)),
            abs(
                rff_mmd2_unbiased(fx, fy, spec.kappa0)
                - naive.rff_mmd2_unbiased(x.data, y.data, freqs.omegas, spec.kappa0)
            ),
        )

        n_eq = int(gen.choice([2, 4]))
        xe = SampleSet(gen.standard_normal((n_eq, 1)))
        ye = SampleSet(gen.standard_normal((n_eq, 1)) + 0.4)
        worst = max(worst, abs(mmd2_linear(xe, ye, spec) - naive.mmd2_linear(xe.data, ye.data, lam)))
        b = int(gen.integers(2, n_eq + 1))
        worst = max(worst, abs(mmd2_block(xe, ye, spec, b) - naive.mmd2_block(xe.data, ye.data, lam, b)))
        design = sample_incomplete_design(n_eq, int(gen.integers(1, 4)), derive_stream(400 + k, "od"))
        worst = max(
            worst,
            abs(
                mmd2_incomplete_from_design(xe, ye, spec, design)
                - naive.mmd2_incomplete_from_design(xe.data, ye.data, lam, design)
            ),
        )
    ok_eq = worst <= 1e-12

    # exact-enumeration permutation distribution vs Monte Carlo at N=8
    spec = KernelSpec(np.array([1.0]))
    gen2 = derive_stream(203, "enum").generator()
    x = SampleSet(gen2.standard_normal((4, 1)))
    y = SampleSet(gen2.standard_normal((4, 1)) + 1.0)
    z = validate_pair(x, y)
    exact = naive.exact_permutation_values(
        z.z.data, 4, lambda a, b: naive.mmd2_biased(a, b, spec.lam)
    )
    plan = PermutationPlan(B=100_000, rng=derive_stream(204, "enum-plan"))
    res = permute_and_evaluate(z, EstimatorId("QuadB"), spec, None, plan)
    tv = naive.tv_distance(exact, res.permuted_stats, decimals=9)
    ok_tv = tv < 0.02
    _report(
        "small-instance oracle equivalence",
        ok_eq and ok_tv,
        f"max |diff|={worst:.2e} (tol 1e-12), exact-vs-MC TV={tv:.4f} (tol 0.02)",
    )


def test_uv_gap_bound():
    """0 <= V - U <= kappa0 (1/(n1-1) + 1/(n2-1)) exactly on 1000 random inputs."""
    gen = derive_stream(205, "gap").generator()
    violations = 0
    for k in range(1000):
        n1 = int(gen.integers(2, 31))
        n2 = int(gen.integers(2, 31))
        d = int(gen.integers(1, 4))
        R = int(gen.integers(1, 9))
        lam = gen.uniform(0.5, 2.0, size=d)
        spec = KernelSpec(lam)
        x = SampleSet(gen.standard_normal((n1, d)) * gen.uniform(0.5, 3.0))
        y = SampleSet(gen.standard_normal((n2, d)) * gen.uniform(0.5, 3.0) + 0.5)
        freqs = sample_frequencies(spec, R, derive_stream(1000 + k, "gap-freq"))
        fx = feature_matrix(x, freqs, spec.kappa0)
        fy = feature_matrix(y, freqs, spec.kappa0)
        gap = rff_mmd2_biased(fx, fy) - rff_mmd2_unbiased(fx, fy, spec.kappa0)
        bound = spec.kappa0 * (1.0 / (n1 - 1) + 1.0 / (n2 - 1))
        if not (0.0 <= gap <= bound):
            violations += 1
    _report("U-V gap bound", violations == 0, f"{violations}/1000 violations")


def _random_gaussian_pair(gen, d):
    a = gen.standard_normal((d, d)) * 0.4
    sigma = a @ a.T + np.eye(d)
    gap_dir = gen.standard_normal(d)
    gap_dir *= gen.uniform(0.25, 1.0) / np.linalg.norm(gap_dir)
    mu_y = gen.standard_normal(d) * 0.3
    return GaussianPair(mu_y + gap_dir, mu_y, sigma)


def test_gaussian_closed_form_agreement():
    """20 random pairs: estimate at n=4000 within 4 bootstrap s.e. of closed form."""
    gen = derive_stream(206, "gauss-agree").generator()
    misses = []
    worst_pull = 0.0
    for k in range(20):
        d = 1 if k % 2 == 0 else 3
        pair = _random_gaussian_pair(gen, d)
        spec = KernelSpec(gen.uniform(0.8, 2.0, size=d))
        x, y = pair.sample(4000, 4000, derive_stream(500 + k, "ga-data"))
        est, se = bootstrap_se_mmd2_unbiased(x, y, spec, n_boot=100, rng=derive_stream(600 + k, "ga-boot"))
        want = gaussian_mmd2_closed_form(pair, spec)
        pull = abs(est - want) / max(se, 1e-12)
        worst_pull = max(worst_pull, pull)
        if pull > 4.0:
            misses.append((k, pull))
    _report(
        "Gaussian closed-form agreement",
        not misses,
        f"20 pairs, worst |est-closed|/se = {worst_pull:.2f} (tol 4)",
    )


def test_moment_identity():
    """Spectral MC matches the closed-form second moment; scalar bound <= 6."""
    gen = derive_stream(207, "moment").generator()
    worst_pull = 0.0
    for k in range(10):
        d = 1 if k % 2 == 0 else 2
        pair = _random_gaussian_pair(gen, d)
        spec = KernelSpec(gen.uniform(0.8, 1.6, size=d))
        freqs = sample_frequencies(spec, 10_000, derive_stream(700 + k, "m-omega"))
        vals = mean_u1_given_omega(pair, spec, freqs.omegas) ** 2
        se = vals.std(ddof=1) / np.sqrt(len(vals))
        pull = abs(vals.mean() - moment_identity_rhs(pair, spec)) / max(se, 1e-300)
        worst_pull = max(worst_pull, pull)
    ok_mc = worst_pull <= 4.0

    s_grid = np.linspace(1e-4, 12.0, 1000)
    products = []
    for sa in s_grid:
        f, g_a, g_b = scalar_ratio_factors(float(sa), float(2.0 * sa))
        products.append(f * g_a / g_b)
    ok_scalar = max(products) <= 6.0 + 1e-12
    _report(
        "moment identity",
        ok_mc and ok_scalar,
        f"worst MC pull={worst_pull:.2f} (tol 4), max scalar product={max(products):.4f} (tol 6)",
    )


@pytest.fixture(scope="module")
def scenario1_power_rates():
    cfg = ExperimentConfig(
        scenario=ScenarioSpec("Gauss1dMean", {"mu": 0.15}),
        estimators=(
            EstimatorId("QuadU"),
            EstimatorId("RffU", R=10),
            EstimatorId("RffU", R=200),
            EstimatorId("RffU", R=1000),
        ),
        sweep_name="mu",
        sweep_values=(0.15,),
        n1=500,
        n2=500,
        B=199,
        alpha=0.05,
        repetitions=600,
        seed=208,
    )
    rec = run_power_sweep(cfg, threads=2)
    return {r.estimator: (r.reject_rate, r.se) for r in rec.rows}


def test_r200_power_match(scenario1_power_rates):
    """|power(RffU, R=200) - power(QuadU)| <= 0.07 at mu=0.15, n=500, 600 reps."""
    quad, _ = scenario1_power_rates["QuadU"]
    rff, _ = scenario1_power_rates["RffU(R=200)"]
    diff = abs(rff - quad)
    _report(
        "R=200 power match",
        diff <= 0.07,
        f"power(QuadU)={quad:.3f}, power(RffU200)={rff:.3f}, |diff|={diff:.3f} (tol 0.07)",
    )


def test_monotonicity_in_r(scenario1_power_rates):
    """Power at R=10 <= R=200 <= R=1000 up to 2 s.e. of each difference."""
    p10, se10 = scenario1_power_rates["RffU(R=10)"]
    p200, se200 = scenario1_power_rates["RffU(R=200)"]
    p1000, se1000 = scenario1_power_rates["RffU(R=1000)"]
    ok1 = p10 <= p200 + 2.0 * math.hypot(se10, se200)
    ok2 = p200 <= p1000 + 2.0 * math.hypot(se200, se1000)
    _report(
        "monotonicity in R",
        ok1 and ok2,
        f"power(R=10)={p10:.3f}, power(R=200)={p200:.3f}, power(R=1000)={p1000:.3f}",
    )


def test_inconsistency_demonstration():
    """Fixed R=3 stays near the level while growing-R and quadratic tests gain power."""
    base = dict(
        scenario=ScenarioSpec("PolyaCF", {"delta_x": 1.0, "delta_y": 2.0}),
        sweep_name="n",
        sweep_values=(1,),
        n1=2,
        n2=2,
        B=199,
        alpha=0.05,
        seed=209,
    )
    lam = 0.0175

    fixed_cfg = ExperimentConfig(estimators=(EstimatorId("RffU", R=3),), repetitions=2000, **base)
    fixed = run_inconsistency_demo(1.0, 2.0, 3, [200, 800, 3200], lam, fixed_cfg)
    fixed_rates = {int(r.param_value): r.reject_rate for r in fixed.rows}
    ok_fixed = all(rate <= 0.10 for rate in fixed_rates.values())

    quad_cfg = ExperimentConfig(estimators=(EstimatorId("QuadU"),), repetitions=60, **base)
    quad = run_inconsistency_demo(1.0, 2.0, 3, [3200], lam, quad_cfg)
    quad_rate = quad.rows[0].reject_rate
    ok_quad = quad_rate >= 0.8

    grow_cfg = ExperimentConfig(estimators=(EstimatorId("RffU", R=3),), repetitions=75, **base)
    grow = run_inconsistency_demo(1.0, 2.0, None, [200, 3200], lam, grow_cfg)
    grow_rates = {int(r.param_value): r.reject_rate for r in grow.rows}
    ok_grow = grow_rates[3200] - grow_rates[200] >= 0.2

    _report(
        "inconsistency demonstration",
        ok_fixed and ok_quad and ok_grow,
        f"fixed-R rates={fixed_rates} (tol <=0.10), quad power@3200={quad_rate:.3f} "
        f"(tol >=0.8), R=n power {grow_rates[200]:.3f}->{grow_rates[3200]:.3f} (gap >=0.2)",
    )


def _loglog_slope(sizes, times):
    slope, _ = np.polyfit(np.log(np.asarray(sizes, float)), np.log(np.asarray(times)), 1)
    return float(slope)


def test_timing_scaling():
    """Quadratic estimator scales ~n^2, feature estimator ~n, and time ~R."""
    sizes = [500, 1000, 2000, 4000]
    rec = run_timing_bench(
        sizes,
        [EstimatorId("QuadU"), EstimatorId("RffU", R=200), EstimatorId("RffU", R=1000)],
        reps=5,
        seed=210,
    )
    times = {}
    for r in rec.rows:
        times.setdefault(r.estimator, {})[int(r.param_value)] = r.mean_time_s
    quad_slope = _loglog_slope(sizes, [times["QuadU"][n] for n in sizes])
    rff_slope = _loglog_slope(sizes, [times["RffU(R=200)"][n] for n in sizes])
    ratio = times["RffU(R=1000)"][1000] / times["RffU(R=200)"][1000]
    ok = 1.8 <= quad_slope <= 2.3 and 0.8 <= rff_slope <= 1.3 and 3.5 <= ratio <= 6.5
    _report(
        "timing scaling",
        ok,
        f"quad slope={quad_slope:.2f} (band [1.8, 2.3]), rff slope={rff_slope:.2f} "
        f"(band [0.8, 1.3]), R-ratio@n=1000={ratio:.2f} (band [3.5, 6.5])",
    )


def test_perturbed_uniform_correctness():
    """Quadrature normalization to 1e-6 and sampler CDF agreement to 0.02."""
    bumps_1d = [0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875]
    total_1d, _ = quad(
        lambda t: perturbation_density(np.array([[t]]), 1, 2, 0.6)[0],
        0.0,
        1.0,
        points=bumps_1d,
        limit=200,
    )
    total_2d, _ = dblquad(
        lambda u, v: perturbation_density(np.array([[u, v]]), 2, 1, 0.45)[0],
        0.0,
        1.0,
        0.0,
        1.0,
        epsabs=1e-9,
    )
    ok_norm = abs(total_1d - 1.0) < 1e-6 and abs(total_2d - 1.0) < 1e-6

    n = 100_000
    s = sample_perturbed_uniform(1, 2, 0.6, None, n, derive_stream(211, "pert")).data.ravel()
    worst = 0.0
    for g in np.linspace(0.05, 0.95, 20):
        cdf_q, _ = quad(
            lambda t: perturbation_density(np.array([[t]]), 1, 2, 0.6)[0],
            0.0,
            float(g),
            points=[p for p in bumps_1d if p < g],
            limit=200,
        )
        worst = max(worst, abs(float((s <= g).mean()) - cdf_q))
    ok_cdf = worst < 0.02
    _report(
        "perturbed-uniform correctness",
        ok_norm and ok_cdf,
        f"|int-1|: 1d={abs(total_1d-1):.2e}, 2d={abs(total_2d-1):.2e} (tol 1e-6); "
        f"max CDF gap={worst:.4f} (tol 0.02)",
    )


# (n, d, s, lam, R_raw) computed independently at 40-digit precision
_POLICY_CASES = [
    (256, 1, 1.0, 0.10881882041201552, 84.448506289465233),
    (1000, 1, 1.0, 0.063095734448019325, 251.18864315095801),
    (1000, 2, 1.0, 0.1, 10000.0),
    (500, 3, 2.0, 0.32305627492285588, 879.69254963003604),
    (4096, 1, 0.5, 0.00390625, 65536.0),
    (8192, 2, 2.5, 0.22272467953508483, 406.37466930385907),
    (100, 5, 1.25, 0.39810717055349725, 10000.0),
    (2048, 4, 3.0, 0.38555270635198521, 2048.0),
    (333, 2, 0.75, 0.097954029608697847, 10862.024389278896),
    (60000, 1, 2.0, 0.086733847294791465, 132.92993057956152),
]


def test_minimax_rate_parameter_policy():
    """Schedule arithmetic matches frozen high-precision values to 1e-12."""
    worst = 0.0
    for n, d, s, lam, r_raw in _POLICY_CASES:
        res = theory_parameter_policy("l2-rate", n=n, d=d, s=s)
        worst = max(worst, abs(res.lam - lam), abs(res.R_raw - r_raw) / max(r_raw, 1.0))
        assert res.R == math.ceil(r_raw - 1e-9) or res.R == math.ceil(r_raw)
    ok = worst <= 1e-12
    mmd_res = theory_parameter_policy("mmd-rate", n=1000, d=1)
    ok = ok and mmd_res.R == 1000
    _report(
        "minimax-rate parameter policy",
        ok,
        f"10 triples, worst rel/abs error={worst:.2e} (tol 1e-12); mmd-rate R(1000)={mmd_res.R}",
    )
