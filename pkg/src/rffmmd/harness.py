"""Experiment runner: power sweeps, timing benches, and parameter policies."""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .core import SampleSet, SpectralMassTooCentral, derive_stream, validate_pair
from .estimators import (
    EstimatorId,
    mmd2_biased,
    mmd2_block,
    mmd2_incomplete,
    mmd2_linear,
    mmd2_unbiased,
    rff_mmd2_streamed,
)
from .kernels import KernelSpec, median_heuristic, sample_frequencies
from .permutation import PermutationPlan, permute_and_evaluate
from .scenarios import MnistStore, ScenarioSpec, sample_scenario

CSV_COLUMNS = (
    "scenario",
    "estimator",
    "param_name",
    "param_value",
    "n1",
    "n2",
    "R",
    "B",
    "alpha",
    "reps",
    "reject_rate",
    "se",
    "mean_stat",
    "mean_time_s",
    "seed",
)


@dataclass(frozen=True)
class BandwidthPolicy:
    """How each repetition picks its kernel bandwidth."""

    kind: str  # median-heuristic | fixed | theory-L2 | theory-MMD
    lam: float | None = None
    s: float | None = None

    def __post_init__(self):
        if self.kind not in ("median-heuristic", "fixed", "theory-L2", "theory-MMD"):
            raise ValueError(f"unknown bandwidth policy {self.kind!r}")
        if self.kind in ("fixed", "theory-MMD") and (self.lam is None or self.lam <= 0):
            raise ValueError(f"{self.kind} bandwidth policy needs lam > 0")
        if self.kind == "theory-L2" and (self.s is None or self.s <= 0):
            raise ValueError("theory-L2 bandwidth policy needs smoothness s > 0")


@dataclass(frozen=True)
class RPolicy:
    """How the feature count of RFF estimators scales with the sample size."""

    kind: str  # fixed | linear-in-n | l2-rate
    s: float | None = None

    def __post_init__(self):
        if self.kind not in ("fixed", "linear-in-n", "l2-rate"):
            raise ValueError(f"unknown R policy {self.kind!r}")
        if self.kind == "l2-rate" and (self.s is None or self.s <= 0):
            raise ValueError("l2-rate R policy needs smoothness s > 0")


@dataclass(frozen=True)
class PolicyResult:
    R: int
    R_raw: float
    lam: float | None


def theory_parameter_policy(
    policy: str, n: int, d: int, s: float | None = None, R_fixed: int | None = None
) -> PolicyResult:
    """Feature-count and bandwidth schedules with known power guarantees.

    "l2-rate": lam_i = n^(-2/(4s+d)) and R = ceil(n^(4d/(4s+d))), the pair
    that preserves the quadratic-time test's separation rate against smooth
    L2 alternatives in sub-quadratic time once s >= 3d/4.
    "mmd-rate": R = n preserves the n^(-1/2) rate against mean-embedding
    alternatives at any fixed bandwidth.
    "gaussian-fixed": a constant R suffices over shared-covariance Gaussian
    pairs; returns the configured value.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if policy == "l2-rate":
        if s is None or s <= 0:
            raise ValueError("l2-rate needs smoothness s > 0")
        if d < 1:
            raise ValueError(f"d must be >= 1, got {d}")
        lam = float(n) ** (-2.0 / (4.0 * s + d))
        r_raw = float(n) ** (4.0 * d / (4.0 * s + d))
        return PolicyResult(R=math.ceil(r_raw), R_raw=r_raw, lam=lam)
    if policy == "mmd-rate":
        return PolicyResult(R=n, R_raw=float(n), lam=None)
    if policy == "gaussian-fixed":
        if R_fixed is None or R_fixed < 1:
            raise ValueError("gaussian-fixed needs a configured R >= 1")
        return PolicyResult(R=R_fixed, R_raw=float(R_fixed), lam=None)
    raise ValueError(f"unknown policy {policy!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep: a scenario, an estimator menu, and a single grid axis."""

    scenario: ScenarioSpec
    estimators: tuple[EstimatorId, ...]
    sweep_name: str
    sweep_values: tuple
    n1: int
    n2: int
    B: int = 199
    alpha: float = 0.05
    repetitions: int = 100
    seed: int = 0
    bandwidth_policy: BandwidthPolicy = BandwidthPolicy("median-heuristic")
    r_policy: RPolicy = RPolicy("fixed")

    def __post_init__(self):
        object.__setattr__(self, "estimators", tuple(self.estimators))
        object.__setattr__(self, "sweep_values", tuple(self.sweep_values))
        if len(self.sweep_values) < 1:
            raise ValueError("sweep needs at least one grid value")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not self.estimators:
            raise ValueError("need at least one estimator")

    def echo(self) -> dict:
        return {
            "scenario": {"id": self.scenario.id, "params": dict(self.scenario.params)},
            "estimators": [
                {k: v for k, v in (("tag", e.tag), ("R", e.R), ("b", e.b), ("Rprime", e.Rprime)) if v is not None}
                for e in self.estimators
            ],
            "sweep": {"name": self.sweep_name, "values": list(self.sweep_values)},
            "n1": self.n1,
            "n2": self.n2,
            "B": self.B,
            "alpha": self.alpha,
            "repetitions": self.repetitions,
            "seed": self.seed,
            "bandwidth_policy": _policy_echo(self.bandwidth_policy),
            "r_policy": _policy_echo(self.r_policy),
        }


def _policy_echo(policy) -> dict:
    out = {"kind": policy.kind}
    for name in ("lam", "s"):
        val = getattr(policy, name, None)
        if val is not None:
            out[name] = val
    return out


def _take(d: dict, allowed: set[str], where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ValueError(f"unknown keys in {where}: {sorted(unknown)}")


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Build a config from its JSON mirror; unknown keys are rejected."""
    _take(
        raw,
        {
            "scenario",
            "estimators",
            "sweep",
            "n1",
            "n2",
            "B",
            "alpha",
            "repetitions",
            "seed",
            "bandwidth_policy",
            "r_policy",
        },
        "config",
    )
    scen_raw = raw["scenario"]
    _take(scen_raw, {"id", "params"}, "config.scenario")
    scenario = ScenarioSpec(scen_raw["id"], dict(scen_raw.get("params", {})))
    ests = []
    for e in raw["estimators"]:
        _take(e, {"tag", "R", "b", "Rprime"}, "config.estimators[]")
        ests.append(EstimatorId(**e))
    sweep_raw = raw["sweep"]
    _take(sweep_raw, {"name", "values"}, "config.sweep")
    kwargs = {}
    if "bandwidth_policy" in raw:
        bp = dict(raw["bandwidth_policy"])
        _take(bp, {"kind", "lam", "s"}, "config.bandwidth_policy")
        kwargs["bandwidth_policy"] = BandwidthPolicy(**bp)
    if "r_policy" in raw:
        rp = dict(raw["r_policy"])
        _take(rp, {"kind", "s"}, "config.r_policy")
        kwargs["r_policy"] = RPolicy(**rp)
    for name in ("B", "alpha", "repetitions", "seed"):
        if name in raw:
            kwargs[name] = raw[name]
    return ExperimentConfig(
        scenario=scenario,
        estimators=tuple(ests),
        sweep_name=sweep_raw["name"],
        sweep_values=tuple(sweep_raw["values"]),
        n1=raw["n1"],
        n2=raw["n2"],
        **kwargs,
    )


@dataclass
class PointResult:
    estimator: str
    param_name: str
    param_value: float
    n1: int
    n2: int
    R: int | None
    reject_rate: float | None
    se: float | None
    mean_stat: float | None
    mean_time_s: float | None


@dataclass
class ExperimentRecord:
    scenario: str
    B: int
    alpha: float
    repetitions: int
    seed: int
    config_echo: dict
    rows: list[PointResult] = field(default_factory=list)

    def row_dicts(self) -> list[dict]:
        out = []
        for r in self.rows:
            out.append(
                {
                    "scenario": self.scenario,
                    "estimator": r.estimator,
                    "param_name": r.param_name,
                    "param_value": r.param_value,
                    "n1": r.n1,
                    "n2": r.n2,
                    "R": r.R,
                    "B": self.B,
                    "alpha": self.alpha,
                    "reps": self.repetitions,
                    "reject_rate": r.reject_rate,
                    "se": r.se,
                    "mean_stat": r.mean_stat,
                    "mean_time_s": r.mean_time_s,
                    "seed": self.seed,
                }
            )
        return out


def _resolve_estimator(est: EstimatorId, r_policy: RPolicy, n: int, d: int):
    """Effective estimator and display label under the R policy."""
    if not est.is_rff or r_policy.kind == "fixed":
        return est, est.label()
    if r_policy.kind == "linear-in-n":
        return EstimatorId(est.tag, R=n), f"{est.tag}(R=n)"
    pol = theory_parameter_policy("l2-rate", n=n, d=d, s=r_policy.s)
    return EstimatorId(est.tag, R=pol.R), f"{est.tag}(R=l2)"


def _resolve_bandwidth(policy: BandwidthPolicy, z, n: int, d: int) -> KernelSpec:
    if policy.kind == "median-heuristic":
        return median_heuristic(z)
    if policy.kind in ("fixed", "theory-MMD"):
        return KernelSpec(np.full(d, policy.lam))
    pol = theory_parameter_policy("l2-rate", n=n, d=d, s=policy.s)
    return KernelSpec(np.full(d, pol.lam))


def _sweep_point(cfg: ExperimentConfig, value):
    if cfg.sweep_name == "n":
        return cfg.scenario, int(value), int(value)
    return cfg.scenario.with_param(cfg.sweep_name, value), cfg.n1, cfg.n2


def _run_rep(args):
    """One repetition at one grid point; returns per-estimator outcomes."""
    cfg, scen, n1, n2, gi, rep, store = args
    stream = derive_stream(cfg.seed, f"power/{scen.id}/{cfg.sweep_name}/{gi}/{rep}")
    x, y = sample_scenario(scen, n1, n2, stream.child("data"), store)
    z = validate_pair(x, y)
    n = min(n1, n2)
    spec = _resolve_bandwidth(cfg.bandwidth_policy, z, n, z.d)
    out = []
    for idx, est in enumerate(cfg.estimators):
        eff, _ = _resolve_estimator(est, cfg.r_policy, n, z.d)
        freqs = None
        if eff.is_rff:
            freqs = sample_frequencies(spec, eff.R, stream.child(f"freqs/{idx}"))
        plan = PermutationPlan(
            B=cfg.B, rng=stream.child(f"perm/{idx}"), alpha=cfg.alpha, keep_permuted=False
        )
        res = permute_and_evaluate(z, eff, spec, freqs, plan)
        out.append(
            (
                bool(res.reject),
                float(res.statistic),
                res.elapsed.featurize_s + res.elapsed.statistic_s,
            )
        )
    return out


def run_power_sweep(
    cfg: ExperimentConfig,
    mnist_store: MnistStore | None = None,
    threads: int = 1,
) -> ExperimentRecord:
    """Estimate rejection rates across the sweep grid.

    Every repetition draws fresh data, fresh frequencies, and fresh
    permutations from streams derived from (seed, scenario, grid index,
    repetition index), so results do not depend on scheduling order.
    """
    record = ExperimentRecord(
        scenario=cfg.scenario.id,
        B=cfg.B,
        alpha=cfg.alpha,
        repetitions=cfg.repetitions,
        seed=cfg.seed,
        config_echo=cfg.echo(),
    )
    for gi, value in enumerate(cfg.sweep_values):
        scen, n1, n2 = _sweep_point(cfg, value)
        jobs = [(cfg, scen, n1, n2, gi, rep, mnist_store) for rep in range(cfg.repetitions)]
        if threads > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                chunk = max(1, cfg.repetitions // (threads * 8))
                results = list(pool.map(_run_rep, jobs, chunksize=chunk))
        else:
            results = [_run_rep(j) for j in jobs]
        n = min(n1, n2)
        for idx, est in enumerate(cfg.estimators):
            eff, label = _resolve_estimator(est, cfg.r_policy, n, _scenario_dim(scen, mnist_store))
            rejects = np.array([r[idx][0] for r in results], dtype=float)
            stats = np.array([r[idx][1] for r in results])
            times = np.array([r[idx][2] for r in results])
            rate = float(rejects.mean())
            record.rows.append(
                PointResult(
                    estimator=label,
                    param_name=cfg.sweep_name,
                    param_value=float(value),
                    n1=n1,
                    n2=n2,
                    R=eff.R,
                    reject_rate=rate,
                    se=math.sqrt(rate * (1.0 - rate) / cfg.repetitions),
                    mean_stat=float(stats.mean()),
                    mean_time_s=float(times.mean()),
                )
            )
    return record


def _scenario_dim(scen: ScenarioSpec, store: MnistStore | None) -> int:
    if scen.id in ("Gauss1dMean", "Gauss1dVar", "PolyaCF"):
        return 1
    if scen.id in ("GaussHighDimMean", "GaussHighDimVar", "PerturbedUniform"):
        return int(scen.params["d"])
    if store is not None:
        return 49 if scen.params.get("downsampled") else store.rows * store.cols
    return 1


def _eval_statistic_once(est: EstimatorId, x, y, spec, freqs):
    if est.tag == "QuadB":
        return mmd2_biased(x, y, spec)
    if est.tag == "QuadU":
        return mmd2_unbiased(x, y, spec)
    if est.tag == "RffB":
        return rff_mmd2_streamed(x, y, freqs, spec.kappa0, unbiased=False)
    if est.tag == "RffU":
        return rff_mmd2_streamed(x, y, freqs, spec.kappa0, unbiased=True)
    if est.tag == "Linear":
        return mmd2_linear(x, y, spec)
    if est.tag == "Block":
        return mmd2_block(x, y, spec, est.b)
    return mmd2_incomplete(x, y, spec, est.Rprime, derive_stream(0, "bench-design"))


def run_timing_bench(
    sizes: list[int],
    estimators: list[EstimatorId],
    reps: int = 5,
    seed: int = 0,
) -> ExperimentRecord:
    """Median wall-clock per single statistic evaluation, per size.

    Data are mean-shifted univariate Gaussians with n1 = n2 = size; the
    bandwidth is selected once per size outside the timed section, a
    warm-up evaluation is discarded, and featurization is inside the timed
    section for the feature-based estimators.
    """
    if sorted(sizes) != list(sizes):
        raise ValueError("sizes must be ascending")
    record = ExperimentRecord(
        scenario="TimingBench",
        B=0,
        alpha=float("nan"),
        repetitions=reps,
        seed=seed,
        config_echo={"sizes": list(sizes), "estimators": [e.label() for e in estimators]},
    )
    for n in sizes:
        stream = derive_stream(seed, f"bench/{n}")
        gen = stream.generator()
        x = SampleSet(gen.standard_normal((n, 1)))
        y = SampleSet(gen.standard_normal((n, 1)) + 0.15)
        spec = median_heuristic(validate_pair(x, y))
        for est in estimators:
            freqs = None
            if est.is_rff:
                freqs = sample_frequencies(spec, est.R, stream.child(f"freqs/{est.label()}"))
            _eval_statistic_once(est, x, y, spec, freqs)  # warm-up
            elapsed = []
            last = float("nan")
            for _ in range(reps):
                t0 = time.perf_counter()
                last = _eval_statistic_once(est, x, y, spec, freqs)
                elapsed.append(time.perf_counter() - t0)
            record.rows.append(
                PointResult(
                    estimator=est.label(),
                    param_name="n",
                    param_value=float(n),
                    n1=n,
                    n2=n,
                    R=est.R,
                    reject_rate=None,
                    se=None,
                    mean_stat=float(last),
                    mean_time_s=float(np.median(elapsed)),
                )
            )
    return record


def spectral_mass_in_band(lam: float, half_width: float) -> float:
    """Mass a Normal(0, 2/lam^2) frequency puts inside [-w, w]."""
    sigma = math.sqrt(2.0) / lam
    return 2.0 * norm.cdf(half_width / sigma) - 1.0


def run_inconsistency_demo(
    delta1: float,
    delta2: float,
    R: int | None,
    n_grid: list[int],
    bandwidth: float,
    cfg: ExperimentConfig,
) -> ExperimentRecord:
    """Rejection rates across growing n for a band-limited CF pair.

    The two sampled distributions have characteristic functions that agree
    (both vanish) outside [-I, I] with I = 1/min(delta1, delta2). The
    bandwidth must put less than 1% of the spectral measure inside that
    band, so a fixed number of frequencies almost never sees the
    difference and the test's power stays near its level. Passing
    ``R=None`` grows R with n instead, which restores power. Quadratic
    estimators in the menu use the config's bandwidth policy (median
    heuristic by default) rather than the pinned spectral bandwidth.
    """
    if delta1 == delta2:
        raise ValueError("the two scale parameters must differ")
    band = 1.0 / min(delta1, delta2)
    mass = spectral_mass_in_band(bandwidth, band)
    if mass >= 0.01:
        raise SpectralMassTooCentral(
            f"bandwidth {bandwidth} puts {mass:.4f} of the spectral mass in "
            f"[-{band:.3g}, {band:.3g}]; need < 0.01"
        )
    scenario = ScenarioSpec("PolyaCF", {"delta_x": delta1, "delta_y": delta2})
    merged = ExperimentRecord(
        scenario=scenario.id,
        B=cfg.B,
        alpha=cfg.alpha,
        repetitions=cfg.repetitions,
        seed=cfg.seed,
        config_echo={
            "delta1": delta1,
            "delta2": delta2,
            "R": R,
            "bandwidth": bandwidth,
            "n_grid": list(n_grid),
            "base": cfg.echo(),
        },
    )
    for est in cfg.estimators:
        if est.is_rff:
            arm = ExperimentConfig(
                scenario=scenario,
                estimators=(EstimatorId(est.tag, R=R if R is not None else 1),),
                sweep_name="n",
                sweep_values=tuple(n_grid),
                n1=cfg.n1,
                n2=cfg.n2,
                B=cfg.B,
                alpha=cfg.alpha,
                repetitions=cfg.repetitions,
                seed=cfg.seed,
                bandwidth_policy=BandwidthPolicy("fixed", lam=bandwidth),
                r_policy=RPolicy("fixed") if R is not None else RPolicy("linear-in-n"),
            )
        else:
            arm = ExperimentConfig(
                scenario=scenario,
                estimators=(est,),
                sweep_name="n",
                sweep_values=tuple(n_grid),
                n1=cfg.n1,
                n2=cfg.n2,
                B=cfg.B,
                alpha=cfg.alpha,
                repetitions=cfg.repetitions,
                seed=cfg.seed,
                bandwidth_policy=cfg.bandwidth_policy,
            )
        merged.rows.extend(run_power_sweep(arm).rows)
    return merged


def emit_results(rec: ExperimentRecord, path, format: str = "csv") -> None:
    """Write a record as CSV (fixed column schema) or JSON (config echo + rows)."""
    if format == "csv":
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(CSV_COLUMNS)
            for row in rec.row_dicts():
                writer.writerow(["" if row[c] is None else row[c] for c in CSV_COLUMNS])
        return
    if format == "json":
        with open(path, "w") as f:
            json.dump({"config": rec.config_echo, "rows": rec.row_dicts()}, f, indent=2)
            f.write("\n")
        return
    raise ValueError(f"format must be 'csv' or 'json', got {format!r}")
