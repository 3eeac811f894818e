"""Command-line front end: single tests, power sweeps, benches, and demos."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .core import SampleSet, derive_stream, validate_pair
from .estimators import EstimatorId
from .harness import (
    ExperimentConfig,
    config_from_dict,
    emit_results,
    run_inconsistency_demo,
    run_power_sweep,
    run_timing_bench,
    theory_parameter_policy,
)
from .kernels import KernelSpec, median_heuristic, sample_frequencies
from .permutation import PermutationPlan, permute_and_evaluate
from .scenarios import ScenarioSpec, load_mnist


def _parse_estimator(text: str) -> EstimatorId:
    tag, _, arg = text.partition(":")
    if tag in ("RffB", "RffU"):
        return EstimatorId(tag, R=int(arg)) if arg else EstimatorId(tag, R=200)
    if tag == "Block":
        return EstimatorId(tag, b=int(arg)) if arg else _die("Block needs a size, e.g. Block:14")
    if tag == "Incomplete":
        return EstimatorId(tag, Rprime=int(arg)) if arg else EstimatorId(tag, Rprime=100)
    if arg:
        _die(f"{tag} takes no parameter")
    return EstimatorId(tag)


def _die(msg: str):
    raise SystemExit(f"error: {msg}")


def _read_matrix(path: str, header: bool) -> SampleSet:
    data = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)
    return SampleSet(data)


def _cmd_test(args) -> int:
    x = _read_matrix(args.x_csv, args.header)
    y = _read_matrix(args.y_csv, args.header)
    z = validate_pair(x, y)
    if args.bandwidth == "median":
        spec = median_heuristic(z)
    else:
        spec = KernelSpec(np.full(z.d, float(args.bandwidth)))
    est = _parse_estimator(args.estimator)
    stream = derive_stream(args.seed, "cli-test")
    freqs = None
    if est.is_rff:
        freqs = sample_frequencies(spec, est.R, stream.child("frequencies"))
    plan = PermutationPlan(B=args.B, rng=stream.child("plan"), alpha=args.alpha)
    res = permute_and_evaluate(z, est, spec, freqs, plan)
    payload = {
        "estimator": est.label(),
        "n1": z.n1,
        "n2": z.n2,
        "bandwidth": spec.lam.tolist(),
        "B": args.B,
        "alpha": args.alpha,
        "seed": args.seed,
        "statistic": res.statistic,
        "critical_value": res.critical_value,
        "p_value": res.p_value,
        "reject": res.reject,
        "elapsed": {
            "featurize_s": res.elapsed.featurize_s,
            "statistic_s": res.elapsed.statistic_s,
            "permutations_s": res.elapsed.permutations_s,
        },
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text + "\n")
    else:
        print(text)
    return 0


def _cmd_power(args) -> int:
    with open(args.config) as f:
        raw = json.load(f)
    cfg = config_from_dict(raw)
    if args.seed is not None:
        cfg = ExperimentConfig(**{**_cfg_kwargs(cfg), "seed": args.seed})
    if args.reps is not None:
        cfg = ExperimentConfig(**{**_cfg_kwargs(cfg), "repetitions": args.reps})
    store = None
    if cfg.scenario.id == "MnistMix":
        if not (args.mnist_images and args.mnist_labels):
            _die("MnistMix needs --mnist-images and --mnist-labels")
        store = load_mnist(args.mnist_images, args.mnist_labels)
    rec = run_power_sweep(cfg, mnist_store=store, threads=args.threads)
    _emit(rec, args)
    return 0


def _cfg_kwargs(cfg: ExperimentConfig) -> dict:
    return {
        "scenario": cfg.scenario,
        "estimators": cfg.estimators,
        "sweep_name": cfg.sweep_name,
        "sweep_values": cfg.sweep_values,
        "n1": cfg.n1,
        "n2": cfg.n2,
        "B": cfg.B,
        "alpha": cfg.alpha,
        "repetitions": cfg.repetitions,
        "seed": cfg.seed,
        "bandwidth_policy": cfg.bandwidth_policy,
        "r_policy": cfg.r_policy,
    }


def _cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",")]
    ests = [_parse_estimator(e) for e in args.estimators.split(",")]
    rec = run_timing_bench(sizes, ests, reps=args.reps, seed=args.seed)
    _emit(rec, args)
    return 0


def _cmd_demo_inconsistency(args) -> int:
    n_grid = [int(s) for s in args.n_grid.split(",")]
    R = None if args.R == "n" else int(args.R)
    ests = tuple(_parse_estimator(e) for e in args.estimators.split(","))
    cfg = ExperimentConfig(
        scenario=ScenarioSpec("PolyaCF", {"delta_x": args.delta1, "delta_y": args.delta2}),
        estimators=ests,
        sweep_name="n",
        sweep_values=tuple(n_grid),
        n1=n_grid[0],
        n2=n_grid[0],
        B=args.B,
        alpha=args.alpha,
        repetitions=args.reps,
        seed=args.seed,
    )
    rec = run_inconsistency_demo(args.delta1, args.delta2, R, n_grid, args.bandwidth, cfg)
    _emit(rec, args)
    return 0


def _cmd_policy(args) -> int:
    res = theory_parameter_policy(args.policy, n=args.n, d=args.d, s=args.s, R_fixed=args.R)
    print(json.dumps({"policy": args.policy, "n": args.n, "d": args.d, "s": args.s,
                      "R": res.R, "R_raw": res.R_raw, "lam": res.lam}, indent=2))
    return 0


def _emit(rec, args) -> None:
    if args.out:
        emit_results(rec, args.out, format=args.format)
        print(f"wrote {args.out}")
    else:
        for row in rec.row_dicts():
            print(json.dumps(row))


def _add_output_args(p):
    p.add_argument("--out", help="output file path")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rffmmd",
        description="Two-sample kernel tests with random Fourier features",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="run one permutation test on two CSV matrices")
    p.add_argument("x_csv")
    p.add_argument("y_csv")
    p.add_argument("--estimator", default="RffB:200",
                   help="QuadB|QuadU|Linear|RffB:R|RffU:R|Block:b|Incomplete:Rp")
    p.add_argument("--B", type=int, default=199)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bandwidth", default="median", help="'median' or a positive float")
    p.add_argument("--header", action="store_true", help="skip one header line in the CSVs")
    p.add_argument("--out", help="write the result JSON here instead of stdout")
    p.set_defaults(func=_cmd_test)

    p = sub.add_parser("power", help="run a power sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--mnist-images")
    p.add_argument("--mnist-labels")
    _add_output_args(p)
    p.set_defaults(func=_cmd_power)

    p = sub.add_parser("bench", help="time single statistic evaluations")
    p.add_argument("--sizes", default="500,1000,2000,4000")
    p.add_argument("--estimators", default="QuadU,RffU:200")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    _add_output_args(p)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("demo-inconsistency",
                       help="fixed-R power stays near the level for a band-limited CF pair")
    p.add_argument("--delta1", type=float, default=1.0)
    p.add_argument("--delta2", type=float, default=2.0)
    p.add_argument("--R", default="3", help="an integer, or 'n' to grow R with n")
    p.add_argument("--n-grid", default="200,800,3200")
    p.add_argument("--bandwidth", type=float, default=0.0175)
    p.add_argument("--estimators", default="RffU:1")
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--B", type=int, default=199)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    _add_output_args(p)
    p.set_defaults(func=_cmd_demo_inconsistency)

    p = sub.add_parser("policy", help="print the (R, bandwidth) schedule for n, d, s")
    p.add_argument("--policy", choices=("l2-rate", "mmd-rate", "gaussian-fixed"),
                   default="l2-rate")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--R", type=int, default=None)
    p.set_defaults(func=_cmd_policy)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
