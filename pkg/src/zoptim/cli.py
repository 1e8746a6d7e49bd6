"""Command-line front end.

Subcommands: run, sweep, robustness, verify-moments, verify-bounds, fig2.
Every subcommand takes --config (JSON file) and --out (directory). Exit
codes: 0 success, 2 bad config or arguments, 3 numeric failure or failed
verification, 4 sweep in which every run diverged.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import analysis, harness
from .errors import ConfigError, PreconditionError, ZoptimError
from .objectives import BlockQuadratic, equal_energy_point
from .perturb import DISTRIBUTIONS


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc


def _write_json(payload, out_dir, name):
    path = os.path.join(out_dir, name)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=str)
        fh.write("\n")
    return path


def cmd_run(args):
    config = harness.ExperimentConfig.from_dict(_load_json(args.config))
    traces = harness.run(config)
    os.makedirs(args.out, exist_ok=True)
    for trace in traces:
        harness.write_trace_csv(trace, os.path.join(args.out, f"trace_seed{trace.seed}.csv"))
    harness.write_summary(traces, os.path.join(args.out, "summary.json"))
    if any(trace.diverged for trace in traces):
        print("numeric failure: at least one seed diverged", file=sys.stderr)
        return 3
    return 0


def _sweep(args):
    config = harness.ExperimentConfig.from_dict(_load_json(args.config))
    sweep = harness.coarse_fine_sweep(config)
    os.makedirs(args.out, exist_ok=True)
    return config, sweep


def cmd_sweep(args):
    config, sweep = _sweep(args)
    payload = {
        "metric": sweep.metric,
        "best_eta": sweep.best_eta,
        "bracket": list(sweep.bracket),
        "all_diverged": sweep.all_diverged,
        "rows": sweep.rows,
    }
    _write_json(payload, args.out, "sweep.json")
    if sweep.all_diverged:
        print("every run diverged at every step size", file=sys.stderr)
        return 4
    for trace in sweep.traces_by_eta[sweep.best_eta]:
        harness.write_trace_csv(trace, os.path.join(args.out, f"trace_seed{trace.seed}.csv"))
    return 0


def cmd_robustness(args):
    config, sweep = _sweep(args)
    if sweep.all_diverged:
        _write_json({"all_diverged": True}, args.out, "robustness.json")
        print("every run diverged at every step size", file=sys.stderr)
        return 4
    payload = {
        "best_eta": sweep.best_eta,
        "curve": harness.robustness_curve(sweep),
        "width": harness.robust_log_width(sweep),
    }
    _write_json(payload, args.out, "robustness.json")
    return 0


def cmd_verify_moments(args):
    raw = _load_json(args.config)
    unknown = set(raw) - {"cases"}
    if unknown:
        raise ConfigError(f"unknown verify-moments keys: {sorted(unknown)}")
    if "cases" not in raw or not raw["cases"]:
        raise ConfigError("verify-moments config requires a non-empty 'cases' list")
    results = []
    ok = True
    for case in raw["cases"]:
        allowed = {"g", "q", "distribution", "n", "tol", "seed"}
        unknown = set(case) - allowed
        if unknown:
            raise ConfigError(f"unknown moment-case keys: {sorted(unknown)}")
        if "g" not in case:
            raise ConfigError("each moment case requires g")
        dist = case.get("distribution", "gaussian")
        if dist not in DISTRIBUTIONS:
            raise ConfigError(f"distribution must be one of {DISTRIBUTIONS}, got {dist!r}")
        report = analysis.moment_report(
            np.asarray(case["g"], dtype=np.float64),
            int(case.get("q", 1)),
            dist,
            int(case.get("n", 200_000)),
            seed=int(case.get("seed", 0)),
        )
        tol = float(case.get("tol", 0.05))
        passed = report.max_rel_err <= tol
        ok = ok and passed
        results.append(
            {
                "g": list(map(float, case["g"])),
                "q": int(case.get("q", 1)),
                "distribution": dist,
                "n": report.n_trials,
                "predicted": report.predicted.tolist(),
                "empirical": report.empirical.tolist(),
                "max_rel_err": report.max_rel_err,
                "tol": tol,
                "pass": passed,
            }
        )
    os.makedirs(args.out, exist_ok=True)
    _write_json({"cases": results, "all_pass": ok}, args.out, "moments.json")
    if not ok:
        print("moment verification failed", file=sys.stderr)
        return 3
    return 0


def _bound_side(raw, quad, side, label):
    d = quad.d
    q = int(raw.get("q", 10))
    epsilon = float(raw.get("epsilon", 1e-6))
    distribution = raw.get("distribution", "gaussian")
    sigma = float(raw.get("sigma", 0.0))
    noise_seed = int(raw.get("noise_seed", 0))
    f0 = float(raw["f0"])
    radius = float(raw["radius"])
    n_seeds = int(raw.get("seeds", 10))
    G = quad.smoothness * radius
    eta = float(side["eta"])
    T = int(side["T"])

    runs = []
    for seed in range(n_seeds):
        x0 = equal_energy_point(quad, f0, seed)
        runs.append(
            analysis.bound_check_run(
                quad, label, eta, q, epsilon, distribution, sigma, noise_seed,
                x0, T, seed,
                beta=float(side.get("beta", 0.999)),
                zeta=float(side.get("zeta", 1.0)),
                radius=radius,
            )
        )
    if label == "meazo":
        constants = analysis.theorem_constants(
            d, q, epsilon, quad.smoothness, sigma, G,
            float(side.get("beta", 0.999)), float(side.get("zeta", 1.0)),
        )
        bound = analysis.meazo_bound(constants, f0, eta, T, epsilon, quad.smoothness)
    else:
        bound = analysis.zosgd_bound(d, q, epsilon, quad.smoothness, sigma, eta, T, f0)
    empirical = float(np.mean([r["avg_grad_norm_sq"] for r in runs]))
    within = all(r.get("within_radius", False) and not r["diverged"] for r in runs)
    passed = within and math.isfinite(empirical) and empirical <= bound
    return {
        "optimizer": label,
        "eta": eta,
        "T": T,
        "seeds": n_seeds,
        "bound": bound,
        "empirical_mean": empirical,
        "margin": bound / empirical if empirical > 0 else math.inf,
        "all_within_radius": within,
        "pass": passed,
    }


def cmd_verify_bounds(args):
    raw = _load_json(args.config)
    allowed = {
        "d", "regime", "quad_seed", "q", "epsilon", "distribution", "sigma",
        "noise_seed", "f0", "radius", "seeds", "meazo", "zosgd", "reduction",
    }
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown verify-bounds keys: {sorted(unknown)}")
    for key in ("d", "f0", "radius", "meazo", "zosgd", "reduction"):
        if key not in raw:
            raise ConfigError(f"verify-bounds config requires {key!r}")
    quad = BlockQuadratic(
        d=int(raw["d"]),
        regime=raw.get("regime", "heterogeneous"),
        seed=int(raw.get("quad_seed", 0)),
    )

    sides = [
        _bound_side(raw, quad, raw["meazo"], "meazo"),
        _bound_side(raw, quad, raw["zosgd"], "zo-sgd"),
    ]

    red = raw["reduction"]
    zb = analysis.zosgd_bound(
        int(red["d"]), float(red["q"]), float(red["epsilon"]), float(red["L"]),
        float(red["sigma"]), float(red["eta"]), int(red["T"]), float(red["f0"]),
    )
    cb = analysis.classical_sgd_bound(
        float(red["L"]), float(red["sigma"]), float(red["eta"]), int(red["T"]),
        float(red["f0"]),
    )
    rel = abs(zb - cb) / cb
    red_pass = rel <= float(red.get("tol", 1e-6))
    ok = red_pass and all(s["pass"] for s in sides)

    os.makedirs(args.out, exist_ok=True)
    _write_json(
        {
            "sides": sides,
            "reduction": {
                "two_point_bound": zb,
                "classical_bound": cb,
                "rel_err": rel,
                "pass": red_pass,
            },
            "all_pass": ok,
        },
        args.out,
        "bounds.json",
    )
    if not ok:
        print("bound verification failed", file=sys.stderr)
        return 3
    return 0


def cmd_fig2(args):
    raw = _load_json(args.config)
    allowed = {
        "dims", "optimizers", "eta", "q", "threshold", "max_steps", "x0_norm",
        "seed", "regime", "quad_seed", "tail", "epsilon", "beta1", "beta2",
        "zeta", "distribution", "series",
    }
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown fig2 keys: {sorted(unknown)}")
    results = analysis.collapse_study(
        dims=tuple(raw.get("dims", (9, 25, 49, 100, 1024))),
        optimizers=tuple(raw.get("optimizers", ("fo-adam", "zo-adam", "meazo"))),
        eta=float(raw.get("eta", 1e-4)),
        q=int(raw.get("q", 10)),
        threshold=float(raw.get("threshold", 1e-3)),
        beta1=float(raw.get("beta1", 0.9)),
        beta2=float(raw.get("beta2", 0.999)),
        zeta=float(raw.get("zeta", 1e-8)),
        epsilon=float(raw.get("epsilon", 1e-6)),
        distribution=raw.get("distribution", "gaussian"),
        x0_norm=float(raw.get("x0_norm", 0.3)),
        seed=int(raw.get("seed", 0)),
        max_steps=int(raw.get("max_steps", 200_000)),
        tail=int(raw.get("tail", 100)),
        regime=raw.get("regime", "heterogeneous"),
        quad_seed=int(raw.get("quad_seed", 0)),
    )
    os.makedirs(args.out, exist_ok=True)
    rows = []
    for res in results:
        vhat = res["vhat_final"]
        rows.append(
            {
                "d": res["d"],
                "optimizer": res["optimizer"],
                "steps_to_threshold": res["steps_to_threshold"],
                "terminal_spread": res["terminal_spread"],
                "terminal_target_err": res["terminal_target_err"],
                "final_loss": res["final_loss"],
                "vhat_min": float(np.min(vhat)),
                "vhat_max": float(np.max(vhat)),
                "vhat_mean": float(np.mean(vhat)),
            }
        )
        if raw.get("series"):
            path = os.path.join(args.out, f"fig2_{res['optimizer']}_d{res['d']}.csv")
            with open(path, "w") as fh:
                fh.write("step,loss,grad_norm_sq,spread\n")
                s = res["series"]
                for i in range(len(s["step"])):
                    fh.write(
                        f"{s['step'][i]},{s['loss'][i]!r},"
                        f"{s['grad_norm_sq'][i]!r},{s['spread'][i]!r}\n"
                    )
    _write_json({"rows": rows}, args.out, "fig2.json")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="zoptim",
        description="Zeroth-order optimization experiments and verifications.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "run": (cmd_run, "run one experiment config across its seeds"),
        "sweep": (cmd_sweep, "coarse-to-fine step-size search"),
        "robustness": (cmd_robustness, "step-size robustness curve around the sweep winner"),
        "verify-moments": (cmd_verify_moments, "check closed-form second moments by Monte Carlo"),
        "verify-bounds": (cmd_verify_bounds, "check stationarity bounds on trajectories"),
        "fig2": (cmd_fig2, "second-moment collapse study across dimensions"),
    }
    for name, (fn, help_text) in commands.items():
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="path to a JSON config")
        cmd.add_argument("--out", required=True, help="output directory")
        cmd.set_defaults(func=fn)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PreconditionError as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return 3
    except ZoptimError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
