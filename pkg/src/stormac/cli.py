"""Command-line front end: ``gen-mdp``, ``run``, ``verify`` and ``rate``.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 verification failure,
4 every seed diverged.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import experiment as ex
from .buffer import ReplayBuffer, drift_bound_check
from .diagnostics import fit_rate_arrays
from .errors import FitError, ParameterError
from .mdp import random_mdp, save_mdp, softmax_policy
from .oracles import optimal_return
from .sampling import AUX_STREAM, RngStream, Transition
from .verification import (
    check_bellman_rewrite,
    check_vk_identity,
    estimate_exploration_lambda,
    hadamard_worst_excess,
    ode_worst_gap,
)

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_VERIFY, EXIT_DIVERGED = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# flag -> ExperimentConfig field
_CONFIG_FLAGS = {
    "S": "S", "A": "A", "gamma": "gamma", "mdp_seed": "mdp_seed", "algo": "algo",
    "iterations": "iterations", "seeds": "seeds", "seed_base": "seed_base", "cb": "c_b",
    "eta_scale": "eta_scale", "beta_scale": "beta_scale", "nu_rate": "nu_rate",
    "log_every": "log_every", "out": "output_path", "workers": "workers",
    "reward_range": "reward_range", "mdp": "mdp_path",
}


def _add_config_flags(p):
    p.add_argument("--config", help="key = value file; flags override its values")
    p.add_argument("--S", type=int)
    p.add_argument("--A", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--mdp-seed", type=int)
    p.add_argument("--algo", choices=("storm", "baseline", "both"))
    p.add_argument("--iterations", type=int)
    p.add_argument("--seeds", type=int)
    p.add_argument("--seed-base", type=int)
    p.add_argument("--cb", type=float)
    p.add_argument("--eta-scale", type=float)
    p.add_argument("--beta-scale", type=float)
    p.add_argument("--nu-rate", type=float)
    p.add_argument("--log-every", type=int)
    p.add_argument("--out")
    p.add_argument("--workers", type=int, help="worker processes for seeds (output does not depend on it)")
    p.add_argument("--reward-range", choices=("unit", "symmetric"))
    p.add_argument("--mdp", help="load the MDP from a gen-mdp file instead of generating it")


def build_parser():
    p = _Parser(prog="stormac", description="Tabular STORM actor-critic laboratory")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-mdp", help="write a random MDP file, print J* and an exploration estimate")
    _add_config_flags(g)
    g.add_argument("--lambda-trials", type=int, default=1000)

    r = sub.add_parser("run", help="train over seeds and write result CSVs")
    _add_config_flags(r)
    r.add_argument("--figures", action="store_true", help="also render PNG figures next to the CSV")

    v = sub.add_parser("verify", help="run the deterministic identity and inequality checks")
    v.add_argument("--trials", type=int, default=1000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--corrupt-gamma", type=float, default=None, help=argparse.SUPPRESS)

    t = sub.add_parser("rate", help="fit the log-log decay slope of a cross-seed mean")
    t.add_argument("results_csv")
    t.add_argument("--field", default="a")
    t.add_argument("--tail-fraction", type=float, default=0.5)
    t.add_argument("--algo", default=None)
    return p


def config_from_args(args) -> ex.ExperimentConfig:
    values = {}
    if args.config:
        values.update(ex.parse_config_text(Path(args.config).read_text(encoding="utf-8")))
    for flag, field in _CONFIG_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[field] = v
    valid = {f.name for f in fields(ex.ExperimentConfig)}
    return ex.ExperimentConfig(**{k: v for k, v in values.items() if k in valid})


def cmd_gen_mdp(config: ex.ExperimentConfig, lambda_trials: int = 1000, out=None) -> int:
    out = out or sys.stdout
    mdp = random_mdp(config.S, config.A, config.gamma, config.mdp_seed, config.reward_range)
    save_mdp(mdp, config.output_path)
    j_star, greedy = optimal_return(mdp)
    lam = estimate_exploration_lambda(mdp, lambda_trials, RngStream(config.mdp_seed, AUX_STREAM))
    print(f"wrote {config.output_path}", file=out)
    print(f"J* = {j_star:.12g}", file=out)
    print(f"greedy actions = {' '.join(map(str, greedy))}", file=out)
    print(f"exploration lambda estimate ({lambda_trials} trials) = {lam:.6g}", file=out)
    return EXIT_OK


def cmd_run(config: ex.ExperimentConfig, figures: bool = False, out=None) -> int:
    out = out or sys.stdout
    results = ex.run_experiment(config)
    rows = ex.aggregate_rows(results)
    ex.write_text(config.output_path, ex.results_csv_text(results))
    ex.write_text(config.aggregate_path, ex.aggregate_csv_text(rows))
    print(f"wrote {config.output_path} and {config.aggregate_path}", file=out)
    if figures and rows:
        from .report import render_figures

        for path in render_figures(rows, config.output_path):
            print(f"wrote {path}", file=out)
    final = {}
    for row in rows:
        final[row["algo"]] = row
    for algo, row in final.items():
        print(f"{algo}: k={row['k']} mean a={row['a_mean']:.6g} (std {row['a_std']:.3g}, "
              f"{row['n_seeds']} seeds, {row['n_diverged']} diverged)", file=out)
    diverged = [r for r in results if r.diverged_at is not None]
    for r in diverged:
        print(f"{r.algo} seed {r.seed} diverged at iteration {r.diverged_at}", file=out)
    if len(diverged) == len(results):
        return EXIT_DIVERGED
    return EXIT_OK


def run_verification(trials: int, seed: int, corrupt_gamma: float | None = None):
    """Every deterministic check; returns a list of (name, passed, worst residual).

    ``corrupt_gamma`` is a test hook: it is added to gamma on the right-hand
    side of the Bellman rewrite so that check must fail.
    """
    rng = RngStream(seed, AUX_STREAM)
    gen = rng.generator()
    bell = vk = 0.0
    for i in range(trials):
        S, A = int(gen.integers(1, 11)), int(gen.integers(1, 6))
        gamma = float(gen.choice([0.0, 0.5, 0.9, 0.99]))
        mdp = random_mdp(S, A, gamma, seed=[seed, i], reward_range="symmetric")
        pi = softmax_policy(gen.uniform(-3, 3, size=(S, A)))
        q = gen.uniform(-1 / (1 - gamma), 1 / (1 - gamma), size=(S, A))
        rhs_gamma = None if corrupt_gamma is None else gamma + corrupt_gamma
        bell = max(bell, check_bellman_rewrite(mdp, pi, q, rhs_gamma=rhs_gamma))
        b = gen.exponential(size=(S, A))
        vk = max(vk, check_vk_identity(mdp, pi, q, b / b.sum()))
    checks = [("bellman_rewrite", bell < 1e-9, bell), ("vk_identity", vk < 1e-9, vk)]

    excess = hadamard_worst_excess(trials * 10, 50, rng)
    checks.append(("hadamard_norm", excess <= 1e-12, excess))

    worst_drift = 0.0
    drift_ok = True
    for c_b in (0.1, 0.5, 1.0):
        buf = ReplayBuffer(10, 5, c_b)
        before = None
        for _ in range(trials * 10):
            buf.push(Transition(int(gen.integers(10)), int(gen.integers(5)), int(gen.integers(10))))
            after = buf.distribution()
            if before is not None:
                worst_drift = max(worst_drift, float(np.linalg.norm(after - before)) * len(buf) / 2.0)
                drift_ok &= drift_bound_check(before, after, len(buf))
            before = after
    checks.append(("buffer_drift", drift_ok, worst_drift))

    gap = -np.inf
    for omega1 in (0.1, 0.3, 0.5, 0.7, 0.9):
        for frac in (1e-6, 0.25, 0.5, 0.9):
            x0 = 1.0 / (2.0 * omega1)
            gap = max(gap, ode_worst_gap(x0, omega1, frac * omega1, x0, 10 * trials))
    checks.append(("ode_domination", gap <= 1e-12, gap))
    return checks


def cmd_verify(trials: int = 1000, seed: int = 0, corrupt_gamma=None, out=None) -> int:
    out = out or sys.stdout
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    checks = run_verification(trials, seed, corrupt_gamma)
    for name, ok, worst in checks:
        print(f"{name:<16} {'PASS' if ok else 'FAIL'}  worst={worst:.3e}", file=out)
    return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_VERIFY


def cmd_rate(results_csv, field: str = "a", tail_fraction: float = 0.5, algo=None, out=None) -> int:
    out = out or sys.stdout
    rows = ex.read_csv(results_csv)
    curves = ex.mean_curve(rows, field, algo)
    if not curves:
        raise ParameterError("no matching rows")
    for name, (ks, means) in curves.items():
        slope, intercept = fit_rate_arrays(ks, means, tail_fraction)
        label = name or "-"
        print(f"{label}: slope={slope:.6g} intercept={intercept:.6g} field={field} tail={tail_fraction}", file=out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "gen-mdp":
            return cmd_gen_mdp(config_from_args(args), args.lambda_trials)
        if args.command == "run":
            return cmd_run(config_from_args(args), args.figures)
        if args.command == "verify":
            return cmd_verify(args.trials, args.seed, args.corrupt_gamma)
        return cmd_rate(args.results_csv, args.field, args.tail_fraction, args.algo)
    except (UsageError, ParameterError, FitError) as exc:
        print(f"stormac: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"stormac: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
