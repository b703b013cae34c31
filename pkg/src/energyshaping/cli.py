"""Command-line entry point: simulate, compare, solve, verify.

Exit codes: 0 success, 2 configuration/usage error, 3 divergence,
4 model or design invariant violation, 5 verification tolerance breach.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import minimax
from .config import ConfigError, Experiment, load_experiment
from .controllers import IDA, REDUCED, TH1
from .mechanics import ModelEvaluationError
from .simulate import (DivergenceError, SimConfig, Trajectory, compute_metrics, integrate)
from .verify import run_verification

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_INVARIANT = 4
EXIT_VERIFY = 5


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def write_trajectory_csv(path: Path, traj: Trajectory, n: int, m: int):
    cols = (["t"] + [f"q_{i+1}" for i in range(n)] + [f"p_{i+1}" for i in range(n)]
            + [f"u_{j+1}" for j in range(m)] + [f"uki_{j+1}" for j in range(m)]
            + [f"uovki_{j+1}" for j in range(m)] + ["hd", "phi", "selected"])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for t, s, cb, hd in zip(traj.times, traj.states, traj.controls, traj.hd):
            row = ([_fmt(t)] + [_fmt(v) for v in s.q] + [_fmt(v) for v in s.p]
                   + [_fmt(v) for v in cb.u] + [_fmt(v) for v in cb.u_ki]
                   + [_fmt(v) for v in cb.u_ovki] + [_fmt(hd), _fmt(cb.phi), cb.selected])
            fh.write(",".join(row) + "\n")


def _metrics_dict(metrics, traj: Trajectory) -> dict:
    out = {"peak_u_inf": metrics.peak_u_inf,
           "peak_u_per_channel": metrics.peak_u_per_channel.tolist(),
           "peak_uovki_inf": metrics.peak_uovki_inf,
           "final_q_error": metrics.final_q_error.tolist(),
           "settled": metrics.settled,
           "switch_count": traj.switch_count}
    if metrics.reduction_vs is not None:
        out["reduction_vs"] = metrics.reduction_vs
    return out


def _write_json(path: Path, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_simulate(exp: Experiment, out_dir: Path) -> int:
    traj = integrate(exp.model, exp.design, exp.sim)
    metrics = compute_metrics(traj, exp.design.q_star, exp.settle_tol)
    out_dir.mkdir(parents=True, exist_ok=True)
    if "csv" in exp.formats:
        write_trajectory_csv(out_dir / "trajectory.csv", traj, exp.model.n, exp.model.m)
    if "json" in exp.formats:
        _write_json(out_dir / "metrics.json",
                    {"controller": exp.sim.controller,
                     "metrics": _metrics_dict(metrics, traj),
                     "config": exp.metadata()})
    print(f"{exp.sim.controller}: peak |u|_inf = {metrics.peak_u_inf:.6g}, "
          f"settled = {metrics.settled}")
    return EXIT_OK


def cmd_compare(exp: Experiment, out_dir: Path) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    trajectories: dict[str, Trajectory] = {}
    for name in (IDA, TH1, REDUCED):
        cfg = SimConfig(t_final=exp.sim.t_final, dt=exp.sim.dt,
                        initial_state=exp.sim.initial_state, controller=name,
                        x_threshold=exp.sim.x_threshold,
                        record_stride=exp.sim.record_stride, substeps=exp.sim.substeps)
        trajectories[name] = integrate(exp.model, exp.design, cfg)

    baseline = trajectories[IDA]
    summary = {}
    for name, traj in trajectories.items():
        metrics = compute_metrics(traj, exp.design.q_star, exp.settle_tol,
                                  baseline=None if name == IDA else baseline)
        summary[name] = _metrics_dict(metrics, traj)
        if "csv" in exp.formats:
            write_trajectory_csv(out_dir / f"{name}_trajectory.csv", traj,
                                 exp.model.n, exp.model.m)
        reduction = summary[name].get("reduction_vs")
        extra = "" if reduction is None else f", reduction vs ida = {reduction:.2f}%"
        print(f"{name}: peak |u|_inf = {metrics.peak_u_inf:.6g}, "
              f"settled = {metrics.settled}, switches = {traj.switch_count}{extra}")
    if "json" in exp.formats:
        _write_json(out_dir / "comparison.json",
                    {"controllers": summary, "config": exp.metadata()})
    return EXIT_OK


def _parse_vector(text: str, name: str) -> np.ndarray:
    try:
        v = np.array([float(tok) for tok in text.split(",") if tok.strip() != ""])
    except ValueError:
        raise ConfigError(f"{name} must be a comma-separated list of numbers") from None
    if v.size == 0:
        raise ConfigError(f"{name} is empty")
    return v


def cmd_solve(x_csv: str, b_csv: str) -> int:
    x = _parse_vector(x_csv, "x")
    b = _parse_vector(b_csv, "b")
    if x.size != b.size:
        raise ConfigError(f"x and b must have equal length, got {x.size} and {b.size}")
    try:
        sol = minimax.solve(x, b)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    residual = sol.A @ x - b
    print(json.dumps({"A_s": sol.A_s.tolist(), "A_w": sol.A_w.tolist(),
                      "xi": sol.xi.tolist(), "v": sol.v.tolist(), "phi": sol.phi,
                      "residual_inf": float(np.abs(residual).max())}, indent=2))
    return EXIT_OK


def cmd_verify(exp: Experiment, out_dir: Path, samples: int, seed: int) -> int:
    design_p_threshold = exp.design.params.get("p_threshold", 1e-6)
    report = run_verification(exp.model, exp.design, samples, seed,
                              exp.q_box, exp.p_box,
                              x_threshold=exp.sim.x_threshold,
                              p_threshold=design_p_threshold)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "verify_report.json", report)
    for check in report["checks"]:
        if "skipped" in check:
            print(f"  {check['name']}: skipped ({check['skipped']})")
        else:
            status = "ok" if check["passed"] else "FAIL"
            print(f"  {check['name']}: {status} "
                  f"(deviation {check['max_deviation']:.3e}, tol {check['tolerance']:.3e})")
    if not report["passed"]:
        print(f"verification FAILED, worst offender: {report['worst_offender']}",
              file=sys.stderr)
        return EXIT_VERIFY
    print(f"verification passed ({report['samples']} samples, seed {report['seed']})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="energyshaping",
        description="Energy shaping controllers for Hamiltonian mechanical systems")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one closed-loop simulation")
    p_sim.add_argument("config", help="TOML experiment file")
    p_sim.add_argument("--controller", choices=[IDA, TH1, REDUCED], default=None)
    p_sim.add_argument("--out", default=None, help="output directory")

    p_cmp = sub.add_parser("compare", help="run all three controllers from one config")
    p_cmp.add_argument("config")
    p_cmp.add_argument("--out", default=None)

    p_sol = sub.add_parser("solve", help="solve one constrained min ||Ax-b||_inf instance")
    p_sol.add_argument("x", help="comma-separated entries of x")
    p_sol.add_argument("b", help="comma-separated entries of b")

    p_ver = sub.add_parser("verify", help="run the randomized verification suite")
    p_ver.add_argument("config")
    p_ver.add_argument("--samples", type=int, default=None)
    p_ver.add_argument("--seed", type=int, default=None)
    p_ver.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(args.x, args.b)
        controller = getattr(args, "controller", None)
        exp = load_experiment(args.config, controller=controller)
        out_dir = Path(args.out) if args.out else exp.output_dir
        if args.command == "simulate":
            return cmd_simulate(exp, out_dir)
        if args.command == "compare":
            return cmd_compare(exp, out_dir)
        samples = args.samples if args.samples is not None else exp.verify_samples
        seed = args.seed if args.seed is not None else exp.verify_seed
        return cmd_verify(exp, out_dir, samples, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except ModelEvaluationError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
