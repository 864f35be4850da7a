"""Command-line driver: run single experiments, sweeps, and config checks.

Every run directory is self-describing: ``config.json`` holds the fully
resolved configuration, ``steps.csv`` one row per accepted step,
``summary.json`` the aggregates, and (optionally) ``snapshots.csv`` full
states at a stride.  Nonlinear runs additionally emit
``newton_trace.csv`` with the per-Newton FGMRES targets and residuals.
All floating-point numbers in the emitted tables use 17 significant
digits so they round-trip exactly.
"""

import argparse
import concurrent.futures
import dataclasses
import json
import os
import sys
import traceback

import numpy as np

from .config import RunConfig, parse_config, sweep_cells
from .errors import HbvmError, NonFiniteResidual, SolverFailure, StepSizeUnderflow, ValidationError
from .integrator import integrate
from .problems import build_linear_wave, build_semilinear_wave
from .tableau import build_tableau

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_CONFIG = 2


def _fmt(value):
    """17-significant-digit decimal form (lossless for doubles)."""
    if isinstance(value, (float, np.floating)):
        return f"{value:.17g}"
    return str(value)


def _join(values):
    return ";".join(_fmt(v) for v in values)


def build_problem(config):
    if config.problem == "linear-wave":
        return build_linear_wave(config.N, config.L)
    if config.problem == "semilinear-wave":
        return build_semilinear_wave(config.N, config.L)
    raise ValidationError([f"problem: unknown problem {config.problem!r}"])


STEP_COLUMNS = [
    "step_index", "t", "h_used", "newton_iters", "warmup_iters", "warmup_halvings",
    "fgmres_iters", "matrix_eq_iters", "residual_final", "energy", "halvings_this_step",
]


def _write_steps(path, steps):
    lines = [",".join(STEP_COLUMNS)]
    for i, s in enumerate(steps):
        lines.append(",".join([
            str(i),
            _fmt(s.time),
            _fmt(s.h_used),
            str(s.newton_iters),
            str(s.warmup_iters),
            str(s.warmup_halvings),
            _join(s.fgmres_iters_per_newton),
            _join(s.matrix_eq_iters),
            _fmt(s.residual_final),
            _fmt(s.energy),
            str(s.halvings_this_step),
        ]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_newton_trace(path, steps):
    lines = ["step_index,newton_iter,eta,fgmres_iters,fgmres_residual"]
    for i, s in enumerate(steps):
        for p, (eta, iters, res) in enumerate(
            zip(s.eta_per_newton, s.fgmres_iters_per_newton, s.fgmres_residual_per_newton)
        ):
            lines.append(f"{i},{p},{_fmt(eta)},{iters},{_fmt(res)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_snapshots(path, snapshots):
    lines = []
    for t, y in snapshots:
        lines.append(",".join([_fmt(t)] + [_fmt(v) for v in y]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _agg(values):
    values = list(values)
    if not values:
        return {"min": None, "max": None, "mean": None}
    return {"min": int(np.min(values)), "max": int(np.max(values)), "mean": float(np.mean(values))}


def summarize(result, h0_energy):
    steps = result.steps
    fgmres_all = [n for s in steps for n in s.fgmres_iters_per_newton]
    matrix_all = [n for s in steps for n in s.matrix_eq_iters]
    energies = result.energies
    if h0_energy != 0.0:
        drift = float(np.max(np.abs(energies - h0_energy)) / abs(h0_energy)) if steps else 0.0
    else:
        drift = float(np.max(np.abs(energies))) if steps else 0.0
    return {
        "n_steps": len(steps),
        "t_final": result.t,
        "totals": {
            "newton_iters": int(sum(s.newton_iters for s in steps)),
            "fgmres_iters": int(sum(fgmres_all)),
            "matrix_eq_iters": int(sum(matrix_all)),
            "warmup_iters": int(sum(s.warmup_iters for s in steps)),
            "step_halvings": int(sum(s.halvings_this_step for s in steps)),
        },
        "newton_iters": _agg([s.newton_iters for s in steps]),
        "fgmres_iters": _agg(fgmres_all),
        "matrix_eq_iters": _agg(matrix_all),
        "initial_energy": h0_energy,
        "max_energy_drift": drift,
        "wall_clock": {
            "total_seconds": float(sum(result.wall_times)),
            "mean_seconds_per_step": float(np.mean(result.wall_times)) if result.wall_times else 0.0,
        },
        "error": None,
    }


def _json_default(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    raise TypeError(f"not JSON-serializable: {type(value)}")


def run_experiment(config, problem=None):
    """Execute one configured run and write its output files.

    ``problem`` injects a prebuilt problem object (used by tests for
    synthetic right-hand sides); the configured problem is built
    otherwise.  Returns (exit_code, summary_dict).
    """
    config = config.validate()
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config.json"), "w") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")

    problem = problem if problem is not None else build_problem(config)
    tableau = build_tableau(config.k, config.s)
    y0 = problem.initial_state()
    h0_energy = float(problem.hamiltonian(y0))

    error = None
    try:
        result = integrate(
            problem, tableau, y0, config.T, config.h0,
            stepper=config.stepper,
            matrix_solver=config.matrix_solver,
            matrix_tol=config.matrix_tol,
            newton_abs=config.newton_abs,
            newton_rel=config.newton_rel,
            max_newton=config.max_newton,
            gamma=config.gamma,
            eta_max=config.eta_max,
            h_min=config.h_min,
            h_max=config.h_max,
            snapshot_stride=config.snapshot_stride,
        )
    except (StepSizeUnderflow, SolverFailure, NonFiniteResidual) as exc:
        error = {"type": type(exc).__name__, "message": str(exc)}
        result = None

    if result is not None:
        _write_steps(os.path.join(out, "steps.csv"), result.steps)
        if config.stepper in ("newton-krylov", "simplified-newton"):
            _write_newton_trace(os.path.join(out, "newton_trace.csv"), result.steps)
        if config.snapshot_stride > 0:
            _write_snapshots(os.path.join(out, "snapshots.csv"), result.snapshots)
        summary = summarize(result, h0_energy)
        code = EXIT_OK
    else:
        summary = {"n_steps": 0, "error": error, "initial_energy": h0_energy}
        code = EXIT_SOLVER
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return code, summary


def _run_cell(config):
    code, summary = run_experiment(config)
    return config.output_dir, code, summary


def run_sweep(preset=None, path=None, overrides=None, jobs=1):
    """Run every cell of a sweep; cells are independent and may run in parallel."""
    root, cells = sweep_cells(preset=preset, path=path, overrides=overrides)
    os.makedirs(root, exist_ok=True)
    results = []
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, cells))
    else:
        for config in cells:
            results.append(_run_cell(config))
    worst = max((code for _, code, _ in results), default=EXIT_OK)
    index = {
        "cells": [
            {"dir": os.path.relpath(d, root), "exit_code": c,
             "mean_matrix_eq_iters": (s.get("matrix_eq_iters") or {}).get("mean"),
             "config": dataclasses.asdict(cfg)}
            for (d, c, s), cfg in zip(results, cells)
        ]
    }
    with open(os.path.join(root, "sweep_summary.json"), "w") as fh:
        json.dump(index, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return worst, root, results


def _add_config_flags(parser):
    parser.add_argument("--config", help="JSON file with RunConfig fields")
    parser.add_argument("--preset", help="named experiment preset")
    parser.add_argument("--problem", choices=["linear-wave", "semilinear-wave"])
    parser.add_argument("--N", type=int)
    parser.add_argument("--L", type=float)
    parser.add_argument("--T", type=float)
    parser.add_argument("--h0", type=float)
    parser.add_argument("--h-min", dest="h_min", type=float)
    parser.add_argument("--h-max", dest="h_max", type=float)
    parser.add_argument("--s", type=int)
    parser.add_argument("--k", type=int)
    parser.add_argument("--stepper", choices=["linear", "simplified-newton", "newton-krylov"])
    parser.add_argument("--matrix-solver", dest="matrix_solver", choices=["poly", "extended"])
    parser.add_argument("--matrix-tol", dest="matrix_tol", type=float)
    parser.add_argument("--newton-abs", dest="newton_abs", type=float)
    parser.add_argument("--newton-rel", dest="newton_rel", type=float)
    parser.add_argument("--max-newton", dest="max_newton", type=int)
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--eta-max", dest="eta_max", type=float)
    parser.add_argument("--snapshot-stride", dest="snapshot_stride", type=int)
    parser.add_argument("--output-dir", dest="output_dir")
    parser.add_argument("--seed", type=int)


_FLAG_FIELDS = [
    "problem", "N", "L", "T", "h0", "h_min", "h_max", "s", "k", "stepper",
    "matrix_solver", "matrix_tol", "newton_abs", "newton_rel", "max_newton",
    "gamma", "eta_max", "snapshot_stride", "output_dir", "seed",
]


def _overrides(args):
    return {name: getattr(args, name) for name in _FLAG_FIELDS}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="hbvm",
        description="energy-conserving HBVM(k,s) runs with low-rank stage solvers",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, text in (
        ("run", "run a single configuration"),
        ("sweep", "run a preset or config grid"),
        ("check", "validate a configuration without running"),
    ):
        p = sub.add_parser(verb, help=text)
        _add_config_flags(p)
        if verb == "sweep":
            p.add_argument("--jobs", type=int, default=1, help="parallel sweep cells")
    args = parser.parse_args(argv)

    try:
        if args.verb == "check":
            config = parse_config(args.config, args.preset, _overrides(args))
            print(json.dumps(config.to_dict(), indent=2, sort_keys=True, default=_json_default))
            return EXIT_OK
        if args.verb == "run":
            config = parse_config(args.config, args.preset, _overrides(args))
            code, summary = run_experiment(config)
            print(json.dumps({"output_dir": config.output_dir,
                              "exit_code": code,
                              "error": summary.get("error")}, indent=2))
            return code
        if args.verb == "sweep":
            code, root, results = run_sweep(
                preset=args.preset, path=args.config, overrides=_overrides(args), jobs=args.jobs
            )
            print(json.dumps({"sweep_root": root,
                              "cells": len(results),
                              "exit_code": code}, indent=2))
            return code
    except ValidationError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except HbvmError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        traceback.print_exc()
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
