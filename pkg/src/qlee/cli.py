"""Command-line front end.

Exit codes: 0 success, 1 usage or config error, 2 numerical-guard refusal,
3 FDM divergence.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import experiments as ex
from .config import ConfigError, ExperimentConfig, load_config, serialize_config, with_overrides
from .lee import NonConservativeError, effective_params
from .obstacles import common_prefix_lengths, decompose_mask, obstacle_terms, read_mask
from .statevector import COMPONENTS

REPORT_SCHEMA = 1
EXIT_OK, EXIT_USAGE, EXIT_GUARD, EXIT_DIVERGED = 0, 1, 2, 3


def format_snapshot_csv(field, component: str) -> str:
    """Rows are y (0 first), columns are x; 17 significant digits."""
    arr = field.component(component)
    head = f"# time={float(field.time)!r} component={component} norm_factor={float(field.norm_factor)!r}\n"
    body = "\n".join(",".join(f"{v:.17g}" for v in arr[:, y]) for y in range(arr.shape[1]))
    return head + body + "\n"


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _finite(x):
    return None if x is None or not np.isfinite(x) else x


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    return with_overrides(cfg, tau=args.tau, steps=args.steps, scheme=args.scheme, bc=args.bc,
                          oracle=True if args.oracle else None, output_dir=args.output_dir)


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = cfg.resolve(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dump(args, circuit):
    if args.dump_circuit:
        Path(args.dump_circuit).write_text(circuit.to_text())


def cmd_simulate(args) -> int:
    cfg = _config(args)
    obstacle = cfg.obstacle()
    out = _out_dir(cfg)
    t0 = time.perf_counter()
    run = ex.run_quantum(cfg, obstacle)
    _dump(args, run.circuit)
    snap_dir = out / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    for k, f in enumerate(run.snapshots):
        step = k * cfg.snapshot_every
        for comp in COMPONENTS:
            (snap_dir / f"{comp}_step{step:06d}.csv").write_text(format_snapshot_csv(f, comp))
    report = {
        "schema_version": REPORT_SCHEMA,
        "command": "simulate",
        "config": serialize_config(cfg),
        "times": [f.time for f in run.snapshots],
        "norms": run.norms,
        "zero_sector_max": max(f.zero_sector_norm for f in run.snapshots),
        "imag_residual_max": max(f.imag_residual for f in run.snapshots),
        "obstacle_cells": len(obstacle.cells) if obstacle else 0,
        "obstacle_interior_max": ex.interior_max(run.snapshots, obstacle),
        "gate_counts": ex.count(run.circuit).to_dict(),
        "bound": None,
        "oracle": None,
    }
    params, grid = cfg.params(), cfg.grid()
    if params.conservative and cfg.scheme == "central" and cfg.bc == "dirichlet" and not obstacle:
        report["bound"] = ex.trotter_error_bound(params, grid, cfg.tau)
    if cfg.oracle:
        qubits = 2 + cfg.n_x + cfg.n_y
        if qubits > ex.KRYLOV_ORACLE_QUBITS:
            report["oracle"] = {"enabled": False, "reason": f"{qubits} qubits exceed the oracle guard"}
        else:
            exact = ex.run_oracle(cfg, report["times"], obstacle)
            report["oracle"] = {
                "enabled": True,
                "l2_p": [float(np.linalg.norm(f.p - e.p)) for f, e in zip(run.snapshots, exact)],
            }
    _write_json(out / "report.json", report)
    _write_json(out / "timing.json", {"wall_time_s": time.perf_counter() - t0})
    print(f"simulate: {len(run.snapshots)} snapshots written to {snap_dir}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _config(args)
    obstacle = cfg.obstacle()
    out = _out_dir(cfg)
    t0 = time.perf_counter()
    res = ex.compare(cfg, obstacle)
    _dump(args, res["quantum"].circuit)
    lines = ["time,l2_quantum,l2_fdm"]
    lines += [",".join(repr(float(r[k])) for k in ("time", "l2_quantum", "l2_fdm")) for r in res["rows"]]
    (out / "compare.csv").write_text("\n".join(lines) + "\n")
    report = {
        "schema_version": REPORT_SCHEMA,
        "command": "compare",
        "config": serialize_config(cfg),
        "times": [r["time"] for r in res["rows"]],
        "l2_quantum": [r["l2_quantum"] for r in res["rows"]],
        "l2_fdm": [_finite(r["l2_fdm"]) for r in res["rows"]],
        "norms": res["quantum"].norms,
        "fdm_tau": cfg.fdm_tau,
        "fdm_diverged": res["fdm_diverged"],
        "fdm_diverged_at": res["fdm_diverged_at"],
        "fdm_at_quantum_tau": res["fdm_at_quantum_tau"],
    }
    _write_json(out / "compare_report.json", report)
    _write_json(out / "timing.json", {"wall_time_s": time.perf_counter() - t0})
    for r in res["rows"]:
        print(f"t={r['time']:.4g}  quantum={r['l2_quantum']:.6g}  fdm={r['l2_fdm']:.6g}")
    if res["fdm_diverged"]:
        print(f"FDM with tau={cfg.fdm_tau} diverged at t={res['fdm_diverged_at']}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_gate_count(args) -> int:
    cfg = _config(args)
    params = cfg.params()
    if not params.conservative:
        # counts only depend on the block pattern, which the unitary factor shares
        params = effective_params(params)
    ns = range(args.n_min, args.n_max + 1)
    report = ex.gate_count_table(ns, cfg.scheme, cfg.bc, params)
    report["schema_version"] = REPORT_SCHEMA
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.output:
        Path(args.output).write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_bound(args) -> int:
    cfg = _config(args)
    report = ex.bound_report(cfg.params(), cfg.grid(), cfg.tau, measure=args.measure)
    report["schema_version"] = REPORT_SCHEMA
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_obstacle_check(args) -> int:
    cfg = _config(args)
    if args.n is not None:
        cfg = with_overrides(cfg, n_x=args.n, n_y=args.n)
    grid = cfg.grid()
    if args.mask:
        try:
            text = Path(args.mask).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read mask {args.mask}: {exc.strerror}") from None
        try:
            obstacle = decompose_mask(read_mask(text, grid), grid)
        except ValueError as exc:
            raise ConfigError(f"malformed mask {args.mask}: {exc}") from None
    else:
        obstacle = cfg.obstacle()
    cells = list(obstacle.cells) if obstacle else []
    per_cell = []
    for cell in cells:
        entry = {"x_prefix": cell.x_prefix, "y_prefix": cell.y_prefix}
        for axis in ("x", "y"):
            pm, pp = common_prefix_lengths(cell.prefix(axis), grid.n(axis))
            entry[f"p_{axis}_minus"], entry[f"p_{axis}_plus"] = pm, pp
        per_cell.append(entry)
    report = {
        "schema_version": REPORT_SCHEMA,
        "grid": [grid.n_x, grid.n_y],
        "cells": per_cell,
        "correction_terms": {axis: len(obstacle_terms(obstacle, axis)) for axis in ("x", "y")},
        "impermeability": None,
    }
    if cells:
        params = cfg.params() if cfg.params().conservative else effective_params(cfg.params())
        worst = ex.impermeability_check(obstacle, params, cfg.tau, args.check_steps, cfg.seed)
        report["impermeability"] = {"steps": args.check_steps, "max_interior_amplitude": worst}
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qlee", description="Circuits for the 2D linearized Euler equations.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="experiment config file")
        p.add_argument("--tau", type=float)
        p.add_argument("--steps", type=int)
        p.add_argument("--scheme", choices=["central", "updown"])
        p.add_argument("--bc", choices=["dirichlet", "periodic"])
        p.add_argument("--oracle", action="store_true", help="add exact-exponential reference columns")
        p.add_argument("--dump-circuit", metavar="PATH", help="write the step circuit as text")
        p.add_argument("--output-dir")
        return p

    common(sub.add_parser("simulate", help="run the circuit evolution")).set_defaults(func=cmd_simulate)
    common(sub.add_parser("compare", help="quantum vs FDM vs exact exponential")).set_defaults(func=cmd_compare)
    p = common(sub.add_parser("gate-count", help="gate tallies over a range of register sizes"))
    p.add_argument("--n-min", type=int, default=3)
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--output")
    p.set_defaults(func=cmd_gate_count)
    p = common(sub.add_parser("bound", help="first-order Trotter error bound"))
    p.add_argument("--measure", action="store_true", help="also measure the error with a dense unitary")
    p.set_defaults(func=cmd_bound)
    p = common(sub.add_parser("obstacle-check", help="decompose a mask and test impermeability"))
    p.add_argument("--mask", help="ASCII 0/1 mask file (rows are y)")
    p.add_argument("--n", type=int, help="qubits per axis (overrides the config)")
    p.add_argument("--check-steps", type=int, default=100)
    p.set_defaults(func=cmd_obstacle_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NonConservativeError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except ex.GuardError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
