"""Experiment drivers shared by the command line and the acceptance suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .circuit import Circuit, cancel_flips, count
from .classical import expm_apply, fdm_evolve
from .config import ExperimentConfig
from .lee import (
    lee_generator,
    prepare_point_source,
    split_generator,
    split_step,
    trotter_error_bound,
    trotter_step,
)
from .obstacles import rasterize
from .statevector import FieldGrid, RegisterLayout, StateVector, apply_circuit, extract_field

DENSE_ORACLE_QUBITS = 12
KRYLOV_ORACLE_QUBITS = 20


class GuardError(RuntimeError):
    """A requested computation exceeds a numerical guard."""


@dataclass
class QuantumRun:
    snapshots: list
    norms: list
    circuit: Circuit
    nonunitary: sp.csr_array | None = None
    norm_factor: float = 1.0
    initial: StateVector | None = None
    obstacle: object = None


def initial_state(cfg: ExperimentConfig):
    return prepare_point_source(cfg.grid(), cfg.sources)


def build_step(cfg: ExperimentConfig, obstacle=None):
    """``(circuit, nonunitary)``; the second is ``None`` in the conservative regime."""
    params, grid = cfg.params(), cfg.grid()
    if params.conservative:
        return trotter_step(params, grid, cfg.tau, cfg.bc, obstacle, cfg.scheme), None
    dim = 4 << (cfg.n_x + cfg.n_y)
    if dim > 1 << DENSE_ORACLE_QUBITS:
        raise GuardError(
            f"the non-unitary factor is applied as a dense matrix; {dim} exceeds the guard"
        )
    split = split_generator(lee_generator(params, grid, cfg.bc, obstacle, cfg.scheme))
    nonunitary, circuit = split_step(split, params, grid, cfg.tau, cfg.bc, obstacle, cfg.scheme)
    return circuit, nonunitary


def run_quantum(cfg: ExperimentConfig, obstacle=None, steps: int | None = None) -> QuantumRun:
    steps = cfg.steps if steps is None else steps
    state, nf, _ = initial_state(cfg)
    circuit, nonunitary = build_step(cfg, obstacle)
    fast = cancel_flips(circuit)
    cur = state.copy()
    snaps, norms = [extract_field(cur, nf, 0.0)], [cur.norm()]
    for k in range(1, steps + 1):
        apply_circuit(cur, fast)
        if nonunitary is not None:
            cur.amplitudes[:] = nonunitary @ cur.amplitudes
        if k % cfg.snapshot_every == 0:
            snaps.append(extract_field(cur, nf, k * cfg.tau))
            norms.append(cur.norm())
    return QuantumRun(snaps, norms, circuit, nonunitary, nf, state, obstacle)


def run_oracle(cfg: ExperimentConfig, times, obstacle=None) -> list[FieldGrid]:
    layout = RegisterLayout(cfg.n_x, cfg.n_y)
    if layout.num_qubits > KRYLOV_ORACLE_QUBITS:
        raise GuardError(f"oracle refused above {KRYLOV_ORACLE_QUBITS} qubits")
    state, nf, _ = initial_state(cfg)
    A = lee_generator(cfg.params(), cfg.grid(), cfg.bc, obstacle, cfg.scheme)
    out, f, t_prev = [], state.amplitudes, 0.0
    for t in times:
        f = expm_apply(A, f, t - t_prev)
        t_prev = t
        out.append(extract_field(StateVector(f, layout), nf, t))
    return out


def run_fdm(cfg: ExperimentConfig, fdm_tau: float, total_steps_at_tau: int, every: int, obstacle=None):
    state, nf, _ = initial_state(cfg)
    A = lee_generator(cfg.params(), cfg.grid(), cfg.bc, obstacle, cfg.scheme)
    layout = state.layout
    res = fdm_evolve(A, state.amplitudes, fdm_tau, total_steps_at_tau, every)
    fields = [extract_field(StateVector(f, layout), nf, t) for f, t in zip(res.states, res.times)]
    return res, fields


def fdm_ratio(cfg: ExperimentConfig) -> int:
    """Number of FDM steps per quantum snapshot interval; must be integral."""
    r = cfg.snapshot_every * cfg.tau / cfg.fdm_tau
    if abs(r - round(r)) > 1e-9 or round(r) < 1:
        raise ValueError(f"fdm_tau={cfg.fdm_tau} does not divide the snapshot interval {cfg.snapshot_every * cfg.tau}")
    return int(round(r))


def compare(cfg: ExperimentConfig, obstacle=None) -> dict:
    """Quantum, FDM and exact-exponential pressure fields side by side."""
    layout = RegisterLayout(cfg.n_x, cfg.n_y)
    if layout.num_qubits > KRYLOV_ORACLE_QUBITS:
        raise GuardError(f"comparison needs the oracle, refused above {KRYLOV_ORACLE_QUBITS} qubits")
    q = run_quantum(cfg, obstacle)
    times = [s.time for s in q.snapshots]
    exact = run_oracle(cfg, times, obstacle)
    every = fdm_ratio(cfg)
    fdm, fdm_fields = run_fdm(cfg, cfg.fdm_tau, every * (len(times) - 1), every, obstacle)
    probe_steps = max(1, int(round(3.2 / cfg.tau)))
    probe = fdm_evolve(lee_generator(cfg.params(), cfg.grid(), cfg.bc, obstacle, cfg.scheme),
                       q.initial.amplitudes * q.norm_factor, cfg.tau, probe_steps, probe_steps)
    rows = []
    for k, t in enumerate(times):
        lq = float(np.linalg.norm(q.snapshots[k].p - exact[k].p))
        lf = float(np.linalg.norm(fdm_fields[k].p - exact[k].p)) if k < len(fdm_fields) else float("nan")
        rows.append({"time": t, "l2_quantum": lq, "l2_fdm": lf})
    return {
        "rows": rows,
        "fdm_diverged": fdm.diverged,
        "fdm_diverged_at": fdm.diverged_at,
        "fdm_at_quantum_tau": {"tau": cfg.tau, "diverged": probe.diverged, "diverged_at": probe.diverged_at,
                               "horizon": probe_steps * cfg.tau},
        "quantum": q,
    }


def interior_max(fields, obstacle) -> float:
    if not obstacle:
        return 0.0
    mask = rasterize(obstacle)
    return max(
        (float(np.max(np.abs(np.stack([f.p[mask], f.u[mask], f.v[mask]])), initial=0.0)) for f in fields),
        default=0.0,
    )


def impermeability_check(obstacle, params, tau: float = 0.05, steps: int = 100, seed: int = 0) -> float:
    """Max |amplitude| inside the obstacle after ``steps`` steps from random outside data."""
    grid = obstacle.grid
    layout = RegisterLayout(grid.n_x, grid.n_y)
    mask = rasterize(obstacle)
    rng = np.random.default_rng(seed)
    blocks = rng.standard_normal((4,) + layout.shape)
    blocks[3] = 0.0
    blocks[:, mask] = 0.0
    state = StateVector((blocks / np.linalg.norm(blocks)).ravel().astype(complex), layout)
    step = cancel_flips(trotter_step(params, grid, tau, "dirichlet", obstacle))
    worst = 0.0
    for _ in range(steps):
        apply_circuit(state, step)
        amps = state.amplitudes.reshape((4,) + layout.shape)
        worst = max(worst, float(np.max(np.abs(amps[:, mask]), initial=0.0)))
    return worst


def x_centroid(f: FieldGrid) -> float:
    w = f.p ** 2
    return float(np.sum(w * np.arange(w.shape[0])[:, None]) / np.sum(w))


def gate_count_table(n_values, scheme: str, bc: str, params) -> dict:
    from .diffops import GridSpec

    rows = []
    for n in n_values:
        c = trotter_step(params, GridSpec(n, n, 1.0), 0.05, bc, None, scheme)
        gc = count(c)
        rows.append({"n": n, "pre_decomposition": dict(sorted(gc.counts.items())),
                     "cnot_after_decomposition": gc.cnot_after_decomposition,
                     "envelope": 42 * n * n - 34 * n + 34})
    ns = np.array([r["n"] for r in rows], dtype=float)
    cs = np.array([r["cnot_after_decomposition"] for r in rows], dtype=float)
    fit = None
    if len(rows) >= 3:
        coeffs = np.polyfit(ns, cs, 2)
        resid = float(np.max(np.abs(np.polyval(coeffs, ns) - cs) / cs))
        fit = {"a": float(coeffs[0]), "b": float(coeffs[1]), "c": float(coeffs[2]), "max_relative_residual": resid}
    return {"scheme": scheme, "bc": bc, "rows": rows, "quadratic_fit": fit}


def bound_report(params, grid, tau, measure: bool = False) -> dict:
    out = {"bound": trotter_error_bound(params, grid, tau), "tau": tau,
           "n": max(grid.n_x, grid.n_y), "square": grid.n_x == grid.n_y}
    if measure:
        from scipy.linalg import expm

        from .circuit import dense_unitary

        layout = RegisterLayout(grid.n_x, grid.n_y)
        if layout.num_qubits > DENSE_ORACLE_QUBITS:
            raise GuardError(f"--measure needs a dense unitary, refused above {DENSE_ORACLE_QUBITS} qubits")
        A = lee_generator(params, grid).toarray()
        V = dense_unitary(trotter_step(params, grid, tau))
        measured = float(np.linalg.norm(V - expm(A * tau), 2))
        out.update(measured=measured, margin=out["bound"] - measured)
    return out
