"""Linearized Euler generator, Trotter-step circuits, error bound and state preparation.

Field ordering is ``f = (p, u, v, 0)`` over the ancilla sectors ``00, 01, 10, 11``;
the generator ``A`` satisfies ``df/dt = A f`` and in the conservative regime
``H = iA`` is Hermitian.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import isfinite

import numpy as np
import scipy.sparse as sp

from .circuit import Circuit, bell_block, cry, h, mcrz, mcrzz, x
from .classical import DENSE_DIM_LIMIT, expm_dense, operator_norm
from .diffops import BoundaryCondition, GridSpec, _bc, canonical, diff, lift, wrap_block
from .obstacles import (
    ObstacleSpec,
    group_generator,
    masked_diff,
    masked_shifts,
    obstacle_terms,
    terms_by_size,
    with_controls,
)
from .statevector import FieldGrid, RegisterLayout, StateVector, apply_circuit, extract_field

SCHEMES = ("central", "updown")
CONSERVATIVE_TOL = 1e-12


class NonConservativeError(ValueError):
    """Raised when a unitary builder is handed parameters with ``c != 1/rho_bar``."""


@dataclass(frozen=True)
class LeeParams:
    u_bar: float = 0.0
    rho_bar: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if not all(isfinite(v) for v in (self.u_bar, self.rho_bar, self.c)):
            raise ValueError("LEE parameters must be finite")
        if not (self.rho_bar > 0 and self.c > 0):
            raise ValueError("rho_bar and c must be positive")

    @property
    def conservative(self) -> bool:
        return abs(self.c - 1.0 / self.rho_bar) < CONSERVATIVE_TOL


@dataclass(frozen=True)
class TrotterSchedule:
    tau: float
    steps: int

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")

    @property
    def total_time(self) -> float:
        return self.steps * self.tau


@dataclass(frozen=True)
class SplitGenerator:
    A1: sp.csr_array
    A2: sp.csr_array


def _sector(a: int, b: int) -> sp.csr_array:
    return sp.csr_array(([1.0], ([a], [b])), shape=(4, 4))


def _check_combo(grid, bc, obstacle, scheme):
    bc = _bc(bc)
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if scheme == "updown" and bc is not BoundaryCondition.DIRICHLET:
        raise ValueError("the updown scheme is only defined with Dirichlet boundaries")
    if obstacle and bc is not BoundaryCondition.DIRICHLET:
        raise ValueError("obstacles are only supported with Dirichlet boundaries")
    if obstacle and obstacle.grid != grid:
        raise ValueError("obstacle was built for a different grid")
    return bc


def _spatial_central(axis, grid, bc, obstacle):
    n = grid.n(axis)
    if obstacle:
        return masked_diff(n, grid.l, axis, obstacle, grid, ancillas=0)
    return lift(diff(n, grid.l, "central", bc), axis, grid, ancillas=0)


def lee_generator(params: LeeParams, grid: GridSpec, bc="dirichlet", obstacle: ObstacleSpec | None = None,
                  scheme: str = "central") -> sp.csr_array:
    """Sparse ``A`` on the ``(a1, a2, x, y)`` register."""
    bc = _check_combo(grid, bc, obstacle, scheme)
    ub, rb, c = params.u_bar, params.rho_bar, params.c
    eye4 = sp.identity(4, format="csr")
    dcx = _spatial_central("x", grid, bc, obstacle)
    dcy = _spatial_central("y", grid, bc, obstacle)
    if scheme == "central":
        dpx = dmx = dcx
        dpy = dmy = dcy
    else:
        l = grid.l
        dim = (1 << grid.n_x) << grid.n_y
        eye = sp.identity(dim, format="csr")
        smx, spx = masked_shifts("x", obstacle, grid, ancillas=0)
        smy, spy = masked_shifts("y", obstacle, grid, ancillas=0)
        dpx, dmx = (smx - eye) / l, (eye - spx) / l
        dpy, dmy = (smy - eye) / l, (eye - spy) / l
    A = -ub * sp.kron(eye4, dcx)
    A = A - rb * c * c * (sp.kron(_sector(0, 1), dpx) + sp.kron(_sector(0, 2), dpy))
    A = A - (1.0 / rb) * (sp.kron(_sector(1, 0), dmx) + sp.kron(_sector(2, 0), dmy))
    return canonical(A)


def lee_hamiltonian(params, grid, bc="dirichlet", obstacle=None, scheme="central") -> sp.csr_array:
    return canonical(1j * lee_generator(params, grid, bc, obstacle, scheme))


# -- circuit builders --------------------------------------------------------

def _require_conservative(params: LeeParams):
    if not params.conservative:
        raise NonConservativeError(
            f"c={params.c} != 1/rho_bar={1 / params.rho_bar}: the generator is not anti-symmetric; "
            "use split_generator/split_step for the non-conservative regime"
        )


def _corrected(base, terms) -> list:
    out = [base]
    for t in terms:
        out += with_controls(base.inverse(), t.controls)
    return out


def _axis_setup(axis, layout):
    """Axis qubits, the ancilla acted on by the dressing and the ancilla used as a control."""
    if axis == "x":
        return layout.x_qubits(), layout.a2, layout.a1
    return layout.y_qubits(), layout.a1, layout.a2


def _dressing(axis, layout):
    # maps the coupled sectors onto the ZZ eigenbasis of the Ising rotation
    if axis == "x":
        return [x(layout.a1), h(layout.a2)]
    return [h(layout.a1), x(layout.a2)]


def _central_axis(axis, params, layout, tau, l, bc, terms) -> list[list]:
    """Gate lists of the wrap block (periodic only) followed by the ``j = 1..n`` groups."""
    qs, coupled, ctrl = _axis_setup(axis, layout)
    n = len(qs)
    groups = terms_by_size(terms)
    dress = _dressing(axis, layout)
    # the background flow is along x only
    diag_angle = -params.u_bar * tau / l if axis == "x" else 0.0
    off_angle = -tau / (params.rho_bar * l)
    blocks = []
    if _bc(bc) is BoundaryCondition.PERIODIC:
        inner = []
        if diag_angle != 0.0:
            inner.append(mcrz(-diag_angle, qs[: n - 1], qs[n - 1]))
        inner += dress + [mcrzz(-off_angle, [ctrl] + qs[: n - 1], coupled, qs[n - 1])] + dress
        blocks.append(wrap_block(qs, inner))
    for j in range(1, n + 1):
        tj = groups.get(j, [])
        inner = []
        if diag_angle != 0.0:
            inner += _corrected(mcrz(diag_angle, qs[: j - 1], qs[j - 1]), tj)
        inner += dress + _corrected(mcrzz(off_angle, [ctrl] + qs[: j - 1], coupled, qs[j - 1]), tj) + dress
        blocks.append(bell_block(j, qs, inner))
    return blocks


def step_groups(params: LeeParams, grid: GridSpec, tau: float, obstacle: ObstacleSpec | None = None,
                axis: str = "x") -> list[Circuit]:
    """The central Dirichlet ``j``-group circuits of one axis, ``j = 1..n``.

    Group ``j`` is exactly ``exp(-i tau (Hd_j + Ho_j))`` for the groups of
    ``hamiltonian_groups`` because the two parts commute.
    """
    _check_combo(grid, "dirichlet", obstacle, "central")
    _require_conservative(params)
    layout = RegisterLayout(grid.n_x, grid.n_y)
    blocks = _central_axis(axis, params, layout, tau, grid.l, "dirichlet", obstacle_terms(obstacle, axis))
    return [Circuit(layout.num_qubits, b) for b in blocks]


def _updown_axis(axis, params, layout, tau, l, terms) -> list:
    qs, coupled, ctrl = _axis_setup(axis, layout)
    n = len(qs)
    groups = terms_by_size(terms)
    # the background flow is along x only
    diag_angle = -params.u_bar * tau / l if axis == "x" else 0.0
    off_angle = -2.0 * tau / (params.rho_bar * l)
    gates = []
    if diag_angle != 0.0:
        for j in range(1, n + 1):
            gates += bell_block(j, qs, _corrected(mcrz(diag_angle, qs[: j - 1], qs[j - 1]), groups.get(j, [])))
    # the identity part of D+ and D- couples the two sectors directly
    gates += [x(ctrl), cry(off_angle, ctrl, coupled), x(ctrl)]
    # shift pairs (k-1, k) become modified Bell pairs once q_j is flipped,
    # with the coupled ancilla playing the top bit
    for j in range(1, n + 1):
        sl = qs[:j] + [coupled]
        base = mcrz(off_angle, [ctrl] + qs[:j], coupled)
        inner = [x(ctrl)] + _corrected(base, groups.get(j, [])) + [x(ctrl)]
        gates += [x(qs[j - 1])] + bell_block(j + 1, sl, inner) + [x(qs[j - 1])]
    return gates


def trotter_step(params: LeeParams, grid: GridSpec, tau: float, bc="dirichlet",
                 obstacle: ObstacleSpec | None = None, scheme: str = "central") -> Circuit:
    """One first-order step ``V(tau)``: the x factor is applied first, then y."""
    bc = _check_combo(grid, bc, obstacle, scheme)
    _require_conservative(params)
    layout = RegisterLayout(grid.n_x, grid.n_y)
    gates = []
    for axis in ("x", "y"):
        terms = obstacle_terms(obstacle, axis)
        if scheme == "central":
            for block in _central_axis(axis, params, layout, tau, grid.l, bc, terms):
                gates += block
        else:
            gates += _updown_axis(axis, params, layout, tau, grid.l, terms)
    return Circuit(layout.num_qubits, gates)


# -- error bound -------------------------------------------------------------

def trotter_error_bound(params: LeeParams, grid: GridSpec, tau: float) -> float:
    """Spectral-norm bound on ``||exp(-iH tau) - V(tau)||`` for the central Dirichlet step.

    For rectangular grids the square-grid expression is evaluated at the larger
    register, which is an upper envelope rather than a proven bound.
    """
    _require_conservative(params)
    n = max(grid.n_x, grid.n_y)
    # commutator norms scale with |u_bar|, so the flow direction does not matter
    u = abs(params.u_bar)
    b = 1.0 / (2.0 * params.rho_bar)
    s = tau * tau / (2.0 * grid.l ** 2)
    return ((u / 2) ** 2 + 2 * b * b + u * b) * s * (n - 1) + b * b * s * n * n


def hamiltonian_groups(params: LeeParams, grid: GridSpec, obstacle=None) -> dict[str, list]:
    """Per-``j`` Hermitian groups of the central Dirichlet Hamiltonian.

    Keys ``diag_x``, ``diag_y``, ``off_x``, ``off_y``; each list is indexed by
    ``j - 1``; ``diag_y`` is zero since the flow is along x. Their total equals
    ``lee_hamiltonian``.
    """
    _require_conservative(params)
    eye4 = sp.identity(4, format="csr")
    sxy = _sector(0, 1) + _sector(1, 0)
    syx = _sector(0, 2) + _sector(2, 0)
    cd = -1j * params.u_bar / (2 * grid.l)
    co = -1j / (2 * grid.l * params.rho_bar)
    out = {}
    for axis, coup in (("x", sxy), ("y", syx)):
        groups = terms_by_size(obstacle_terms(obstacle, axis))
        gens = [group_generator(j, axis, grid, groups.get(j, []), ancillas=0) for j in range(1, grid.n(axis) + 1)]
        scale = cd if axis == "x" else 0.0
        out[f"diag_{axis}"] = [canonical(scale * sp.kron(eye4, g)) for g in gens]
        out[f"off_{axis}"] = [canonical(co * sp.kron(coup, g)) for g in gens]
    return out


def _commutator_norm(a, b) -> float:
    c = (a @ b - b @ a).toarray()
    if np.max(np.abs(c), initial=0.0) < 1e-12:
        return 0.0
    return operator_norm(c)


def commutator_norm_sums(params: LeeParams, grid: GridSpec) -> dict[str, float]:
    """Sums of pairwise commutator spectral norms between Hamiltonian groups.

    Same-kind sums run over ``j < j'``, mixed sums over all ``(j, j')``. Half
    of ``total`` times ``tau**2`` is the first-order error estimate.
    """
    g = hamiltonian_groups(params, grid)
    if g["diag_x"][0].shape[0] > DENSE_DIM_LIMIT:
        raise ValueError("commutator sums refused above the dense guard")

    def upper(a):
        return sum(_commutator_norm(a[i], a[k]) for i in range(len(a)) for k in range(i + 1, len(a)))

    def full(a, b):
        return sum(_commutator_norm(m, w) for m in a for w in b)

    sums = {
        "diag_x/diag_x": upper(g["diag_x"]),
        "off_x/off_x": upper(g["off_x"]),
        "off_y/off_y": upper(g["off_y"]),
        "diag_x/off_x": full(g["diag_x"], g["off_x"]),
        "diag_x/off_y": full(g["diag_x"], g["off_y"]),
        "off_x/off_y": full(g["off_x"], g["off_y"]),
    }
    sums["total"] = sum(sums.values())
    return sums


# -- non-conservative splitting ---------------------------------------------

def split_generator(A) -> SplitGenerator:
    """``A = A1 + i A2`` with both parts Hermitian."""
    A = sp.csr_array(A, dtype=complex)
    ah = A.conj().T
    return SplitGenerator(canonical((A + ah) / 2), canonical((A - ah) / 2j))


def effective_params(params: LeeParams) -> LeeParams:
    """Conservative parameters whose generator equals the anti-Hermitian part of ``A``."""
    inv = (1.0 / params.rho_bar + params.rho_bar * params.c ** 2) / 2.0
    return LeeParams(params.u_bar, 1.0 / inv, inv)


def split_step(split: SplitGenerator, params: LeeParams, grid: GridSpec, tau: float, bc="dirichlet",
               obstacle=None, scheme: str = "central"):
    """``(exp(A1 tau), circuit for exp(i A2 tau))``.

    The unitary factor is synthesized only when ``i A2`` is itself an LEE
    generator with rescaled off-diagonal coefficients.
    """
    eff = effective_params(params)
    target = lee_generator(eff, grid, bc, obstacle, scheme)
    ia2 = 1j * split.A2
    if ia2.shape != target.shape or abs(ia2 - target).max() > 1e-12 * max(1.0, abs(target).max()):
        raise ValueError("A2 does not follow the LEE block pattern; circuit synthesis unsupported")
    circuit = trotter_step(eff, grid, tau, bc, obstacle, scheme)
    dim = split.A1.shape[0]
    if split.A1.nnz == 0:
        nonunitary = sp.identity(dim, dtype=complex, format="csr")
    else:
        nonunitary = canonical(expm_dense(split.A1, tau))
    return nonunitary, circuit


# -- initial state and stepping ---------------------------------------------

def _is_pow2(w: int) -> bool:
    return w >= 1 and w & (w - 1) == 0


def prepare_point_source(grid: GridSpec, sources):
    """Pressure squares ``(x, y, width, pressure)`` with ``(x, y)`` the lower corner.

    Returns ``(state, norm_factor, circuit)``; ``circuit`` is an X/H preparation
    when the support is one binary cell with positive pressure, else ``None``.
    """
    sources = list(sources)
    if not sources:
        raise ValueError("at least one source is required")
    layout = RegisterLayout(grid.n_x, grid.n_y)
    nx, ny = layout.shape
    p = np.zeros((nx, ny))
    for x0, y0, w, pres in sources:
        x0, y0, w = int(x0), int(y0), int(w)
        if not _is_pow2(w):
            raise ValueError(f"source width {w} is not a power of two")
        if x0 < 0 or y0 < 0 or x0 + w > nx or y0 + w > ny:
            raise ValueError(f"source at ({x0}, {y0}) width {w} leaves the {nx}x{ny} grid")
        p[x0:x0 + w, y0:y0 + w] += float(pres)
    norm = float(np.linalg.norm(p))
    if norm == 0.0:
        raise ValueError("sources cancel to a zero field")
    amps = np.zeros((4, nx, ny), dtype=complex)
    amps[0] = p / norm
    state = StateVector(amps.ravel(), layout)

    circuit = None
    if len(sources) == 1:
        x0, y0, w, pres = sources[0]
        x0, y0, w = int(x0), int(y0), int(w)
        k = w.bit_length() - 1
        if pres > 0 and x0 % w == 0 and y0 % w == 0 and k <= min(grid.n_x, grid.n_y):
            gates = []
            for qs, origin in ((layout.x_qubits(), x0), (layout.y_qubits(), y0)):
                for i, q in enumerate(qs):
                    if i < k:
                        gates.append(h(q))
                    elif (origin >> i) & 1:
                        gates.append(x(q))
            circuit = Circuit(layout.num_qubits, gates)
    return state, norm, circuit


def evolve(initial: StateVector, step_circuit: Circuit, schedule: TrotterSchedule, snapshot_every: int = 1,
           norm_factor: float = 1.0) -> list[FieldGrid]:
    """Repeat ``step_circuit`` and extract a snapshot every ``snapshot_every`` steps (t = 0 included)."""
    if step_circuit.num_qubits != initial.num_qubits:
        raise ValueError(
            f"step circuit has {step_circuit.num_qubits} qubits, state has {initial.num_qubits}"
        )
    if snapshot_every < 1:
        raise ValueError("snapshot_every must be >= 1")
    state = initial.copy()
    out = [extract_field(state, norm_factor, 0.0)]
    for k in range(1, schedule.steps + 1):
        apply_circuit(state, step_circuit)
        if k % snapshot_every == 0:
            out.append(extract_field(state, norm_factor, k * schedule.tau))
    return out


__all__ = [
    "LeeParams", "TrotterSchedule", "SplitGenerator", "NonConservativeError", "SCHEMES",
    "lee_generator", "lee_hamiltonian", "trotter_step", "step_groups", "trotter_error_bound",
    "hamiltonian_groups", "commutator_norm_sums", "split_generator", "effective_params",
    "split_step", "prepare_point_source", "evolve",
]
