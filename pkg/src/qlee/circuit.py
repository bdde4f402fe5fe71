"""Gate IR, modified-Bell-basis blocks, decomposition to a CNOT basis and counting.

Conventions
-----------
Qubit ``q`` is bit ``q`` of the basis index (little-endian).  Rotation angles
follow::

    RZ(g)   = exp(-i g Z / 2)
    RY(g)   = exp(-i g Y / 2)
    RZZ(g)  = exp(-i g Z(x)Z / 2)
    P(l)    = diag(1, exp(i l))

Multi-controlled kinds fire when every control qubit is ``|1>``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from math import pi

import numpy as np

from . import _kernels

GATE_KINDS = ("X", "H", "P", "RZ", "RY", "RZZ", "CNOT", "MCRZ", "MCRZZ", "CRY")
BASIS_KINDS = frozenset({"CNOT", "RZ", "RY", "H", "P", "X"})
DENSE_QUBIT_LIMIT = 14

_ANGLED = frozenset({"P", "RZ", "RY", "RZZ", "MCRZ", "MCRZZ", "CRY"})
_N_CONTROLS = {"X": 0, "H": 0, "P": 0, "RZ": 0, "RY": 0, "RZZ": 0, "CNOT": 1, "CRY": 1}
_N_TARGETS = {"RZZ": 2, "MCRZZ": 2}


class InvalidGateError(ValueError):
    pass


class InvalidCircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    kind: str
    angle: float | None = None
    controls: tuple[int, ...] = ()
    targets: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "controls", tuple(int(c) for c in self.controls))
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if self.kind not in GATE_KINDS:
            raise InvalidGateError(f"unknown gate kind {self.kind!r}")
        if (self.kind in _ANGLED) != (self.angle is not None):
            raise InvalidGateError(f"{self.kind} angle mismatch: {self.angle!r}")
        if self.angle is not None:
            object.__setattr__(self, "angle", float(self.angle))
        if len(self.targets) != _N_TARGETS.get(self.kind, 1):
            raise InvalidGateError(f"{self.kind} takes {_N_TARGETS.get(self.kind, 1)} target(s)")
        nc = _N_CONTROLS.get(self.kind)
        if nc is not None and len(self.controls) != nc:
            raise InvalidGateError(f"{self.kind} takes {nc} control(s)")
        qubits = self.controls + self.targets
        if len(set(qubits)) != len(qubits):
            raise InvalidGateError(f"repeated qubit in {self.kind} {qubits}")
        if any(q < 0 for q in qubits):
            raise InvalidGateError("negative qubit index")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls + self.targets

    def inverse(self) -> Gate:
        if self.angle is None:
            return self
        return Gate(self.kind, -self.angle, self.controls, self.targets)

    def to_text(self) -> str:
        angle = "-" if self.angle is None else repr(self.angle)
        controls = ",".join(map(str, self.controls))
        targets = ",".join(map(str, self.targets))
        return f"{self.kind} {angle} {controls}->{targets}"

    @classmethod
    def from_text(cls, line: str) -> Gate:
        kind, angle, wires = line.split()
        controls, targets = wires.split("->")
        return cls(
            kind,
            None if angle == "-" else float(angle),
            tuple(int(c) for c in controls.split(",") if c),
            tuple(int(t) for t in targets.split(",") if t),
        )


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if max(g.qubits) >= self.num_qubits:
                raise InvalidCircuitError(
                    f"gate {g.to_text()} exceeds {self.num_qubits} qubits"
                )

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def __add__(self, other: Circuit) -> Circuit:
        return Circuit(max(self.num_qubits, other.num_qubits), self.gates + other.gates)

    def inverse(self) -> Circuit:
        return Circuit(self.num_qubits, tuple(g.inverse() for g in reversed(self.gates)))

    def widen(self, num_qubits: int) -> Circuit:
        if num_qubits < self.num_qubits:
            raise InvalidCircuitError("cannot shrink a circuit")
        return Circuit(num_qubits, self.gates)

    def to_text(self) -> str:
        lines = [f"# qubits {self.num_qubits}"]
        lines.extend(g.to_text() for g in self.gates)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Circuit:
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# qubits "):
            raise InvalidCircuitError("missing '# qubits N' header")
        n = int(lines[0].split()[2])
        return cls(n, tuple(Gate.from_text(ln) for ln in lines[1:] if ln.strip()))


# -- gate constructors -------------------------------------------------------

def x(q):
    return Gate("X", None, (), (q,))


def h(q):
    return Gate("H", None, (), (q,))


def p(lam, q):
    return Gate("P", lam, (), (q,))


def rz(gamma, q):
    return Gate("RZ", gamma, (), (q,))


def ry(theta, q):
    return Gate("RY", theta, (), (q,))


def cnot(control, target):
    return Gate("CNOT", None, (control,), (target,))


def cry(theta, control, target):
    return Gate("CRY", theta, (control,), (target,))


def mcrz(gamma: float, controls, target: int) -> Gate:
    """Z rotation on ``target`` fired when all ``controls`` are ``|1>``.

    With no controls this is a plain ``RZ``.
    """
    controls = tuple(controls)
    if not controls:
        return Gate("RZ", gamma, (), (target,))
    return Gate("MCRZ", gamma, controls, (target,))


def mcrzz(gamma: float, controls, t1: int, t2: int) -> Gate:
    """Ising ``exp(-i gamma Z_t1 Z_t2 / 2)`` fired when all ``controls`` are ``|1>``."""
    controls = tuple(controls)
    if t1 == t2:
        raise InvalidGateError("MCRZZ targets must differ")
    if not controls:
        return Gate("RZZ", gamma, (), (t1, t2))
    return Gate("MCRZZ", gamma, controls, (t1, t2))


def u_bell(j: int, lam: float, qubit_slice, num_qubits: int | None = None) -> Circuit:
    """Basis change onto the modified Bell basis over ``qubit_slice[:j]``.

    ``qubit_slice[j-1]`` carries H and P(lam) and then fans out with CNOTs onto
    ``qubit_slice[0..j-2]``, so ``|0>|1..1>`` maps to
    ``(|0>|1..1> + e^{i lam}|1>|0..0>)/sqrt(2)``.
    """
    qubit_slice = list(qubit_slice)
    if j < 1 or len(qubit_slice) < j:
        raise InvalidCircuitError(f"u_bell needs {j} >= 1 qubits, got {qubit_slice}")
    top = qubit_slice[j - 1]
    gates = [h(top), p(lam, top)] + [cnot(top, q) for q in qubit_slice[: j - 1]]
    if num_qubits is None:
        num_qubits = max(qubit_slice[:j]) + 1
    return Circuit(num_qubits, gates)


def bell_block(j: int, qubit_slice, inner, lam: float = -pi / 2) -> list[Gate]:
    """``U_j(lam) . inner . U_j(lam)^dagger`` as a flat gate list (application order)."""
    u = u_bell(j, lam, qubit_slice)
    return list(u.inverse().gates) + list(inner) + list(u.gates)


# -- decomposition -----------------------------------------------------------

_T = pi / 4


def _toffoli(a, b, t):
    return [
        h(t), cnot(b, t), p(-_T, t), cnot(a, t), p(_T, t), cnot(b, t), p(-_T, t),
        cnot(a, t), p(_T, b), p(_T, t), h(t), cnot(a, b), p(_T, a), p(-_T, b),
        cnot(a, b),
    ]


def _margolus(a, b, t):
    """Toffoli up to a relative phase (3 CNOTs); self-inverse up to that phase."""
    q = pi / 4
    return [ry(q, t), cnot(b, t), ry(q, t), cnot(a, t), ry(-q, t), cnot(b, t), ry(-q, t)]


def _margolus_dg(a, b, t):
    return [g.inverse() for g in reversed(_margolus(a, b, t))]


def _mcx(controls, target, borrowed):
    """Multi-controlled X; for 3+ controls, ``borrowed`` supplies dirty ancillas.

    Linear ladder of 4(m-2) Toffolis (12m - 18 CNOTs); only the two that touch
    the target are exact, the ancilla ones carry relative phases that cancel
    between compute and uncompute. Borrowed qubits are returned to their input
    state.
    """
    m = len(controls)
    if m == 1:
        return [cnot(controls[0], target)]
    if m == 2:
        return _toffoli(controls[0], controls[1], target)
    anc = list(borrowed)[: m - 2]
    if len(anc) < m - 2:
        raise InvalidCircuitError(f"{m}-control X needs {m - 2} borrowed qubits")
    c = list(controls)
    down = [(c[i], anc[i - 2], anc[i - 1]) for i in range(m - 2, 1, -1)]
    out = []
    for _ in range(2):
        out += _toffoli(c[m - 1], anc[m - 3], target)
        for triple in down:
            out += _margolus(*triple)
        out += _margolus(c[0], c[1], anc[0])
        for triple in reversed(down):
            out += _margolus_dg(*triple)
    return out


def _mcrz_commutator(gamma, controls, target):
    # group commutator of two half-controlled X ladders around RZ(-gamma/4);
    # each ladder borrows the other half, so no idle qubits are needed
    k1 = (len(controls) + 1) // 2
    c1, c2 = list(controls[:k1]), list(controls[k1:])
    a = -gamma / 4
    x1 = _mcx(c1, target, c2)
    x2 = _mcx(c2, target, c1)
    return x1 + [rz(a, target)] + x2 + [rz(-a, target)] + x1 + [rz(a, target)] + x2 + [rz(-a, target)]


def _decompose_mcrz(gamma, controls, target, idle=()):
    k = len(controls)
    if k == 0:
        return [rz(gamma, target)]
    if k == 1:
        return [rz(gamma / 2, target), cnot(controls[0], target),
                rz(-gamma / 2, target), cnot(controls[0], target)]
    idle = [q for q in idle if q != target and q not in controls]
    if len(idle) < k - 2:
        return _mcrz_commutator(gamma, controls, target)
    flip = _mcx(list(controls), target, idle)
    return [rz(gamma / 2, target)] + flip + [rz(-gamma / 2, target)] + flip


def decompose_gate(gate: Gate, num_qubits: int | None = None) -> list[Gate]:
    """Basis-gate expansion of ``gate``.

    With ``num_qubits`` given, idle register qubits serve as dirty ancillas and
    multi-controlled rotations cost ``24k - 36`` CNOTs for ``k >= 2`` controls;
    without enough idle qubits a commutator form needing none is used.
    """
    kind = gate.kind
    if kind in BASIS_KINDS:
        return [gate]
    idle = [] if num_qubits is None else [q for q in range(num_qubits) if q not in gate.qubits]
    if kind == "RZZ":
        a, b = gate.targets
        return [cnot(a, b), rz(gate.angle, b), cnot(a, b)]
    if kind == "CRY":
        (c,), (t,) = gate.controls, gate.targets
        half = gate.angle / 2
        return [ry(half, t), cnot(c, t), ry(-half, t), cnot(c, t)]
    if kind == "MCRZ":
        return _decompose_mcrz(gate.angle, gate.controls, gate.targets[0], idle)
    if kind == "MCRZZ":
        t1, t2 = gate.targets
        ctrl = gate.controls + (t1,)
        return ([x(t1)] + _decompose_mcrz(gate.angle, ctrl, t2, idle) + [x(t1)]
                + _decompose_mcrz(-gate.angle, ctrl, t2, idle))
    raise InvalidGateError(f"cannot decompose {kind}")


def decompose(circuit: Circuit) -> Circuit:
    """Rewrite into {CNOT, RZ, RY, H, P, X}; equal to the input up to global phase."""
    out = []
    for g in circuit.gates:
        out.extend(decompose_gate(g, circuit.num_qubits))
    return Circuit(circuit.num_qubits, out)


def cancel_flips(circuit: Circuit) -> Circuit:
    """Drop pairs of X gates on one qubit separated only by gates that avoid it.

    The result implements exactly the same unitary; it is a simulation
    speed-up and leaves the builder output (and its gate counts) untouched.
    """
    out: list[Gate | None] = []
    last: dict[int, int] = {}  # qubit -> index in ``out`` of the latest gate touching it
    for g in circuit.gates:
        if g.kind == "X":
            (q,) = g.targets
            i = last.get(q)
            if i is not None and out[i] is not None and out[i].kind == "X":
                out[i] = None
                # nothing left to pair with until another gate touches the qubit
                del last[q]
                continue
        for q in g.qubits:
            last[q] = len(out)
        out.append(g)
    return Circuit(circuit.num_qubits, [g for g in out if g is not None])


# -- counting ----------------------------------------------------------------

@dataclass(frozen=True)
class GateCount:
    counts: dict = field(default_factory=dict)
    cnot_after_decomposition: int = 0

    def __getitem__(self, kind):
        return self.counts.get(kind, 0)

    def __add__(self, other: GateCount) -> GateCount:
        merged = Counter(self.counts)
        merged.update(other.counts)
        return GateCount(dict(merged), self.cnot_after_decomposition + other.cnot_after_decomposition)

    @property
    def total(self):
        return sum(self.counts.values())

    def to_dict(self):
        return {"counts": dict(sorted(self.counts.items())),
                "cnot_after_decomposition": self.cnot_after_decomposition}


_cnot_cache: dict = {}


def _decomposed_cnots(gate: Gate, num_qubits: int) -> int:
    if gate.kind in BASIS_KINDS:
        return int(gate.kind == "CNOT")
    # the cost depends only on the kind, the control count and how many idle qubits exist
    key = (gate.kind, len(gate.controls), num_qubits - len(gate.qubits))
    if key not in _cnot_cache:
        _cnot_cache[key] = sum(g.kind == "CNOT" for g in decompose_gate(gate, num_qubits))
    return _cnot_cache[key]


def count(circuit: Circuit) -> GateCount:
    kinds = Counter(g.kind for g in circuit.gates)
    cnots = sum(_decomposed_cnots(g, circuit.num_qubits) for g in circuit.gates)
    return GateCount(dict(kinds), cnots)


# -- dense oracle ------------------------------------------------------------

def dense_unitary(circuit: Circuit) -> np.ndarray:
    n = circuit.num_qubits
    if n > DENSE_QUBIT_LIMIT:
        raise InvalidCircuitError(f"dense unitary refused for {n} > {DENSE_QUBIT_LIMIT} qubits")
    u = np.eye(1 << n, dtype=complex)
    for g in circuit.gates:
        _kernels.apply_gate_inplace(u, g, n)
    return u


def equal_up_to_phase(u: np.ndarray, v: np.ndarray, atol: float = 1e-9) -> bool:
    idx = np.unravel_index(np.argmax(np.abs(v)), v.shape)
    if abs(u[idx]) < 1e-300:
        return False
    phase = v[idx] / u[idx]
    return abs(abs(phase) - 1) <= atol and np.allclose(u * phase, v, atol=atol, rtol=0)
