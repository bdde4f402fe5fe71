"""Dense statevector storage, gate application and field extraction.

Register layout (most significant first): ``a1, a2, qx[n_x..1], qy[n_y..1]``;
the global basis index is ``((a1*2 + a2) * 2**n_x + x) * 2**n_y + y``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .circuit import Circuit, Gate, InvalidCircuitError, InvalidGateError

COMPONENTS = ("p", "u", "v")
_SECTOR = {"p": 0, "u": 1, "v": 2, "zero": 3}


@dataclass(frozen=True)
class RegisterLayout:
    n_x: int
    n_y: int
    num_ancillas: int = 2

    @property
    def num_qubits(self) -> int:
        return self.num_ancillas + self.n_x + self.n_y

    @property
    def shape(self) -> tuple[int, int]:
        return (1 << self.n_x, 1 << self.n_y)

    def qx(self, i: int) -> int:
        """Qubit index of ``q_{x,i}`` (``i = 1`` is the least significant bit)."""
        if not 1 <= i <= self.n_x:
            raise IndexError(f"q_x index {i} outside 1..{self.n_x}")
        return self.n_y + i - 1

    def qy(self, i: int) -> int:
        if not 1 <= i <= self.n_y:
            raise IndexError(f"q_y index {i} outside 1..{self.n_y}")
        return i - 1

    def x_qubits(self) -> list[int]:
        return [self.qx(i) for i in range(1, self.n_x + 1)]

    def y_qubits(self) -> list[int]:
        return [self.qy(i) for i in range(1, self.n_y + 1)]

    def axis_qubits(self, axis: str) -> list[int]:
        return self.x_qubits() if axis == "x" else self.y_qubits()

    @property
    def a1(self) -> int:
        return self.n_x + self.n_y + 1

    @property
    def a2(self) -> int:
        return self.n_x + self.n_y

    def index_of(self, sector: int, x: int, y: int) -> int:
        return (((sector << self.n_x) + x) << self.n_y) + y

    def decode(self, index: int) -> tuple[int, int, int]:
        y = index & ((1 << self.n_y) - 1)
        x = (index >> self.n_y) & ((1 << self.n_x) - 1)
        return index >> (self.n_x + self.n_y), x, y


class StateVector:
    """Flat complex amplitude array over ``num_qubits`` qubits."""

    def __init__(self, amplitudes, layout: RegisterLayout | None = None):
        amps = np.ascontiguousarray(amplitudes, dtype=complex)
        n = int(amps.size).bit_length() - 1
        if amps.ndim != 1 or amps.size != 1 << n:
            raise ValueError(f"amplitude length {amps.size} is not a power of two")
        if layout is not None and layout.num_qubits != n:
            raise ValueError("layout qubit count does not match amplitudes")
        self.amplitudes = amps
        self.num_qubits = n
        self.layout = layout

    def copy(self) -> StateVector:
        return StateVector(self.amplitudes.copy(), self.layout)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def __repr__(self):
        return f"StateVector(num_qubits={self.num_qubits}, norm={self.norm():.12g})"


def prepare_basis_state(num_qubits: int, index: int, layout=None) -> StateVector:
    if not 0 <= index < 1 << num_qubits:
        raise IndexError(f"basis index {index} outside [0, 2**{num_qubits})")
    amps = np.zeros(1 << num_qubits, dtype=complex)
    amps[index] = 1.0
    return StateVector(amps, layout)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Apply ``gate`` in place and return ``state``."""
    if any(q >= state.num_qubits for q in gate.qubits):
        raise InvalidGateError(f"{gate.to_text()} outside {state.num_qubits} qubits")
    _kernels.apply_gate_inplace(state.amplitudes, gate, state.num_qubits)
    return state


def apply_circuit(state: StateVector, circuit: Circuit) -> StateVector:
    """Apply every gate of ``circuit`` in order, in place."""
    if circuit.num_qubits != state.num_qubits:
        raise InvalidCircuitError(
            f"circuit has {circuit.num_qubits} qubits, state has {state.num_qubits}"
        )
    amps, n = state.amplitudes, state.num_qubits
    for g in circuit.gates:
        _kernels.apply_gate_inplace(amps, g, n)
    return state


@dataclass
class FieldGrid:
    """Physical fields on the ``2**n_x x 2**n_y`` grid, arrays indexed ``[x, y]``."""

    p: np.ndarray
    u: np.ndarray
    v: np.ndarray
    norm_factor: float = 1.0
    imag_residual: float = 0.0
    zero_sector_norm: float = 0.0
    time: float = 0.0

    @property
    def zero_sector_flag(self) -> bool:
        return self.zero_sector_norm > 1e-12

    def component(self, name: str) -> np.ndarray:
        if name not in COMPONENTS:
            raise ValueError(f"unknown component {name!r}")
        return getattr(self, name)

    def energy(self) -> float:
        return float(np.sum(self.p**2) + np.sum(self.u**2) + np.sum(self.v**2))


def field_to_state(field: FieldGrid, layout: RegisterLayout) -> tuple[StateVector, float]:
    """Encode ``(p, u, v, 0)`` and normalize; returns the state and the norm factor."""
    blocks = np.zeros((4,) + layout.shape, dtype=complex)
    for k, name in enumerate(COMPONENTS):
        blocks[k] = field.component(name)
    norm = float(np.linalg.norm(blocks))
    if norm == 0.0:
        raise ValueError("zero field cannot be normalized")
    return StateVector((blocks / norm).ravel(), layout), norm


def extract_field(state: StateVector, norm_factor: float = 1.0, time: float = 0.0) -> FieldGrid:
    layout = state.layout
    if layout is None:
        raise ValueError("state carries no register layout")
    blocks = state.amplitudes.reshape((4,) + layout.shape) * norm_factor
    return FieldGrid(
        p=blocks[0].real.copy(),
        u=blocks[1].real.copy(),
        v=blocks[2].real.copy(),
        norm_factor=norm_factor,
        imag_residual=float(np.max(np.abs(blocks[:3].imag))),
        zero_sector_norm=float(np.linalg.norm(blocks[3])),
        time=time,
    )


def l2_distance(a: FieldGrid, b: FieldGrid, component: str = "p") -> float:
    x, y = a.component(component), b.component(component)
    if x.shape != y.shape:
        raise ValueError(f"grid shapes differ: {x.shape} vs {y.shape}")
    return float(np.linalg.norm(x - y))
