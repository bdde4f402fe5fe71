"""Sparse shift/difference operators and the free-space difference evolution circuits.

Sparse operators are ``scipy.sparse.csr_array`` instances with canonical
(sorted, duplicate-merged, zero-free) storage.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from math import pi

import numpy as np
import scipy.sparse as sp

from .circuit import Circuit, bell_block, mcrz, x


class BoundaryCondition(str, Enum):
    DIRICHLET = "dirichlet"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class GridSpec:
    n_x: int
    n_y: int
    l: float = 1.0

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1:
            raise ValueError("each axis needs at least one qubit")
        if not self.l > 0:
            raise ValueError("lattice constant must be positive")

    def n(self, axis: str) -> int:
        if axis not in ("x", "y"):
            raise ValueError(f"unknown axis {axis!r}")
        return self.n_x if axis == "x" else self.n_y

    @property
    def shape(self):
        return (1 << self.n_x, 1 << self.n_y)


def canonical(m) -> sp.csr_array:
    m = sp.csr_array(m, dtype=complex)
    m.sum_duplicates()
    m.eliminate_zeros()
    m.sort_indices()
    return m


def _bc(bc) -> BoundaryCondition:
    return BoundaryCondition(bc.value if isinstance(bc, BoundaryCondition) else str(bc).lower())


def shift(n: int, direction: str) -> sp.csr_array:
    """``minus``: sum |k-1><k|;  ``plus``: sum |k><k-1|."""
    if n < 1:
        raise ValueError("shift needs n >= 1")
    size = 1 << n
    k = np.arange(1, size)
    if direction == "minus":
        rows, cols = k - 1, k
    elif direction == "plus":
        rows, cols = k, k - 1
    else:
        raise ValueError(f"unknown shift direction {direction!r}")
    return canonical(sp.coo_array((np.ones(size - 1), (rows, cols)), shape=(size, size)))


def corner(n: int) -> sp.csr_array:
    """Periodic wrap ``-|0><N-1| + |N-1><0|`` (unscaled)."""
    size = 1 << n
    return canonical(sp.coo_array(([-1.0, 1.0], ([0, size - 1], [size - 1, 0])), shape=(size, size)))


def diff(n: int, l: float, scheme: str = "central", bc="dirichlet") -> sp.csr_array:
    if n < 1 or not l > 0:
        raise ValueError("diff needs n >= 1 and l > 0")
    bc = _bc(bc)
    sm, spl = shift(n, "minus"), shift(n, "plus")
    eye = sp.identity(1 << n, dtype=complex, format="csr")
    if scheme == "central":
        m = (sm - spl) / (2 * l)
        if bc is BoundaryCondition.PERIODIC:
            m = m + corner(n) / (2 * l)
        return canonical(m)
    if bc is BoundaryCondition.PERIODIC:
        raise ValueError(f"periodic boundary is only supported for the central scheme, not {scheme!r}")
    if scheme == "forward":
        return canonical((sm - eye) / l)
    if scheme == "backward":
        return canonical((eye - spl) / l)
    raise ValueError(f"unknown difference scheme {scheme!r}")


def lift(op, axis: str, grid: GridSpec, ancillas: int = 2) -> sp.csr_array:
    """Embed an axis operator into the full ``(ancillas, x, y)`` register."""
    n_axis = grid.n(axis)
    if op.shape != (1 << n_axis, 1 << n_axis):
        raise ValueError(f"operator shape {op.shape} does not match {axis} axis with {n_axis} qubits")
    anc = sp.identity(1 << ancillas, dtype=complex, format="csr")
    if axis == "x":
        full = sp.kron(op, sp.identity(1 << grid.n_y, format="csr"))
    else:
        full = sp.kron(sp.identity(1 << grid.n_x, format="csr"), op)
    return canonical(sp.kron(anc, full))


def diff_evolution_circuit(n: int, gamma: float, bc="dirichlet", qubit_slice=None, l: float = 1.0,
                           num_qubits: int | None = None) -> Circuit:
    """First-order product approximating ``exp(gamma * D)`` for the central operator.

    Groups are emitted for ``j = 1..n`` in application order; the periodic wrap
    factor is applied first.
    """
    bc = _bc(bc)
    qs = list(range(n)) if qubit_slice is None else list(qubit_slice)
    if len(qs) != n:
        raise ValueError(f"qubit slice must have {n} entries")
    if num_qubits is None:
        num_qubits = max(qs) + 1
    gates = []
    if bc is BoundaryCondition.PERIODIC:
        gates += wrap_block(qs, [mcrz(-gamma / l, qs[: n - 1], qs[n - 1])])
    for j in range(1, n + 1):
        gates += bell_block(j, qs, [mcrz(gamma / l, qs[: j - 1], qs[j - 1])])
    return Circuit(num_qubits, gates)


def wrap_block(qs, inner) -> list:
    """``X^{n-1} U_n inner U_n^dagger X^{n-1}`` for the periodic wrap entries."""
    n = len(qs)
    flips = [x(q) for q in qs[: n - 1]]
    return flips + bell_block(n, qs, inner, -pi / 2) + flips


def to_coo_text(m) -> str:
    """One ``row col re im`` line per stored entry, row-major order."""
    m = canonical(m).tocoo()
    order = np.lexsort((m.col, m.row))
    lines = [f"# dim {m.shape[0]}"]
    lines += [f"{m.row[i]} {m.col[i]} {float(m.data[i].real)!r} {float(m.data[i].imag)!r}" for i in order]
    return "\n".join(lines) + "\n"


def from_coo_text(text: str) -> sp.csr_array:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    dim = int(lines[0].split()[2])
    rows, cols, vals = [], [], []
    for ln in lines[1:]:
        r, c, re_, im_ = ln.split()
        rows.append(int(r))
        cols.append(int(c))
        vals.append(complex(float(re_), float(im_)))
    return canonical(sp.coo_array((vals, (rows, cols)), shape=(dim, dim)))
