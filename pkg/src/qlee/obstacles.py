"""Binary-cell obstacles: geometry, boundary correction terms and their circuits.

A binary cell is the set of grid points whose x and y coordinate bitstrings
start with given prefixes (most significant bit first).  Removing an obstacle
from the central difference operator deletes, for every cell side, the single
+/-1 pair that couples the cell to its outside neighbour.  Each such pair is a
prefix-projected copy of the ``j = n_hat`` shift-pair generator, so its
evolution joins the ``j = n_hat`` group of the free operator exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .circuit import Circuit, Gate, bell_block, mcrz, x
from .diffops import GridSpec, canonical, diff, lift
from .statevector import RegisterLayout


def _check_bits(s: str, what: str):
    if not s or set(s) - {"0", "1"}:
        raise ValueError(f"{what} must be a non-empty bitstring, got {s!r}")


@dataclass(frozen=True)
class BinaryCell:
    x_prefix: str
    y_prefix: str

    def __post_init__(self):
        _check_bits(self.x_prefix, "x prefix")
        _check_bits(self.y_prefix, "y prefix")

    def prefix(self, axis: str) -> str:
        return self.x_prefix if axis == "x" else self.y_prefix

    def span(self, axis: str, grid: GridSpec) -> tuple[int, int]:
        """Half-open coordinate range covered along ``axis``."""
        b = self.prefix(axis)
        free = grid.n(axis) - len(b)
        if free < 0:
            raise ValueError(f"cell prefix {b!r} longer than the {axis} register")
        lo = int(b, 2) << free
        return lo, lo + (1 << free)

    def raster(self, grid: GridSpec) -> np.ndarray:
        m = np.zeros(grid.shape, dtype=bool)
        (x0, x1), (y0, y1) = self.span("x", grid), self.span("y", grid)
        m[x0:x1, y0:y1] = True
        return m

    def to_text(self) -> str:
        return f"{self.x_prefix},{self.y_prefix}"


@dataclass(frozen=True)
class ObstacleSpec:
    grid: GridSpec
    cells: tuple[BinaryCell, ...] = ()
    mask: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        m = np.zeros(self.grid.shape, dtype=bool)
        for c in self.cells:
            r = c.raster(self.grid)
            if np.any(m & r):
                raise ValueError(f"cell {c.to_text()} overlaps another cell")
            m |= r
        m.flags.writeable = False
        object.__setattr__(self, "mask", m)

    def __bool__(self):
        return bool(self.cells)


def decompose_mask(mask, grid: GridSpec) -> ObstacleSpec:
    """Cover a boolean ``[x, y]`` raster with disjoint binary cells.

    Quadtree-style: uniform regions stop, mixed regions split along the axis
    with more free bits (ties split x).  Cells need at least one prefix bit per
    axis, so uniform regions spanning a whole axis are split once more.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != grid.shape:
        raise ValueError(f"mask shape {mask.shape} != grid shape {grid.shape}")
    cells: list[BinaryCell] = []
    stack = [("", "")]
    while stack:
        xp, yp = stack.pop()
        fx, fy = grid.n_x - len(xp), grid.n_y - len(yp)
        x0 = (int(xp, 2) << fx) if xp else 0
        y0 = (int(yp, 2) << fy) if yp else 0
        region = mask[x0:x0 + (1 << fx), y0:y0 + (1 << fy)]
        if not region.any():
            continue
        full = region.all()
        if full and xp and yp:
            cells.append(BinaryCell(xp, yp))
            continue
        if full:
            split_x = not xp
        else:
            split_x = fx >= fy
        # push the 1-child first so the 0-child is processed first
        if split_x:
            stack += [(xp + "1", yp), (xp + "0", yp)]
        else:
            stack += [(xp, yp + "1"), (xp, yp + "0")]
    return ObstacleSpec(grid, tuple(_merge_siblings(cells)))


def _merge_siblings(cells: list[BinaryCell]) -> list[BinaryCell]:
    """Join pairs differing only in the last bit of one prefix, until none remain."""
    live = {(c.x_prefix, c.y_prefix) for c in cells}
    changed = True
    while changed:
        changed = False
        for xp, yp in sorted(live):
            if (xp, yp) not in live:
                continue
            for axis in ("x", "y"):
                pref = xp if axis == "x" else yp
                if len(pref) < 2 or pref[-1] != "0":
                    continue
                sib = (pref[:-1] + "1", yp) if axis == "x" else (xp, pref[:-1] + "1")
                if sib in live:
                    live -= {(xp, yp), sib}
                    live.add((pref[:-1], yp) if axis == "x" else (xp, pref[:-1]))
                    changed = True
                    break
    return [BinaryCell(xp, yp) for xp, yp in sorted(live)]


def rasterize(obstacle: ObstacleSpec) -> np.ndarray:
    return np.array(obstacle.mask)


def common_prefix_lengths(prefix: str, n: int | None = None):
    """Shared leading bits of ``prefix`` with ``prefix - 1`` and ``prefix + 1``.

    Returns ``(p_minus, p_plus)``; a side at the domain edge (all-zero or
    all-one prefix) is reported as ``None``.
    """
    _check_bits(prefix, "prefix")
    k = len(prefix)
    if n is not None and k > n:
        raise ValueError(f"prefix {prefix!r} longer than register of {n} qubits")
    value = int(prefix, 2)

    def shared(other: int) -> int:
        o = format(other, f"0{k}b")
        return next((i for i in range(k) if o[i] != prefix[i]), k)

    p_minus = shared(value - 1) if value > 0 else None
    p_plus = shared(value + 1) if value < (1 << k) - 1 else None
    return p_minus, p_plus


@dataclass(frozen=True)
class CorrectionTerm:
    """One removed +/-1 pair family: projector on shared prefix and cross prefix."""

    axis: str
    side: str
    n_hat: int
    prefix_bits: str
    cross_bits: str
    prefix_controls: tuple[tuple[int, int], ...]
    cross_controls: tuple[tuple[int, int], ...]

    @property
    def controls(self) -> tuple[tuple[int, int], ...]:
        return self.prefix_controls + self.cross_controls

    def pair(self) -> tuple[int, int]:
        """Axis coordinates ``(lo, hi)`` of the removed pair, ``hi = lo + 1``."""
        base = int(self.prefix_bits, 2) << self.n_hat if self.prefix_bits else 0
        lo = base | ((1 << (self.n_hat - 1)) - 1)
        return lo, lo + 1


def _bit_controls(bits: str, qubits_lsb_first) -> tuple[tuple[int, int], ...]:
    n = len(qubits_lsb_first)
    return tuple((qubits_lsb_first[n - 1 - i], int(b)) for i, b in enumerate(bits))


def correction_terms(cell: BinaryCell, axis: str, grid: GridSpec) -> list[CorrectionTerm]:
    layout = RegisterLayout(grid.n_x, grid.n_y)
    other = "y" if axis == "x" else "x"
    n = grid.n(axis)
    b = cell.prefix(axis)
    cell.span(axis, grid)  # rejects prefixes longer than the register
    cross = cell.prefix(other)
    cross_ctrl = _bit_controls(cross, layout.axis_qubits(other))
    terms = []
    for side, p in zip(("minus", "plus"), common_prefix_lengths(b, n)):
        if p is None:
            continue
        shared = b[:p]
        terms.append(CorrectionTerm(
            axis=axis, side=side, n_hat=n - p, prefix_bits=shared, cross_bits=cross,
            prefix_controls=_bit_controls(shared, layout.axis_qubits(axis)),
            cross_controls=cross_ctrl,
        ))
    return terms


def obstacle_terms(obstacle: ObstacleSpec | None, axis: str) -> list[CorrectionTerm]:
    """All correction terms of an obstacle along ``axis``, shared boundaries pruned.

    A cell side whose outside neighbours all lie inside the obstacle needs no
    correction; because cell spans are dyadic, this rule never removes the same
    matrix entry twice.
    """
    if not obstacle:
        return []
    grid, mask = obstacle.grid, obstacle.mask
    out = []
    for cell in obstacle.cells:
        lo, hi = cell.span(axis, grid)
        other = "y" if axis == "x" else "x"
        c0, c1 = cell.span(other, grid)
        for term in correction_terms(cell, axis, grid):
            nb = lo - 1 if term.side == "minus" else hi
            line = mask[nb, c0:c1] if axis == "x" else mask[c0:c1, nb]
            if not line.all():
                out.append(term)
    return out


def term_axis_matrix(term: CorrectionTerm, n: int) -> sp.csr_array:
    """``P_prefix (x) (|01..1><10..0| - |10..0><01..1|)`` on one axis (unscaled)."""
    lo, hi = term.pair()
    size = 1 << n
    return canonical(sp.coo_array(([1.0, -1.0], ([lo, hi], [hi, lo])), shape=(size, size)))


def _cross_projector(term: CorrectionTerm, grid: GridSpec) -> sp.csr_array:
    other = "y" if term.axis == "x" else "x"
    n_other = grid.n(other)
    free = n_other - len(term.cross_bits)
    lo = int(term.cross_bits, 2) << free
    diag = np.zeros(1 << n_other)
    diag[lo:lo + (1 << free)] = 1.0
    return sp.diags(diag, format="csr")


def _embed(axis_op, cross, axis, ancillas=2):
    anc = sp.identity(1 << ancillas, format="csr")
    inner = sp.kron(axis_op, cross) if axis == "x" else sp.kron(cross, axis_op)
    return canonical(sp.kron(anc, inner))


def term_matrix(term: CorrectionTerm, grid: GridSpec, part: str = "both", ancillas: int = 2) -> sp.csr_array:
    """Lifted generator of ``term``; ``part`` selects the upper (S-) or lower (S+) entry."""
    lo, hi = term.pair()
    size = 1 << grid.n(term.axis)
    if part == "both":
        axis_op = term_axis_matrix(term, grid.n(term.axis))
    elif part == "upper":
        axis_op = sp.coo_array(([1.0], ([lo], [hi])), shape=(size, size))
    elif part == "lower":
        axis_op = sp.coo_array(([1.0], ([hi], [lo])), shape=(size, size))
    else:
        raise ValueError(f"unknown part {part!r}")
    return _embed(sp.csr_array(axis_op), _cross_projector(term, grid), term.axis, ancillas)


def masked_shifts(axis: str, obstacle: ObstacleSpec | None, grid: GridSpec, ancillas: int = 2):
    """Lifted ``(S^-, S^+)`` with every obstacle-crossing entry removed."""
    from .diffops import shift

    n = grid.n(axis)
    sm = lift(shift(n, "minus"), axis, grid, ancillas)
    spl = lift(shift(n, "plus"), axis, grid, ancillas)
    for term in obstacle_terms(obstacle, axis):
        sm = sm - term_matrix(term, grid, "upper", ancillas)
        spl = spl - term_matrix(term, grid, "lower", ancillas)
    return canonical(sm), canonical(spl)


def masked_diff(n: int, l: float, axis: str, obstacle: ObstacleSpec | None, grid: GridSpec,
                ancillas: int = 2) -> sp.csr_array:
    """Lifted central Dirichlet difference with obstacle-crossing pairs removed."""
    if n != grid.n(axis):
        raise ValueError(f"n={n} does not match the {axis} register ({grid.n(axis)})")
    m = lift(diff(n, l, "central", "dirichlet"), axis, grid, ancillas)
    for term in obstacle_terms(obstacle, axis):
        m = m - term_matrix(term, grid, ancillas=ancillas) / (2 * l)
    return canonical(m)


def with_controls(gate: Gate, extra) -> list[Gate]:
    """Add ``(qubit, bit)`` controls to an RZ/RZZ-family gate; bit 0 is X-conjugated."""
    extra = list(extra)
    if not extra:
        return [gate]
    controls = gate.controls + tuple(q for q, _ in extra)
    kind = {"RZ": "MCRZ", "MCRZ": "MCRZ", "RZZ": "MCRZZ", "MCRZZ": "MCRZZ"}[gate.kind]
    flips = [x(q) for q, bit in extra if bit == 0]
    return flips + [Gate(kind, gate.angle, controls, gate.targets)] + flips


def terms_by_size(terms) -> dict[int, list[CorrectionTerm]]:
    out: dict[int, list[CorrectionTerm]] = {}
    for t in terms:
        out.setdefault(t.n_hat, []).append(t)
    return out


def masked_diff_group(j: int, gamma: float, l: float, qs, terms) -> list[Gate]:
    """The ``j`` group: free rotation plus sign-flipped controlled copies, one basis-change pair."""
    base = mcrz(gamma / l, qs[: j - 1], qs[j - 1])
    inner = [base]
    for t in terms:
        inner += with_controls(base.inverse(), t.controls)
    return bell_block(j, qs, inner)


def masked_diff_circuit(n: int, gamma: float, axis: str, obstacle: ObstacleSpec | None,
                        grid: GridSpec, layout: RegisterLayout | None = None) -> Circuit:
    """Product over ``j`` of exact group exponentials of the masked generator."""
    if n != grid.n(axis):
        raise ValueError(f"n={n} does not match the {axis} register ({grid.n(axis)})")
    if obstacle is not None and obstacle.grid != grid:
        raise ValueError("obstacle was built for a different grid")
    layout = layout or RegisterLayout(grid.n_x, grid.n_y)
    qs = layout.axis_qubits(axis)
    groups = terms_by_size(obstacle_terms(obstacle, axis))
    gates = []
    for j in range(1, n + 1):
        gates += masked_diff_group(j, gamma, grid.l, qs, groups.get(j, []))
    return Circuit(layout.num_qubits, gates)


def group_generator(j: int, axis: str, grid: GridSpec, terms=(), ancillas: int = 2) -> sp.csr_array:
    """Lifted ``j``-th shift-pair generator minus its obstacle terms (unscaled)."""
    n = grid.n(axis)
    size = 1 << n
    lo = np.arange(1 << (n - j)) * (1 << j) + (1 << (j - 1)) - 1
    g = sp.coo_array(
        (np.r_[np.ones(lo.size), -np.ones(lo.size)], (np.r_[lo, lo + 1], np.r_[lo + 1, lo])),
        shape=(size, size),
    )
    m = lift(sp.csr_array(g), axis, grid, ancillas)
    for t in terms:
        m = m - term_matrix(t, grid, ancillas=ancillas)
    return canonical(m)


def read_mask(text: str, grid: GridSpec) -> np.ndarray:
    """Parse an ASCII ``0/1`` raster: one row per y (row 0 is y = 0), one column per x."""
    rows = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    nx, ny = grid.shape
    if len(rows) != ny:
        raise ValueError(f"mask has {len(rows)} rows, expected {ny}")
    out = np.zeros((nx, ny), dtype=bool)
    for y, row in enumerate(rows):
        if len(row) != nx or set(row) - {"0", "1"}:
            raise ValueError(f"mask row {y + 1}: expected {nx} characters of 0/1")
        out[:, y] = [c == "1" for c in row]
    return out


def write_mask(mask) -> str:
    mask = np.asarray(mask, dtype=bool)
    return "\n".join("".join("1" if b else "0" for b in mask[:, y]) for y in range(mask.shape[1])) + "\n"


def read_cells(text: str, grid: GridSpec) -> ObstacleSpec:
    cells = []
    for lineno, ln in enumerate(text.splitlines(), 1):
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        try:
            xp, yp = (s.strip() for s in ln.split(","))
            cell = BinaryCell(xp, yp)
            cell.span("x", grid), cell.span("y", grid)
        except ValueError as exc:
            raise ValueError(f"cell list line {lineno}: {exc}") from None
        cells.append(cell)
    return ObstacleSpec(grid, tuple(cells))
