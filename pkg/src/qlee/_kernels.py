"""Array-level gate kernels shared by the statevector and dense-unitary paths.

Amplitude arrays have shape ``(2**n,)`` or ``(2**n, m)``; the trailing axis is
a batch of independent columns.  Qubit ``q`` is bit ``q`` of the basis index,
so it maps to axis ``n - 1 - q`` of the ``(2,) * n`` tensor view.
"""

import numpy as np

_SQRT_HALF = np.sqrt(0.5)

# kinds whose unitary is diagonal in the computational basis
DIAGONAL_KINDS = frozenset({"P", "RZ", "RZZ", "MCRZ", "MCRZZ"})


def single_qubit_matrix(kind, angle=None):
    if kind in ("X", "CNOT"):
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if kind == "H":
        return np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT_HALF
    if kind == "P":
        return np.diag([1.0, np.exp(1j * angle)])
    if kind in ("RZ", "MCRZ"):
        return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])
    if kind in ("RY", "CRY"):
        c, s = np.cos(angle / 2), np.sin(angle / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    raise ValueError(f"no single-qubit matrix for kind {kind!r}")


def _tensor_view(psi, num_qubits):
    if psi.shape[0] != 1 << num_qubits:
        raise ValueError("amplitude array does not match qubit count")
    return psi.reshape((2,) * num_qubits + psi.shape[1:])


def _selector(num_qubits, ndim, fixed):
    sel = [slice(None)] * ndim
    for q, bit in fixed.items():
        sel[num_qubits - 1 - q] = slice(bit, bit + 1)
    return tuple(sel)


def apply_gate_inplace(psi, gate, num_qubits):
    """Apply ``gate`` to ``psi`` in place.

    Control bits are fixed with length-1 slices so every sub-block stays a view
    of the original buffer.
    """
    t = _tensor_view(psi, num_qubits)
    ndim = t.ndim
    ctrl = {c: 1 for c in gate.controls}
    kind = gate.kind

    if kind in ("RZZ", "MCRZZ"):
        a, b = gate.targets
        half = 0.5 * gate.angle
        for ba in (0, 1):
            for bb in (0, 1):
                sign = 1.0 if ba == bb else -1.0
                fixed = dict(ctrl)
                fixed[a] = ba
                fixed[b] = bb
                t[_selector(num_qubits, ndim, fixed)] *= np.exp(-1j * half * sign)
        return psi

    (target,) = gate.targets
    if kind in DIAGONAL_KINDS:
        m = single_qubit_matrix(kind, gate.angle)
        for bit in (0, 1):
            if m[bit, bit] == 1.0:
                continue
            fixed = dict(ctrl)
            fixed[target] = bit
            t[_selector(num_qubits, ndim, fixed)] *= m[bit, bit]
        return psi

    v0 = t[_selector(num_qubits, ndim, {**ctrl, target: 0})]
    v1 = t[_selector(num_qubits, ndim, {**ctrl, target: 1})]
    a0 = v0.copy()
    if kind in ("X", "CNOT"):
        v0[...] = v1
        v1[...] = a0
        return psi
    m = single_qubit_matrix(kind, gate.angle)
    v0[...] = m[0, 0] * a0 + m[0, 1] * v1
    v1[...] = m[1, 0] * a0 + m[1, 1] * v1
    return psi
