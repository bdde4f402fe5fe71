import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlee.circuit import Circuit, InvalidCircuitError, InvalidGateError, Gate, cnot, h, mcrz, u_bell, x
from qlee.lee import prepare_point_source
from qlee.diffops import GridSpec
from qlee.statevector import (
    FieldGrid,
    RegisterLayout,
    StateVector,
    apply_circuit,
    apply_gate,
    extract_field,
    field_to_state,
    l2_distance,
    prepare_basis_state,
)

from conftest import random_state

S2 = 1 / np.sqrt(2)


def test_basis_states():
    np.testing.assert_array_equal(prepare_basis_state(1, 0).amplitudes, [1, 0])
    np.testing.assert_array_equal(prepare_basis_state(2, 3).amplitudes, [0, 0, 0, 1])
    big = prepare_basis_state(12, 0)
    assert big.amplitudes.size == 4096 and big.amplitudes[0] == 1


@pytest.mark.parametrize("n,index", [(1, 2), (3, -1), (2, 4)])
def test_basis_state_out_of_range(n, index):
    with pytest.raises(IndexError):
        prepare_basis_state(n, index)


def test_x_and_h():
    s = apply_gate(prepare_basis_state(1, 0), x(0))
    np.testing.assert_allclose(s.amplitudes, [0, 1])
    s = apply_gate(prepare_basis_state(1, 0), h(0))
    np.testing.assert_allclose(s.amplitudes, [S2, S2], atol=1e-15)


def test_mcrz_idle_controls_do_nothing(rng):
    # controls on qubits 1, 2 in |0>; target 0 arbitrary
    amps = np.zeros(8, dtype=complex)
    amps[:2] = [0.6, 0.8j]
    s = apply_gate(StateVector(amps.copy()), mcrz(0.7, [1, 2], 0))
    np.testing.assert_array_equal(s.amplitudes, amps)


def test_overlapping_qubits_rejected():
    with pytest.raises(InvalidGateError):
        Gate("MCRZ", 0.1, (0, 1), (1,))


def test_gate_outside_register():
    with pytest.raises(InvalidGateError):
        apply_gate(prepare_basis_state(2, 0), x(2))


def test_circuit_identities(rng):
    psi = random_state(3, rng)
    s = apply_circuit(StateVector(psi.copy()), Circuit(3))
    np.testing.assert_array_equal(s.amplitudes, psi)
    s = apply_circuit(StateVector(psi.copy()), Circuit(3, [x(0), x(0)]))
    np.testing.assert_allclose(s.amplitudes, psi, atol=1e-15)
    u = u_bell(3, -np.pi / 2, [0, 1, 2])
    s = apply_circuit(StateVector(psi.copy()), u + u.inverse())
    np.testing.assert_allclose(s.amplitudes, psi, atol=1e-12)


def test_circuit_qubit_mismatch():
    with pytest.raises(InvalidCircuitError):
        apply_circuit(prepare_basis_state(3, 0), Circuit(2, [x(0)]))


def test_layout_indices():
    lay = RegisterLayout(2, 3)
    assert lay.num_qubits == 7
    assert lay.a1 == 6 and lay.a2 == 5
    assert lay.x_qubits() == [3, 4] and lay.y_qubits() == [0, 1, 2]
    # (a1 a2) = 01 is the u sector
    assert lay.index_of(1, 2, 5) == ((0 * 2 + 1) * 4 + 2) * 8 + 5
    assert lay.decode(lay.index_of(2, 3, 7)) == (2, 3, 7)


@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_layout_round_trip(nx, ny, data):
    lay = RegisterLayout(nx, ny)
    i = data.draw(st.integers(0, (1 << lay.num_qubits) - 1))
    assert lay.index_of(*lay.decode(i)) == i


def test_extract_single_point():
    lay = RegisterLayout(2, 2)
    s = prepare_basis_state(6, lay.index_of(0, 1, 2), lay)
    f = extract_field(s, 0.5)
    expected = np.zeros((4, 4))
    expected[1, 2] = 0.5
    np.testing.assert_array_equal(f.p, expected)
    assert not f.u.any() and not f.v.any()
    assert not f.zero_sector_flag


def test_zero_sector_flag():
    lay = RegisterLayout(1, 1)
    s = prepare_basis_state(4, lay.index_of(3, 0, 0), lay)
    assert extract_field(s).zero_sector_flag


def test_imag_residual_reported():
    lay = RegisterLayout(1, 1)
    amps = np.zeros(16, dtype=complex)
    amps[0] = 0.6
    amps[1] = 0.8j
    f = extract_field(StateVector(amps, lay))
    assert f.imag_residual == pytest.approx(0.8)


def test_center_source_round_trip():
    grid = GridSpec(5, 5, 0.25)
    state, nf, _ = prepare_point_source(grid, [(16, 16, 2, 0.5)])
    f = extract_field(state, nf)
    expected = np.zeros((32, 32))
    expected[16:18, 16:18] = 0.5
    np.testing.assert_array_equal(f.p, expected)
    again, nf2 = field_to_state(f, state.layout)
    np.testing.assert_allclose(again.amplitudes, state.amplitudes, atol=1e-12)
    assert nf2 == pytest.approx(nf, abs=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_field_round_trip(seed):
    rng = np.random.default_rng(seed)
    lay = RegisterLayout(2, 1)
    blocks = np.zeros((4,) + lay.shape)
    blocks[:3] = rng.standard_normal((3,) + lay.shape)
    state = StateVector((blocks / np.linalg.norm(blocks)).ravel(), lay)
    f = extract_field(state, 3.0)
    again, nf = field_to_state(f, lay)
    np.testing.assert_allclose(again.amplitudes, state.amplitudes, atol=1e-12)
    assert nf == pytest.approx(3.0)


def test_l2_distance():
    z = np.zeros((2, 2))
    a = FieldGrid(z.copy(), z.copy(), z.copy())
    assert l2_distance(a, a) == 0
    b = FieldGrid(z.copy(), z.copy(), z.copy())
    b.u[1, 0] = 0.3
    assert l2_distance(a, b, "u") == pytest.approx(0.3)
    with pytest.raises(ValueError):
        l2_distance(a, FieldGrid(np.zeros((4, 2)), z, z))


_GATES = st.sampled_from(["X", "H", "P", "RZ", "RY", "RZZ", "CNOT", "MCRZ", "MCRZZ", "CRY"])


@st.composite
def random_circuits(draw, n=4):
    gates = []
    for _ in range(draw(st.integers(0, 12))):
        kind = draw(_GATES)
        qs = draw(st.permutations(range(n)))
        angle = draw(st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False))
        if kind in ("X", "H"):
            gates.append(Gate(kind, None, (), (qs[0],)))
        elif kind in ("P", "RZ", "RY"):
            gates.append(Gate(kind, angle, (), (qs[0],)))
        elif kind == "RZZ":
            gates.append(Gate(kind, angle, (), (qs[0], qs[1])))
        elif kind == "CNOT":
            gates.append(cnot(qs[0], qs[1]))
        elif kind == "CRY":
            gates.append(Gate(kind, angle, (qs[0],), (qs[1],)))
        elif kind == "MCRZ":
            k = draw(st.integers(1, n - 1))
            gates.append(Gate(kind, angle, tuple(qs[1:k + 1]), (qs[0],)))
        else:
            k = draw(st.integers(1, n - 2))
            gates.append(Gate(kind, angle, tuple(qs[2:k + 2]), (qs[0], qs[1])))
    return Circuit(n, gates)


@given(random_circuits(), st.integers(0, 2**32 - 1))
def test_unitarity_and_linearity(circ, seed):
    rng = np.random.default_rng(seed)
    s1, s2 = random_state(4, rng), random_state(4, rng)
    a, b = 0.3 - 0.2j, 1.1j
    out1 = apply_circuit(StateVector(s1.copy()), circ).amplitudes
    out2 = apply_circuit(StateVector(s2.copy()), circ).amplitudes
    mix = apply_circuit(StateVector(a * s1 + b * s2), circ).amplitudes
    assert abs(np.linalg.norm(out1) - 1) < 1e-10
    np.testing.assert_allclose(mix, a * out1 + b * out2, atol=1e-10)
