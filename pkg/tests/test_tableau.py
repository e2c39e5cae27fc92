"""Stabilizer tableau engine checked against dense statevectors."""

import itertools

import numpy as np
import pytest

import oracles
from ftqs.paulis import CliffordCircuit, CliffordLayer, Gate, PauliString
from ftqs.statevec import apply_cz, apply_pauli_state, born_probs, plus_state, project_pauli
from ftqs.tableau import StabilizerState, apply_clifford, measure_pauli


def graph_state_tableau(n, edges):
    st = StabilizerState.plus(n)
    for a, b in edges:
        st.apply_gate(Gate("CZ", (a, b)))
    return st


def graph_state_vector(n, edges):
    psi = plus_state(n)
    for a, b in edges:
        apply_cz(psi, a, b, n)
    return psi


def all_graphs(n):
    pairs = list(itertools.combinations(range(n), 2))
    for mask in range(2 ** len(pairs)):
        yield [pairs[i] for i in range(len(pairs)) if mask >> i & 1]


def test_zero_state_stabilizers():
    st = StabilizerState.zeros(2)
    labels = {s.to_label() for s in st.stabilizers()}
    assert labels == {"+ZI", "+IZ"}


def test_plus_state_stabilizers():
    st = StabilizerState.plus(2)
    labels = {s.to_label() for s in st.stabilizers()}
    assert labels == {"+XI", "+IX"}


def test_single_edge_graph_state_stabilizers():
    st = graph_state_tableau(2, [(0, 1)])
    labels = {s.to_label() for s in st.stabilizers()}
    assert labels == {"+XZ", "+ZX"}


def test_gate_then_inverse_restores_tableau():
    inverse_word = {
        "H": ["H"],
        "S": ["S", "S", "S"],
        "X": ["X"],
        "Y": ["Y"],
        "Z": ["Z"],
        "CZ": ["CZ"],
        "CNOT": ["CNOT"],
        "SWAP": ["SWAP"],
    }
    rng = np.random.default_rng(61)
    for name, word in inverse_word.items():
        qubits = (0,) if name in ("H", "S", "X", "Y", "Z") else (0, 2)
        st = StabilizerState.plus(3)
        # Scramble first so we are not at a fixed point of the gate.
        for _ in range(4):
            g = Gate("S", (int(rng.integers(0, 3)),))
            st.apply_gate(g)
            st.apply_gate(Gate("CZ", (0, 1)))
        ref = st.copy()
        st.apply_gate(Gate(name, qubits))
        for w in word:
            st.apply_gate(Gate(w, qubits))
        assert np.array_equal(st.X, ref.X)
        assert np.array_equal(st.Z, ref.Z)
        assert np.array_equal(st.r, ref.r)


def test_statevector_agreement_random_circuits():
    """Tableau stabilizers all fix the dense state evolved by the same circuit."""
    rng = np.random.default_rng(67)
    names_1q = ("H", "S", "X", "Y", "Z")
    names_2q = ("CZ", "CNOT", "SWAP")
    for _ in range(25):
        n = int(rng.integers(2, 5))
        st = StabilizerState.zeros(n)
        psi = np.zeros(2**n, complex)
        psi[0] = 1.0
        layers = []
        for _ in range(int(rng.integers(1, 4))):
            qubits = list(range(n))
            rng.shuffle(qubits)
            gates = []
            while qubits:
                if len(qubits) >= 2 and rng.random() < 0.5:
                    gates.append(Gate(names_2q[rng.integers(0, 3)], (qubits.pop(), qubits.pop())))
                else:
                    gates.append(Gate(names_1q[rng.integers(0, 5)], (qubits.pop(),)))
            layers.append(CliffordLayer(n, gates))
        circ = CliffordCircuit(n, layers)
        apply_clifford(st, circ)
        U = oracles.circuit_matrix(circ)
        psi = U @ psi
        for stab in st.stabilizers():
            assert np.allclose(apply_pauli_state(psi, stab), psi, atol=1e-10)


def test_deterministic_z_measurement_on_zeros():
    st = StabilizerState.zeros(3)
    outcome, deterministic = st.measure(PauliString.from_label("+IZI"))
    assert deterministic and outcome == 0
    st.apply_gate(Gate("X", (1,)))
    outcome, deterministic = st.measure(PauliString.from_label("+IZI"))
    assert deterministic and outcome == 1


def test_random_z_measurement_on_plus_both_branches():
    for force in (0, 1):
        st = StabilizerState.plus(1)
        outcome, deterministic = st.measure(PauliString.from_label("+Z"), force=force)
        assert not deterministic and outcome == force
        again, det2 = st.measure(PauliString.from_label("+Z"))
        assert det2 and again == force


def test_force_on_deterministic_mismatch_raises():
    st = StabilizerState.zeros(1)
    with pytest.raises(ValueError):
        st.measure(PauliString.from_label("+Z"), force=1)


def test_graph_state_x_measurement_teleports():
    """Measuring X on one end of an edge leaves |outcome> on the other end."""
    for force in (0, 1):
        st = graph_state_tableau(2, [(0, 1)])
        outcome, deterministic = st.measure(PauliString.from_label("+XI"), force=force)
        assert not deterministic and outcome == force
        z1, det_z = st.measure(PauliString.from_label("+IZ"))
        assert det_z and z1 == force


def test_apply_pauli_flips_measurement():
    st = StabilizerState.zeros(2)
    st.apply_pauli(PauliString.from_label("+XI"))
    outcome, deterministic = st.measure(PauliString.from_label("+ZI"))
    assert deterministic and outcome == 1


def test_measurement_marginals_match_statevector_on_graph_states():
    """Single-qubit X/Y/Z marginals on every graph state with <= 4 vertices."""
    for n in (2, 3, 4):
        for edges in all_graphs(n):
            psi = graph_state_vector(n, edges)
            for q in range(n):
                for letter in "XYZ":
                    obs = PauliString.single(n, q, letter)
                    _, prob_plus = project_pauli(psi, obs, 0)
                    st = graph_state_tableau(n, edges)
                    if abs(prob_plus - 0.5) < 1e-12:
                        for force in (0, 1):
                            st2 = graph_state_tableau(n, edges)
                            outcome, deterministic = st2.measure(obs, force=force)
                            assert not deterministic and outcome == force
                    else:
                        outcome, deterministic = st.measure(obs)
                        assert deterministic
                        expected = 0 if prob_plus > 0.5 else 1
                        assert outcome == expected


def test_post_measurement_state_matches_statevector():
    edges = [(0, 1), (1, 2), (2, 3), (0, 3)]
    n = 4
    for letter, q, force in [("X", 0, 0), ("X", 0, 1), ("Z", 2, 0), ("Y", 1, 1)]:
        obs = PauliString.single(n, q, letter)
        st = graph_state_tableau(n, edges)
        outcome, deterministic = st.measure(obs, force=force)
        assert not deterministic and outcome == force
        psi = graph_state_vector(n, edges)
        projected, prob = project_pauli(psi, obs, force)
        assert abs(prob - 0.5) < 1e-12
        projected = projected / np.linalg.norm(projected)
        for stab in st.stabilizers():
            assert np.allclose(apply_pauli_state(projected, stab), projected, atol=1e-10)


def test_measure_module_wrapper_returns_state():
    st = StabilizerState.plus(1)
    rng = np.random.default_rng(2)
    outcome, collapsed = measure_pauli(st, PauliString.from_label("+Z"), rng)
    assert outcome in (0, 1) and collapsed is st
    axis = collapsed.single_qubit_axis(0)
    assert axis == ("Z", +1 if outcome == 0 else -1)


def test_random_branch_frequencies():
    rng = np.random.default_rng(73)
    ones = 0
    trials = 4000
    for _ in range(trials):
        st = StabilizerState.plus(1)
        outcome, _ = st.measure(PauliString.from_label("+Z"), rng=rng)
        ones += outcome
    assert abs(ones / trials - 0.5) < 3 * np.sqrt(0.25 / trials)


def test_single_qubit_axis_extraction():
    st = StabilizerState.zeros(2)
    assert st.single_qubit_axis(0) == ("Z", +1)
    st.apply_gate(Gate("X", (0,)))
    assert st.single_qubit_axis(0) == ("Z", -1)
    st.apply_gate(Gate("H", (0,)))
    assert st.single_qubit_axis(0) == ("X", -1)
    st.apply_gate(Gate("H", (1,)))
    st.apply_gate(Gate("CZ", (0, 1)))
    # Qubit 0 is now entangled with qubit 1: no single-qubit axis.
    assert st.single_qubit_axis(0) is None


def test_born_probs_normalization_helper():
    psi = graph_state_vector(3, [(0, 1), (1, 2)])
    probs = born_probs(psi)
    assert abs(probs.sum() - 1.0) < 1e-12
