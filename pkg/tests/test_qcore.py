import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bgc import qcore
from bgc.errors import (
    DimensionMismatch,
    PostselectionImpossible,
    SupportCapExceeded,
    TargetOutsideSubset,
)

from oracles import binomial_bound, circuit_unitary_oracle, kron_embed

H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1, -1]).astype(complex)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def random_circuit(n, num_gates, rng, pairs=None):
    gates = []
    for _ in range(num_gates):
        matrix = qcore.haar_batch(4, 1, rng)[0]
        if pairs is None:
            q1, q2 = rng.choice(n, size=2, replace=False)
        else:
            q1, q2 = pairs[rng.integers(len(pairs))]
        gates.append(qcore.GatePlacement(matrix=matrix, targets=(int(q1), int(q2))))
    return qcore.Circuit(n_qubits=n, gates=tuple(gates))


# ---------------------------------------------------------------------------
# run_circuit


def test_empty_circuit_is_identity():
    state = qcore.run_circuit(qcore.Circuit(3, ()), qcore.PureState.zero(3))
    assert state.active == ()
    assert np.allclose(state.amplitudes, [1.0])


def test_single_hadamard_expansion():
    circuit = qcore.Circuit(2, (qcore.GatePlacement(np.kron(H, np.eye(2)), (0, 1)),))
    state = qcore.run_circuit(circuit, qcore.PureState.zero(2))
    assert state.active == (0, 1)
    expected = np.array([1, 0, 1, 0]) / math.sqrt(2)
    assert np.allclose(state.amplitudes, expected, atol=1e-12)


def test_run_circuit_matches_dense_oracle(rng):
    for _ in range(5):
        circuit = random_circuit(4, 6, rng)
        state = qcore.run_circuit(circuit, qcore.PureState.zero(4))
        oracle_u = circuit_unitary_oracle(
            [(g.matrix, g.targets) for g in circuit.gates], 4
        )
        expected = oracle_u[:, 0]
        assert np.allclose(qcore.full_vector(state), expected, atol=1e-12)


def test_run_circuit_dimension_mismatch():
    circuit = qcore.Circuit(3, ())
    with pytest.raises(DimensionMismatch):
        qcore.run_circuit(circuit, qcore.PureState.zero(4))


def test_run_circuit_support_cap(rng):
    circuit = random_circuit(12, 8, rng)
    touched = len(circuit.support())
    with pytest.raises(SupportCapExceeded):
        qcore.run_circuit(circuit, qcore.PureState.zero(12), cap=touched - 1)


def test_norm_preservation(rng):
    for _ in range(10):
        circuit = random_circuit(5, 7, rng)
        state = qcore.run_circuit(circuit, qcore.PureState.zero(5))
        assert abs(np.linalg.norm(state.amplitudes) - 1.0) <= 1e-9


def test_composition(rng):
    c1 = random_circuit(4, 3, rng)
    c2 = random_circuit(4, 3, rng)
    combined = qcore.Circuit(4, c1.gates + c2.gates)
    zero = qcore.PureState.zero(4)
    once = qcore.run_circuit(combined, zero)
    twice = qcore.run_circuit(c2, qcore.run_circuit(c1, zero))
    assert np.allclose(
        qcore.full_vector(once), qcore.full_vector(twice), atol=1e-10
    )


def test_trivial_qubit_invariance(rng):
    """A gate and its inverse on untouched wires cancel after pruning."""
    base = random_circuit(6, 3, rng, pairs=[(0, 1), (1, 2)])
    state = qcore.run_circuit(base, qcore.PureState.zero(6))
    gate = qcore.haar_batch(4, 1, rng)[0]
    wrap = qcore.Circuit(
        6,
        (
            qcore.GatePlacement(gate, (4, 5)),
            qcore.GatePlacement(gate.conj().T, (4, 5)),
        ),
    )
    wrapped = qcore.run_circuit(wrap, state).pruned()
    assert wrapped.active == state.active
    assert np.allclose(wrapped.amplitudes, state.amplitudes, atol=1e-10)


# ---------------------------------------------------------------------------
# circuit_unitary


def test_circuit_unitary_empty():
    u = qcore.circuit_unitary(qcore.Circuit(2, ()), (0, 1))
    assert np.array_equal(u.matrix, np.eye(4))


def test_circuit_unitary_cnot():
    circuit = qcore.Circuit(2, (qcore.GatePlacement(CNOT, (0, 1)),))
    u = qcore.circuit_unitary(circuit, (0, 1))
    assert np.allclose(u.matrix, CNOT)


def test_circuit_unitary_two_gates_vs_kron_oracle(rng):
    circuit = random_circuit(3, 2, rng)
    u = qcore.circuit_unitary(circuit, range(3))
    expected = circuit_unitary_oracle(
        [(g.matrix, g.targets) for g in circuit.gates], 3
    )
    assert np.allclose(u.matrix, expected, atol=1e-12)


def test_circuit_unitary_target_outside_subset(rng):
    circuit = random_circuit(4, 2, rng, pairs=[(2, 3)])
    with pytest.raises(TargetOutsideSubset):
        qcore.circuit_unitary(circuit, (0, 1))


def test_oracle_equivalence_small_systems(rng):
    for n in (2, 3, 4):
        circuit = random_circuit(n, 5, rng)
        direct = qcore.run_circuit(circuit, qcore.PureState.zero(n))
        via_matrix = qcore.circuit_unitary(circuit, range(n)).matrix[:, 0]
        assert np.allclose(qcore.full_vector(direct), via_matrix, atol=1e-10)


# ---------------------------------------------------------------------------
# sampling


def test_sample_computational_zero_state(rng):
    state = qcore.PureState(4, (1, 2), np.array([1, 0, 0, 0], dtype=complex))
    for _ in range(50):
        assert qcore.sample_computational(state, rng) == (0, 0)


def test_sample_computational_plus_frequency(rng):
    state = qcore.PureState.from_amplitudes(np.array([1, 1]) / math.sqrt(2))
    draws = 100_000
    ones = sum(qcore.sample_computational(state, rng)[0] for _ in range(draws))
    assert abs(ones / draws - 0.5) <= binomial_bound(0.5, draws)


def test_sample_computational_bell_support(rng):
    bell = qcore.PureState(2, (0, 1), np.array([1, 0, 0, 1]) / math.sqrt(2))
    outcomes = {qcore.sample_computational(bell, rng) for _ in range(500)}
    assert outcomes == {(0, 0), (1, 1)}


def test_haar_dim1_unit_modulus(rng):
    u = qcore.sample_haar_unitary(1, rng)
    assert abs(abs(u.matrix[0, 0]) - 1.0) <= 1e-12


def test_haar_first_entry_moment(rng):
    draws = 10_000
    batch = qcore.haar_batch(2, draws, rng)
    moments = np.abs(batch[:, 0, 0]) ** 2
    se = np.std(moments, ddof=1) / math.sqrt(draws)
    assert abs(moments.mean() - 0.5) <= 5 * se


def test_haar_unitarity(rng):
    for matrix in qcore.haar_batch(4, 20, rng):
        assert qcore.is_unitary(matrix)


def test_haar_left_invariance(rng):
    """Means of |<0|WU|0>|^2 agree for W = I and a fixed W, to MC error."""
    draws = 20_000
    fixed = qcore.haar_batch(4, 1, rng)[0]
    batch = qcore.haar_batch(4, draws, rng)
    plain = np.abs(batch[:, 0, 0]) ** 2
    rotated = np.abs((fixed @ batch)[:, 0, 0]) ** 2
    se = math.hypot(
        np.std(plain, ddof=1) / math.sqrt(draws),
        np.std(rotated, ddof=1) / math.sqrt(draws),
    )
    assert abs(plain.mean() - rotated.mean()) <= 5 * se


# ---------------------------------------------------------------------------
# Clifford sampling

PAULIS = {"X": X, "Y": np.array([[0, -1j], [1j, 0]]), "Z": Z}


def conjugation_signature(c: np.ndarray):
    signature = []
    for p in (X, Z):
        image = c @ p @ c.conj().T
        for name, q in PAULIS.items():
            if np.allclose(image, q, atol=1e-9):
                signature.append("+" + name)
                break
            if np.allclose(image, -q, atol=1e-9):
                signature.append("-" + name)
                break
        else:
            return None
    return tuple(signature)


def test_clifford_1q_maps_z_to_signed_pauli(rng):
    for _ in range(50):
        c = qcore.sample_random_clifford(1, rng).matrix
        image = c @ Z @ c.conj().T
        assert any(
            np.allclose(image, sign * p, atol=1e-9)
            for p in PAULIS.values()
            for sign in (1, -1)
        )


def test_clifford_1q_uniform_over_24_actions(rng):
    draws = 100_000
    counts: dict = {}
    for _ in range(draws):
        sig = conjugation_signature(qcore.sample_random_clifford(1, rng).matrix)
        assert sig is not None, "sampled matrix is not a Clifford"
        counts[sig] = counts.get(sig, 0) + 1
    assert len(counts) == 24
    expected = draws / 24
    bound = binomial_bound(1 / 24, draws) * draws
    for value in counts.values():
        assert abs(value - expected) <= bound


def test_clifford_2q_unitarity(rng):
    for _ in range(20):
        c = qcore.sample_random_clifford(2, rng)
        assert qcore.is_unitary(c.matrix, atol=1e-10)


def test_clifford_2q_preserves_pauli_group(rng):
    """Conjugation maps Pauli generators to signed Paulis (defining property)."""
    import itertools

    paulis_1q = [np.eye(2, dtype=complex), X, PAULIS["Y"], Z]
    two_q = [np.kron(a, b) for a, b in itertools.product(paulis_1q, repeat=2)]
    gens = [np.kron(X, np.eye(2)), np.kron(np.eye(2), X),
            np.kron(Z, np.eye(2)), np.kron(np.eye(2), Z)]
    for _ in range(10):
        c = qcore.sample_random_clifford(2, rng).matrix
        for g in gens:
            image = c @ g @ c.conj().T
            assert any(
                np.allclose(image, s * p, atol=1e-8)
                for p in two_q
                for s in (1, -1)
            )


def test_clifford_cap():
    with pytest.raises(SupportCapExceeded):
        qcore.sample_random_clifford(7, np.random.default_rng(0))


# ---------------------------------------------------------------------------
# stabilizer products


def test_stabilizer_label_zero_and_plus():
    state0 = qcore.stabilizer_product_state([0])
    assert np.allclose(state0.amplitudes, [1, 0])
    state2 = qcore.stabilizer_product_state([2])
    assert np.allclose(state2.amplitudes, np.array([1, 1]) / math.sqrt(2))


def test_stabilizer_prep_columns_match_states():
    for label in range(6):
        prep = qcore.STABILIZER_PREP[label]
        assert qcore.is_unitary(prep)
        assert np.allclose(prep[:, 0], qcore.STABILIZER_STATES[label])


def test_stabilizer_product_uniform_over_36(rng):
    draws = 100_000
    counts = np.zeros(36, dtype=int)
    for _ in range(draws):
        label, state = qcore.sample_stabilizer_product(2, rng)
        counts[label.labels[0] * 6 + label.labels[1]] += 1
        assert state.num_active == 2
    expected = draws / 36
    bound = binomial_bound(1 / 36, draws) * draws
    assert np.all(np.abs(counts - expected) <= bound)


# ---------------------------------------------------------------------------
# helpers: projection, densification, dense application


def test_project_zero_trivial():
    state = qcore.PureState.zero(4)
    projected, prob = qcore.project_zero(state, [0, 1, 2])
    assert prob == 1.0
    assert projected.active == ()


def test_project_zero_plus():
    state = qcore.PureState(2, (0,), np.array([1, 1]) / math.sqrt(2))
    projected, prob = qcore.project_zero(state, [0])
    assert abs(prob - 0.5) <= 1e-12
    assert projected.active == ()


def test_project_zero_impossible():
    one = qcore.PureState(1, (0,), np.array([0, 1], dtype=complex))
    with pytest.raises(PostselectionImpossible):
        qcore.project_zero(one, [0])


def test_measure_zeros_or_reject_statistics(rng):
    state = qcore.PureState(2, (0,), np.array([1, 1]) / math.sqrt(2))
    kept = sum(
        qcore.measure_zeros_or_reject(state, [0], rng) is not None
        for _ in range(20_000)
    )
    assert abs(kept / 20_000 - 0.5) <= binomial_bound(0.5, 20_000)


def test_apply_dense_matches_gate_application(rng):
    circuit = random_circuit(3, 1, rng)
    gate = circuit.gates[0]
    via_run = qcore.run_circuit(circuit, qcore.PureState.zero(3))
    via_dense = qcore.apply_dense(qcore.PureState.zero(3), gate.matrix, gate.targets)
    assert np.allclose(
        qcore.full_vector(via_run), qcore.full_vector(via_dense), atol=1e-12
    )


def test_restrict_embed_round_trip(rng):
    circuit = random_circuit(8, 3, rng, pairs=[(2, 3), (5, 6)])
    state = qcore.run_circuit(circuit, qcore.PureState.zero(8))
    region = (2, 3, 5, 6)
    local = qcore.restrict_to(state, region)
    back = qcore.embed_in(local, region, 8)
    assert back.active == state.active
    assert np.allclose(back.amplitudes, state.amplitudes)


# ---------------------------------------------------------------------------
# serialization


def test_circuit_serialization_round_trip(rng):
    circuit = random_circuit(5, 4, rng)
    text = qcore.circuit_to_text(circuit)
    back = qcore.circuit_from_text(text)
    assert back.n_qubits == circuit.n_qubits
    for a, b in zip(circuit.gates, back.gates):
        assert a.targets == b.targets
        assert np.array_equal(a.matrix, b.matrix)  # bit-exact


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**53), st.integers(min_value=-60, max_value=60))
def test_float_format_round_trip(mantissa, exponent):
    value = float(mantissa) * 2.0**exponent
    token = qcore._FLOAT_FMT.format(value)
    assert float(token) == value
