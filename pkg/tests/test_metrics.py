import math

import numpy as np
import pytest

from bgc import metrics, qcore
from bgc.errors import DimensionMismatch

from oracles import (
    d2_prime_grid,
    davg_montecarlo,
    diamond_state_search,
    dq_enumeration,
    trace_distance_eig,
)

I2 = np.eye(2, dtype=complex)
Z = np.diag([1, -1]).astype(complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)


def haar(d, rng):
    return qcore.haar_batch(d, 1, rng)[0]


# ---------------------------------------------------------------------------
# trace distance


def test_trace_distance_identical(rng):
    # sqrt(1 - |ov|^2) floors near 1.5e-8 when the overlap is 1 up to an ulp
    psi = qcore.PureState.from_amplitudes(qcore.haar_batch(4, 1, rng)[0][:, 0])
    assert metrics.trace_distance_pure(psi, psi) <= 1e-7


def test_trace_distance_orthogonal():
    zero = qcore.PureState.from_amplitudes(np.array([1, 0], dtype=complex))
    one = qcore.PureState.from_amplitudes(np.array([0, 1], dtype=complex))
    assert abs(metrics.trace_distance_pure(zero, one) - 1.0) <= 1e-12


def test_trace_distance_superposition_vs_eigen_oracle():
    zero = qcore.PureState.from_amplitudes(np.array([1, 0], dtype=complex))
    plus = qcore.PureState.from_amplitudes(np.array([1, 1]) / math.sqrt(2))
    got = metrics.trace_distance_pure(zero, plus)
    oracle = trace_distance_eig(np.array([1, 0], dtype=complex), np.array([1, 1]) / math.sqrt(2))
    assert abs(got - math.sqrt(0.5)) <= 1e-12
    assert abs(got - oracle) <= 1e-12


def test_trace_distance_random_vs_eigen_oracle(rng):
    for _ in range(25):
        a = qcore.haar_batch(8, 1, rng)[0][:, 0]
        b = qcore.haar_batch(8, 1, rng)[0][:, 0]
        got = metrics.trace_distance_pure(
            qcore.PureState.from_amplitudes(a), qcore.PureState.from_amplitudes(b)
        )
        assert abs(got - trace_distance_eig(a, b)) <= 1e-10


def test_trace_distance_alignment_across_active_sets():
    """States with different active sets align through |0> padding."""
    a = qcore.PureState(3, (0,), np.array([1, 1]) / math.sqrt(2))
    b = qcore.PureState(3, (0, 2), np.array([1, 0, 1, 0]) / math.sqrt(2))
    assert metrics.trace_distance_pure(a, b) <= 1e-7


def test_trace_distance_dimension_mismatch():
    a = qcore.PureState.zero(2)
    b = qcore.PureState.zero(3)
    with pytest.raises(DimensionMismatch):
        metrics.trace_distance_pure(a, b)


# ---------------------------------------------------------------------------
# davg


def test_davg_identical(rng):
    u = haar(4, rng)
    assert metrics.davg(u, u) <= 1e-12


def test_davg_i_vs_z_closed_form_and_montecarlo(rng):
    got = metrics.davg(I2, Z)
    assert abs(got - math.sqrt(2.0 / 3.0)) <= 1e-12
    mc, se = davg_montecarlo(I2, Z, 100_000, rng)
    assert abs(got**2 - mc**2) <= 3 * se


def test_davg_global_phase_invariance(rng):
    u = haar(4, rng)
    for theta in (0.3, 1.2, math.pi):
        assert metrics.davg(u, np.exp(1j * theta) * u) <= 1e-7


def test_davg_symmetry(rng):
    u, v = haar(4, rng), haar(4, rng)
    assert abs(metrics.davg(u, v) - metrics.davg(v, u)) <= 1e-12


# ---------------------------------------------------------------------------
# df_prime / d2_prime


def test_df_prime_identical_and_iz(rng):
    u = haar(2, rng)
    assert metrics.df_prime(u, u) <= 1e-12
    assert abs(metrics.df_prime(I2, Z) - math.sqrt(2)) <= 1e-12


def test_d2_prime_identical_and_iz(rng):
    u = haar(2, rng)
    assert metrics.d2_prime(u, u) <= 1e-8
    assert abs(metrics.d2_prime(I2, Z) - math.sqrt(2)) <= 1e-8


def test_d2_prime_vs_grid_oracle(rng):
    for d in (2, 4, 8):
        for _ in range(8):
            u, v = haar(d, rng), haar(d, rng)
            got = metrics.d2_prime(u, v)
            oracle = d2_prime_grid(u, v)
            # the fine search may only improve on the grid value
            assert got <= oracle + 1e-9
            assert abs(got - oracle) <= 5e-5


def test_norm_conversion_sandwich(rng):
    for _ in range(100):
        d = int(rng.choice([2, 4, 8]))
        u, v = haar(d, rng), haar(d, rng)
        d2 = metrics.d2_prime(u, v)
        dfp = metrics.df_prime(u, v)
        assert d2 / math.sqrt(d) <= dfp + 1e-9
        assert dfp <= d2 + 1e-9


def test_df_prime_davg_sandwich(rng):
    for _ in range(100):
        d = int(rng.choice([2, 4, 8]))
        u, v = haar(d, rng), haar(d, rng)
        dfp = metrics.df_prime(u, v)
        da = metrics.davg(u, v)
        assert 0.5 * dfp <= da + 1e-9
        assert da <= dfp + 1e-9


def test_power_subadditivity(rng):
    for _ in range(30):
        d = int(rng.choice([2, 4]))
        u, v = haar(d, rng), haar(d, rng)
        base = metrics.df_prime(u, v)
        for p in range(1, 9):
            powered = metrics.df_prime(
                np.linalg.matrix_power(u, p), np.linalg.matrix_power(v, p)
            )
            assert powered <= p * base + 1e-9


# ---------------------------------------------------------------------------
# diamond distance


def test_diamond_identical(rng):
    u = haar(4, rng)
    assert metrics.diamond_distance(u, u) <= 1e-7


def test_diamond_i_vs_z_exact():
    assert metrics.diamond_distance(I2, Z) == 2.0


def test_diamond_small_rotation_formula(rng):
    for theta in (0.1, 0.4, 1.0):
        v = np.diag([1.0, np.exp(1j * theta)])
        got = metrics.diamond_distance(I2, v)
        assert abs(got - 2 * math.sin(theta / 2)) <= 1e-12
        oracle = diamond_state_search(I2, v, 10_000, rng)
        assert abs(got - oracle) <= 1e-3


def test_diamond_vs_state_search_oracle(rng):
    for d in (2, 4):
        for _ in range(5):
            u, v = haar(d, rng), haar(d, rng)
            got = metrics.diamond_distance(u, v)
            oracle = diamond_state_search(u, v, 20_000, rng)
            assert abs(got - oracle) <= 1e-3


def test_diamond_upper_sandwich(rng):
    """1/2 d_diamond <= d2' holds unconditionally."""
    for _ in range(100):
        d = int(rng.choice([2, 4, 8]))
        u, v = haar(d, rng), haar(d, rng)
        assert 0.5 * metrics.diamond_distance(u, v) <= metrics.d2_prime(u, v) + 1e-9


def test_diamond_lower_sandwich_d2_only(rng):
    """(1/sqrt2) d2' <= 1/2 d_diamond: valid whenever the eigenphases fit in
    a semicircle, which two eigenvalues always do."""
    for _ in range(200):
        u, v = haar(2, rng), haar(2, rng)
        assert (
            metrics.d2_prime(u, v) / math.sqrt(2)
            <= 0.5 * metrics.diamond_distance(u, v) + 1e-9
        )


def test_diamond_lower_sandwich_counterexample():
    """The claimed lower bound fails once the eigenphase spread exceeds pi:
    with U = I and V = diag(cube roots of unity), d2' = sqrt(3) exceeds
    sqrt(2) * (d_diamond/2) = sqrt(2)."""
    omega = np.exp(2j * math.pi / 3)
    v = np.diag([1.0, omega, omega**2])
    i3 = np.eye(3, dtype=complex)
    assert abs(metrics.diamond_distance(i3, v) - 2.0) <= 1e-12
    assert metrics.d2_prime(i3, v) / math.sqrt(2) > 1.0 + 0.2


# ---------------------------------------------------------------------------
# Choi construction


def test_choi_identity_and_x():
    choi_i = metrics.choi_state(I2)
    assert np.allclose(choi_i.state.amplitudes, np.array([1, 0, 0, 1]) / math.sqrt(2))
    choi_x = metrics.choi_state(X)
    assert np.allclose(choi_x.state.amplitudes, np.array([0, 1, 1, 0]) / math.sqrt(2))


def test_choi_inner_product_identity(rng):
    for _ in range(20):
        d = int(rng.choice([2, 4]))
        u, v = haar(d, rng), haar(d, rng)
        lhs = qcore.state_overlap(
            metrics.choi_state(u).state, metrics.choi_state(v).state
        )
        rhs = np.trace(u.conj().T @ v) / d
        assert abs(lhs - rhs) <= 1e-12


def test_choi_reduced_state_maximally_mixed(rng):
    u = haar(4, rng)
    amps = metrics.choi_state(u).state.amplitudes.reshape(4, 4)
    reduced = amps.conj().T @ amps   # ancilla-half density matrix
    assert np.max(np.abs(reduced - np.eye(4) / 4)) <= 1e-9


def test_exact_choi_equivalence(rng):
    for d in (2, 4, 8):
        factor = math.sqrt(d / (d + 1))
        for _ in range(30):
            u, v = haar(d, rng), haar(d, rng)
            lhs = metrics.davg(u, v)
            rhs = factor * metrics.trace_distance_pure(
                metrics.choi_state(u).state, metrics.choi_state(v).state
            )
            assert abs(lhs - rhs) <= 1e-10


# ---------------------------------------------------------------------------
# locally scrambled ensemble distance


def test_dq_triangle_inequality(rng):
    for _ in range(20):
        d = int(rng.choice([2, 4]))
        u, v, w = haar(d, rng), haar(d, rng), haar(d, rng)
        duv = metrics.stabilizer_rms_distance(u, v)
        duw = metrics.stabilizer_rms_distance(u, w)
        dwv = metrics.stabilizer_rms_distance(w, v)
        assert duv <= duw + dwv + 1e-12


def test_locally_scrambled_equivalence(rng):
    for _ in range(30):
        d = int(rng.choice([2, 4, 8]))
        u, v = haar(d, rng), haar(d, rng)
        dq = metrics.stabilizer_rms_distance(u, v)
        da = metrics.davg(u, v)
        assert da / math.sqrt(2) <= dq + 1e-9
        assert dq <= math.sqrt(2) * da + 1e-9


def test_dq_matches_independent_enumeration(rng):
    u, v = haar(4, rng), haar(4, rng)
    assert abs(metrics.stabilizer_rms_distance(u, v) - dq_enumeration(u, v)) <= 1e-12


def test_unitary_fidelity_is_choi_overlap(rng):
    u, v = haar(4, rng), haar(4, rng)
    overlap = qcore.state_overlap(
        metrics.choi_state(u).state, metrics.choi_state(v).state
    )
    assert abs(metrics.unitary_fidelity(u, v) - abs(overlap) ** 2) <= 1e-12
