import math

import numpy as np
import pytest

from bgc import learners, qcore, shadows
from bgc.errors import DimensionMismatch, LengthMismatch, SupportCapExceeded


def rank1(vector):
    return [(1.0, np.asarray(vector, dtype=complex))]


def random_state(k, rng):
    return qcore.PureState.from_amplitudes(qcore.haar_batch(2**k, 1, rng)[0][:, 0])


# ---------------------------------------------------------------------------
# inversion formula, snapshot by snapshot


def test_estimator_identity_rotation_cases():
    snap0 = shadows.Snapshot(k=1, rotation=qcore.DenseUnitary(np.eye(2)), outcome=(0,))
    snap1 = shadows.Snapshot(k=1, rotation=qcore.DenseUnitary(np.eye(2)), outcome=(1,))
    zero_proj = rank1([1, 0])
    assert shadows.estimate_observable(snap0, zero_proj) == pytest.approx(2.0)
    assert shadows.estimate_observable(snap1, zero_proj) == pytest.approx(-1.0)


def test_estimator_full_rank_identity_is_one(rng):
    """O = I gives (2^k+1) - 2^k = 1 for every snapshot (trace preservation)."""
    state = random_state(2, rng)
    identity = [(1.0, np.eye(4, dtype=complex)[:, i]) for i in range(4)]
    for _ in range(20):
        snap = shadows.collect_snapshot(state, "haar", rng)
        assert shadows.estimate_observable(snap, identity) == pytest.approx(1.0)


def test_identity_rotation_outcome_deterministic(rng):
    """|0> measured under C = I yields 0 always."""
    amps = np.zeros(4, dtype=complex)
    amps[0] = 1.0
    outcomes = shadows._sample_outcomes(amps, np.stack([np.eye(4, dtype=complex)] * 50), rng)
    assert np.all(outcomes == 0)


def test_collect_snapshot_shapes_and_clifford_cap(rng):
    state = random_state(2, rng)
    snap = shadows.collect_snapshot(state, "clifford", rng)
    assert snap.k == 2 and len(snap.outcome) == 2
    big = qcore.PureState(
        8, tuple(range(7)), qcore.haar_batch(128, 1, rng)[0][:, 0]
    )
    with pytest.raises(SupportCapExceeded):
        shadows.collect_snapshot(big, "clifford", rng)


# ---------------------------------------------------------------------------
# unbiasedness and variance


@pytest.mark.parametrize("scheme", ["haar", "clifford"])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_unbiasedness_rank1(rng, scheme, k):
    state = random_state(k, rng)
    target = random_state(k, rng)
    observable = rank1(target.amplitudes)
    truth = abs(np.vdot(target.amplitudes, state.amplitudes)) ** 2
    count = 100_000 if scheme == "haar" else 20_000
    values = shadows.collect_snapshot_values(state, [observable], count, scheme, rng)
    se = values.std(ddof=1) / math.sqrt(count)
    assert abs(values.mean() - truth) <= 5 * se


def test_plus_state_zero_projector_mean(rng):
    plus = qcore.PureState.from_amplitudes(np.array([1, 1]) / math.sqrt(2))
    values = shadows.collect_snapshot_values(plus, [rank1([1, 0])], 100_000, "haar", rng)
    se = values.std(ddof=1) / math.sqrt(values.size)
    assert abs(values.mean() - 0.5) <= 5 * se


def test_variance_bound_helstrom_observables(rng):
    """Empirical single-shot variance <= 4 tr(O^2) for Helstrom projectors."""
    for k in (2, 3):
        state = random_state(k, rng)
        a = random_state(k, rng)
        b = random_state(k, rng)
        hel = learners.helstrom_observable(a, b)
        tr_sq = sum(v**2 for v, _ in hel.eigenpairs)
        values = shadows.collect_snapshot_values(
            state, [list(hel.eigenpairs)], 50_000, "haar", rng
        )
        assert values.var(ddof=1) <= 4.0 * tr_sq


# ---------------------------------------------------------------------------
# median of means


def test_mom_constant_values():
    cfg = shadows.MedianOfMeansConfig(N=4, K=3)
    assert shadows.median_of_means([7.0] * 12, cfg) == 7.0


def test_mom_singleton_batches():
    cfg = shadows.MedianOfMeansConfig(N=1, K=3)
    assert shadows.median_of_means([0.0, 10.0, 1.0], cfg) == 1.0


def test_mom_hand_case():
    cfg = shadows.MedianOfMeansConfig(N=2, K=3)
    assert shadows.median_of_means([0, 2, 9, 11, 4, 6], cfg) == 5.0


def test_mom_length_mismatch():
    with pytest.raises(LengthMismatch):
        shadows.median_of_means([1.0, 2.0], shadows.MedianOfMeansConfig(N=2, K=3))


def test_mom_even_k_rejected():
    with pytest.raises(ValueError):
        shadows.MedianOfMeansConfig(N=1, K=4)


def test_mom_for_accuracy_rounds_k_odd():
    cfg = shadows.MedianOfMeansConfig.for_accuracy(0.5, 0.05, 10)
    assert cfg.K % 2 == 1
    assert cfg.N == math.ceil(102 / 0.25)


def test_mom_concentration_paper_constants(rng):
    """K = 2 log(2/delta), N = 102/eps^2 keeps |est - mean| <= eps w.p. 1-delta."""
    epsilon, delta = 0.5, 0.05
    cfg = shadows.MedianOfMeansConfig.for_accuracy(epsilon, delta, 1)
    failures = 0
    reps = 300
    for _ in range(reps):
        values = rng.standard_normal(cfg.total) * 1.5   # variance 2.25 < 3
        estimate = shadows.median_of_means(values, cfg)
        failures += abs(estimate) > epsilon
    bound = delta * reps + 5 * math.sqrt(delta * (1 - delta) * reps)
    assert failures <= bound


# ---------------------------------------------------------------------------
#估 estimate_all_candidates


def test_estimate_all_candidates_matching_projector(rng):
    state = random_state(2, rng)
    cfg = shadows.MedianOfMeansConfig(N=2000, K=5)
    snaps = [shadows.collect_snapshot(state, "haar", rng) for _ in range(cfg.total)]
    estimates = shadows.estimate_all_candidates(snaps, [rank1(state.amplitudes)], cfg)
    assert abs(estimates[0] - 1.0) <= 0.1


def test_estimate_all_candidates_orthogonal_pair(rng):
    zero = qcore.PureState.from_amplitudes(np.array([1, 0], dtype=complex))
    cfg = shadows.MedianOfMeansConfig(N=2000, K=5)
    snaps = [shadows.collect_snapshot(zero, "haar", rng) for _ in range(cfg.total)]
    estimates = shadows.estimate_all_candidates(
        snaps, [rank1([1, 0]), rank1([0, 1])], cfg
    )
    assert abs(estimates[0] - 1.0) <= 0.1
    assert abs(estimates[1]) <= 0.1


def test_estimate_all_candidates_empty_observables(rng):
    zero = qcore.PureState.from_amplitudes(np.array([1, 0], dtype=complex))
    cfg = shadows.MedianOfMeansConfig(N=1, K=1)
    snaps = [shadows.collect_snapshot(zero, "haar", rng)]
    assert shadows.estimate_all_candidates(snaps, [], cfg).size == 0


def test_batch_values_match_single_shot_path(rng):
    state = random_state(2, rng)
    observable = rank1(random_state(2, rng).amplitudes)
    snaps = [shadows.collect_snapshot(state, "haar", rng) for _ in range(64)]
    rotations = np.stack([s.rotation.matrix for s in snaps])
    outcomes = np.array([s.outcome_index for s in snaps])
    batch = shadows.single_shot_values(rotations, outcomes, [observable])
    singles = np.array([shadows.estimate_observable(s, observable) for s in snaps])
    assert np.allclose(batch[:, 0], singles, atol=1e-12)


def test_seed_sequence_values_independent_of_chunking(rng):
    state = random_state(2, rng)
    observable = rank1(random_state(2, rng).amplitudes)
    seq = np.random.SeedSequence(1234)
    a = shadows.collect_snapshot_values(state, [observable], 50, "haar", seq, chunk=7)
    seq = np.random.SeedSequence(1234)
    b = shadows.collect_snapshot_values(state, [observable], 50, "haar", seq, chunk=64)
    assert np.array_equal(a, b)


def test_estimator_dimension_mismatch(rng):
    snap = shadows.collect_snapshot(random_state(2, rng), "haar", rng)
    with pytest.raises(DimensionMismatch):
        shadows.estimate_observable(snap, rank1([1, 0]))


# ---------------------------------------------------------------------------
# snapshot log


def test_snapshot_log_round_trip(tmp_path, rng):
    state = random_state(2, rng)
    snaps = [shadows.collect_snapshot(state, "haar", rng) for _ in range(5)]
    path = tmp_path / "snaps.log"
    shadows.write_snapshot_log(snaps, "haar", path)
    scheme, back = shadows.read_snapshot_log(path)
    assert scheme == "haar"
    assert len(back) == 5
    for a, b in zip(snaps, back):
        assert a.outcome == b.outcome
        assert np.array_equal(a.rotation.matrix, b.rotation.matrix)
