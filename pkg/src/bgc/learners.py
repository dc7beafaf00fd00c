"""Learning algorithms: shadow hypothesis selection for states, unitary
learning with and without ancillas, the powered-query bootstrap, and exact
learners from classically described data.

Access model: learners never see the unknown circuit, only an oracle
exposing "apply the unknown object" (fresh state copies, circuit
application, or powered application).  Oracles count their uses.  The
`touched` attribute of the unitary oracle is a sparse-simulation shortcut:
qubits outside it are provably unaffected and their measurement outcomes
are deterministic, which is what makes n = 10^4 registers simulable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    EigRootFailure,
    EmptyNet,
    IncompleteDataset,
    InvalidRegime,
)
from . import junta as junta_mod
from .metrics import choi_state, df_prime
from .nets import CandidateNet, net_min_distance
from .qcore import (
    SUPPORT_CAP,
    Circuit,
    DenseUnitary,
    PureState,
    apply_dense,
    circuit_unitary,
    embed_in,
    full_vector,
    measure_zeros_or_reject,
    restrict_to,
    run_circuit,
    stabilizer_product_state,
)
from .shadows import (
    MedianOfMeansConfig,
    collect_snapshot_values,
    median_of_means_columns,
    _rotations,
    _sample_outcomes,
)


# ---------------------------------------------------------------------------
# oracles


class StateSampleOracle:
    """Produces i.i.d. copies of the unknown pure state; counts samples."""

    def __init__(self, circuit: Circuit, cap: int = SUPPORT_CAP):
        self._state = run_circuit(circuit, PureState.zero(circuit.n_qubits), cap=cap)
        self.n = circuit.n_qubits
        self.samples_used = 0

    @classmethod
    def from_state(cls, state: PureState) -> "StateSampleOracle":
        oracle = cls.__new__(cls)
        oracle._state = state
        oracle.n = state.n_total
        oracle.samples_used = 0
        return oracle

    def sample(self) -> PureState:
        self.samples_used += 1
        return self._state

    def consume(self, count: int) -> None:
        self.samples_used += count


class UnitaryQueryOracle:
    """Applies the unknown circuit to caller-supplied states; counts queries.

    `touched` exposes the gate support so the simulation can avoid
    materializing the rest of the register; algorithms must derive their
    outputs from measurement outcomes only.
    """

    def __init__(self, circuit: Circuit, cap: int = SUPPORT_CAP):
        self._circuit = circuit
        self._doubled = Circuit(n_qubits=2 * circuit.n_qubits, gates=circuit.gates)
        self.n = circuit.n_qubits
        self.cap = cap
        self.touched = frozenset(circuit.support())
        self.queries = 0

    def apply(self, state: PureState) -> PureState:
        self.queries += 1
        circuit = self._circuit if state.n_total == self.n else self._doubled
        return run_circuit(circuit, state, cap=self.cap)

    def apply_choi(self, region: Sequence[int]) -> PureState:
        """Prepare EPR pairs on (q, n+q) for q in region and apply the circuit."""
        state = _epr_pairs(region, self.n)
        return self.apply(state)

    def consume(self, count: int) -> None:
        self.queries += count

    def dense(self, region: Sequence[int]) -> DenseUnitary:
        """Exact unitary on the region; for exact-selection/diagnostic use only."""
        return circuit_unitary(self._circuit, region, cap=self.cap)


class DenseUnitaryOracle:
    """Query oracle holding a dense unitary on an explicit wire region.

    Used where the unknown object is a k-qubit unitary rather than a
    two-qubit-gate circuit (e.g. the bootstrap's toy targets).
    """

    def __init__(self, matrix: np.ndarray, region: Sequence[int], n: int):
        self._unitary = DenseUnitary(np.asarray(matrix, dtype=np.complex128))
        self._region = tuple(sorted(int(q) for q in region))
        if self._unitary.dim != 2 ** len(self._region):
            raise DimensionMismatch("matrix dimension does not match region size")
        self.n = n
        self.touched = frozenset(self._region)
        self.queries = 0

    def apply(self, state: PureState) -> PureState:
        self.queries += 1
        return apply_dense(state, self._unitary.matrix, self._region)

    def apply_choi(self, region: Sequence[int]) -> PureState:
        return self.apply(_epr_pairs(region, self.n))

    def consume(self, count: int) -> None:
        self.queries += count

    def dense(self, region: Sequence[int]) -> DenseUnitary:
        if tuple(sorted(region)) != self._region:
            raise DimensionMismatch("dense() region must match the oracle region")
        return self._unitary


class PoweredQueryOracle:
    """Realizes (U V^dag)^p via p interleaved oracle calls and V^dag actions.

    Query accounting multiplies by p: each Choi preparation of the powered
    map costs p uses of the base oracle.
    """

    def __init__(self, base, v_dagger: np.ndarray, power: int, region: Sequence[int]):
        self.base = base
        self.n = base.n
        self._vdag = np.asarray(v_dagger, dtype=np.complex128)
        self._power = power
        self._region = tuple(sorted(region))
        self.touched = frozenset(base.touched) | set(self._region)

    def apply_choi(self, region: Sequence[int]) -> PureState:
        state = _epr_pairs(region, self.n)
        for _ in range(self._power):
            state = self.base.apply(state)
            state = apply_dense(state, self._vdag, self._region)
        return state

    def consume(self, count: int) -> None:
        self.base.consume(count * self._power)


def _epr_pairs(region: Sequence[int], n: int) -> PureState:
    region = tuple(sorted(int(q) for q in region))
    d = 2 ** len(region)
    amps = (np.eye(d, dtype=np.complex128) / math.sqrt(d)).reshape(-1)
    local = PureState.from_amplitudes(amps, n_total=2 * len(region))
    wires = region + tuple(n + q for q in region)
    return embed_in(local, wires, n_total=2 * n)


# ---------------------------------------------------------------------------
# configuration and selection rules


@dataclass(frozen=True)
class LearnConfig:
    epsilon: float
    delta: float
    shadow_scheme: str = "haar"
    mom: MedianOfMeansConfig | None = None
    selection_rule: str = "overlap_argmax"
    junta_rounds: int | None = 0

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.selection_rule not in ("overlap_argmax", "helstrom_tournament"):
            raise ValueError(f"unknown selection rule {self.selection_rule!r}")


@dataclass(frozen=True, eq=False)
class HelstromObservable:
    """Projector onto the positive eigenspace of sigma_i - sigma_j."""

    eigenpairs: tuple[tuple[float, np.ndarray], ...]
    pair_ids: tuple[int, int]

    def expectation_in(self, vector: np.ndarray) -> float:
        return float(
            sum(v * abs(np.vdot(w, vector)) ** 2 for v, w in self.eigenpairs)
        )


def helstrom_observable(
    sigma_i: PureState, sigma_j: PureState, pair_ids: tuple[int, int] = (0, 1)
) -> HelstromObservable:
    """Positive-part projector via a 2x2 eigenproblem in span{psi_i, psi_j}."""
    plus, _minus = _helstrom_both(full_vector(sigma_i), full_vector(sigma_j))
    return HelstromObservable(eigenpairs=plus, pair_ids=pair_ids)


def _helstrom_both(a: np.ndarray, b: np.ndarray):
    """Positive-part projectors of (|a><a| - |b><b|) and of its negation."""
    c = complex(np.vdot(a, b))
    residual = b - c * a
    s = float(np.linalg.norm(residual))
    if s < 1e-12:
        return (), ()
    e2 = residual / s
    delta = np.array(
        [[1.0 - abs(c) ** 2, -c * s], [-s * np.conj(c), -s * s]], dtype=np.complex128
    )
    evals, evecs = np.linalg.eigh(delta)
    w_minus = evecs[0, 0] * a + evecs[1, 0] * e2   # eigenvalue -s
    w_plus = evecs[0, 1] * a + evecs[1, 1] * e2    # eigenvalue +s
    return ((1.0, w_plus),), ((1.0, w_minus),)


def select_overlap_argmax(estimates: np.ndarray) -> int:
    """Argmax of the estimated overlaps; invariant under common positive
    rescaling and common shifts of the estimates."""
    return int(np.argmax(estimates))


def select_helstrom_tournament(
    candidate_vectors: Sequence[np.ndarray],
    observables: dict[tuple[int, int], HelstromObservable],
    estimates: dict[tuple[int, int], float],
) -> int:
    """Minimum-distance rule: pick i minimizing max_j |tr(A_ij sigma_i) - o_ij|."""
    m = len(candidate_vectors)
    best_index, best_score = 0, float("inf")
    for i in range(m):
        score = 0.0
        for j in range(m):
            if j == i:
                continue
            key = (i, j)
            score = max(
                score,
                abs(observables[key].expectation_in(candidate_vectors[i]) - estimates[key]),
            )
        if score < best_score:
            best_index, best_score = i, score
    return best_index


# ---------------------------------------------------------------------------
# state learning


def learn_state(
    sample_oracle,
    net: CandidateNet,
    cfg: LearnConfig,
    rng: np.random.Generator,
    region: Sequence[int] | None = None,
) -> tuple[int, Circuit | None]:
    """Hypothesis selection over the net from classical shadows of the state.

    Pipeline: optional junta identification, measure-and-postselect onto the
    net region, shadow collection (one snapshot pool shared by every
    candidate), then selection per cfg.selection_rule.
    """
    if net.size == 0:
        raise EmptyNet("cannot learn from an empty net")
    if net.mode != "state":
        raise DimensionMismatch("learn_state requires a state-mode net")
    region = tuple(sorted(region)) if region is not None else tuple(range(net.n_qubits))
    if len(region) != net.n_qubits:
        raise DimensionMismatch("region size must match the net's qubit count")

    rounds = _junta_rounds(cfg, net)
    if rounds:
        junta_mod.identify_support_state(sample_oracle.sample, sample_oracle.n, rounds, rng)

    vectors = [full_vector(s) for s in net.cached]
    observables, keys = _selection_observables(cfg, net, vectors)
    mom = cfg.mom or MedianOfMeansConfig.for_accuracy(
        cfg.epsilon, cfg.delta, len(observables)
    )
    values = _collect_state_values(sample_oracle, region, observables, mom.total, cfg, rng)
    estimates = median_of_means_columns(values, mom)
    index = _apply_selection_rule(cfg, vectors, observables, keys, estimates)
    return index, net.circuit(index)


def _junta_rounds(cfg: LearnConfig, net: CandidateNet) -> int:
    if cfg.junta_rounds is not None:
        return cfg.junta_rounds
    gates = max(
        (c.num_gates for c in net.circuits), default=1
    ) if net.circuits else 1
    return junta_mod.default_rounds(gates, (cfg.epsilon / 24.0) ** 2, cfg.delta / 2.0)


def _selection_observables(cfg: LearnConfig, net: CandidateNet, vectors):
    if cfg.selection_rule == "overlap_argmax":
        return [[(1.0, v)] for v in vectors], None
    observables = []
    keys = []
    for i in range(net.size):
        for j in range(i + 1, net.size):
            plus, minus = _helstrom_both(vectors[i], vectors[j])
            observables.append(list(plus))
            keys.append((i, j))
            observables.append(list(minus))
            keys.append((j, i))
    return observables, keys


def _apply_selection_rule(cfg, vectors, observables, keys, estimates) -> int:
    if cfg.selection_rule == "overlap_argmax":
        return select_overlap_argmax(estimates)
    helstroms = {
        key: HelstromObservable(eigenpairs=tuple(obs), pair_ids=key)
        for key, obs in zip(keys, observables)
    }
    est = {key: float(e) for key, e in zip(keys, estimates)}
    return select_helstrom_tournament(vectors, helstroms, est)


def _collect_state_values(sample_oracle, region, observables, count, cfg, rng):
    """Snapshot values on the region, postselecting stray activity to zero.

    Copies are i.i.d. preparations of one fixed state, so when the first
    copy's activity already lies inside the region the remaining snapshots
    are collected in a batch (accounting for the copies consumed).
    """
    probe = sample_oracle.sample()
    outside = set(probe.active) - set(region)
    if not outside:
        local = _activated(restrict_to(probe, region))
        sample_oracle.consume(count - 1)
        return collect_snapshot_values(
            local, observables, count, cfg.shadow_scheme, rng
        )
    values = np.empty((count, len(observables)))
    filled = 0
    state = measure_zeros_or_reject(probe, outside, rng)
    while True:
        if state is not None:
            local = _activated(restrict_to(state, region))
            values[filled] = collect_snapshot_values(
                local, observables, 1, cfg.shadow_scheme, rng
            )[0]
            filled += 1
            if filled == count:
                return values
        fresh = sample_oracle.sample()
        state = measure_zeros_or_reject(fresh, set(fresh.active) - set(region), rng)


def _activated(state: PureState) -> PureState:
    """Expand the state so every register qubit is active."""
    return PureState(
        n_total=state.n_total,
        active=tuple(range(state.n_total)),
        amplitudes=full_vector(state),
    )


# ---------------------------------------------------------------------------
# unitary learning


def learn_unitary_no_ancilla(
    query_oracle,
    net: CandidateNet,
    cfg: LearnConfig,
    rng: np.random.Generator,
    region: Sequence[int] | None = None,
) -> tuple[int, Circuit | None]:
    """Ancilla-free learner: random stabilizer inputs + one-shot shadows.

    Each query draws a product input |x>, applies the unknown unitary and a
    single randomized measurement; candidate i scores the single-shot
    estimate of |<x|U_i^dag U|x>|^2, whose mean is 1 - d_Q(U_i, U)^2.
    Selection is argmax of the median-of-means scores.
    """
    if net.size == 0:
        raise EmptyNet("cannot learn from an empty net")
    if net.mode != "unitary":
        raise DimensionMismatch("learn_unitary_no_ancilla requires a unitary-mode net")
    region = tuple(sorted(region)) if region is not None else tuple(range(net.n_qubits))
    k = len(region)
    if k != net.n_qubits:
        raise DimensionMismatch("region size must match the net's qubit count")
    if not set(query_oracle.touched) <= set(region):
        raise DimensionMismatch("oracle acts outside the candidate region")

    mom = cfg.mom or MedianOfMeansConfig.for_accuracy(
        cfg.epsilon**2 / 8.0, cfg.delta, net.size
    )
    dim = 2**k
    candidates = np.stack([u.matrix for u in net.cached])
    values = np.empty((mom.total, net.size))
    for row in range(mom.total):
        labels = rng.integers(0, 6, size=k)
        x_local = stabilizer_product_state(labels, n_total=k).amplitudes
        x_global = stabilizer_product_state(labels, n_total=query_oracle.n, qubits=region)
        out = query_oracle.apply(x_global)
        out_local = full_vector(restrict_to(out, region))
        rotation = _rotations(k, 1, cfg.shadow_scheme, rng)[0]
        b = int(_sample_outcomes(out_local, rotation[None, :, :], rng)[0])
        amps = (candidates @ x_local) @ rotation[b, :]
        values[row] = (dim + 1) * np.abs(amps) ** 2 - 1.0
    estimates = median_of_means_columns(values, mom)
    index = select_overlap_argmax(estimates)
    return index, net.circuit(index)


def learn_unitary_choi(
    query_oracle,
    net: CandidateNet,
    cfg: LearnConfig,
    rng: np.random.Generator,
    region: Sequence[int] | None = None,
) -> tuple[int, Circuit | None]:
    """Choi-state reduction: learn the state (U x I)|Phi> over the net's
    candidate Choi states, inheriting the state learner's guarantee."""
    if net.size == 0:
        raise EmptyNet("cannot learn from an empty net")
    if net.mode != "unitary":
        raise DimensionMismatch("learn_unitary_choi requires a unitary-mode net")
    region = tuple(sorted(region)) if region is not None else tuple(range(net.n_qubits))
    k = len(region)
    if 2 * k > SUPPORT_CAP:
        raise DimensionMismatch(f"Choi learning needs {2 * k} qubits, cap {SUPPORT_CAP}")
    if k != net.n_qubits:
        raise DimensionMismatch("region size must match the net's qubit count")
    if not set(query_oracle.touched) <= set(region):
        raise DimensionMismatch("oracle acts outside the candidate region")

    rounds = _junta_rounds(cfg, net)
    if rounds:
        junta_mod.identify_support_choi(query_oracle, query_oracle.n, rounds, rng)

    vectors = [full_vector(choi_state(u).state) for u in net.cached]
    observables, keys = _selection_observables(cfg, net, vectors)
    mom = cfg.mom or MedianOfMeansConfig.for_accuracy(
        cfg.epsilon, cfg.delta, len(observables)
    )
    # The prepared Choi state is identical across queries: collect in batch.
    prepared = query_oracle.apply_choi(region)
    local = _activated(_restrict_choi(prepared, region, query_oracle.n))
    query_oracle.consume(mom.total - 1)
    values = collect_snapshot_values(local, observables, mom.total, cfg.shadow_scheme, rng)
    estimates = median_of_means_columns(values, mom)
    index = _apply_selection_rule(cfg, vectors, observables, keys, estimates)
    return index, net.circuit(index)


def _restrict_choi(state: PureState, region: Sequence[int], n: int) -> PureState:
    wires = tuple(region) + tuple(n + q for q in region)
    return restrict_to(state, wires)


# ---------------------------------------------------------------------------
# powered-query bootstrap


@dataclass(frozen=True, eq=False)
class BootstrapState:
    j: int
    p_j: int
    eta_j: float
    V_j: DenseUnitary
    t: int


@dataclass(frozen=True, eq=False)
class BootstrapResult:
    estimate: DenseUnitary
    history: tuple[BootstrapState, ...]
    errors: tuple[float, ...]   # d_F'(U, V_j) per iteration; exact mode only


def matrix_power_root(u: DenseUnitary | np.ndarray, exponent: float) -> DenseUnitary:
    """Principal power of a unitary: eigenphases in (-pi, pi] scale by `exponent`.

    Uses the complex Schur form (diagonal for normal matrices) so the
    eigenbasis stays orthonormal even with near-degenerate eigenvalues.
    """
    matrix = u.matrix if isinstance(u, DenseUnitary) else np.asarray(u, dtype=np.complex128)
    t_mat, z_mat = scipy.linalg.schur(matrix, output="complex")
    off = np.max(np.abs(t_mat - np.diag(np.diagonal(t_mat))))
    if off > 1e-8:
        raise EigRootFailure(f"Schur form off-diagonal mass {off:.2e}; input not normal?")
    phases = np.angle(np.diagonal(t_mat))
    rooted = z_mat @ np.diag(np.exp(1j * phases * exponent)) @ z_mat.conj().T
    gram_err = np.max(np.abs(rooted.conj().T @ rooted - np.eye(matrix.shape[0])))
    if gram_err > 1e-9:
        raise EigRootFailure(f"power-root result off unitary by {gram_err:.2e}")
    return DenseUnitary(rooted)


def bootstrap_learn(
    query_oracle,
    net: CandidateNet,
    cfg: LearnConfig,
    rng: np.random.Generator,
    region: Sequence[int] | None = None,
    exact_selection: bool = False,
) -> BootstrapResult:
    """Heisenberg-scaling refinement by hypothesis selection over powered maps.

    Iteration j selects R_j among {(U_i V_j^dag)^{p_j}} with p_j = 2^j and
    failure budget eta_j = 8^{j-t-1} delta, then updates
    V_{j+1} = R_j^{1/p_j} V_j.  In exact-selection mode the inner shadow
    learner is replaced by an exact net scan (net_min_distance), isolating
    the iteration from sampling noise; the error sequence d_F'(U, V_j) is
    recorded against the oracle's true unitary.
    """
    if net.mode != "unitary":
        raise DimensionMismatch("bootstrap_learn requires a unitary-mode net")
    region = tuple(sorted(region)) if region is not None else tuple(range(net.n_qubits))
    d = 2 ** len(region)
    if d > 8:
        raise InvalidRegime("bootstrap is desk-limited to d <= 8")
    if cfg.epsilon >= 1.0 / math.sqrt(d):
        raise InvalidRegime(
            f"bootstrap requires epsilon < 1/sqrt(d) = {1.0 / math.sqrt(d):.4f}"
        )
    t = math.ceil(math.log2(1.0 / (cfg.epsilon * math.sqrt(d))))
    v_cur = np.eye(d, dtype=np.complex128)
    base = np.stack([u.matrix for u in net.cached])
    reference = query_oracle.dense(region).matrix if exact_selection else None

    history: list[BootstrapState] = []
    errors: list[float] = []
    for j in range(t + 1):
        p_j = 2**j
        eta_j = 8.0 ** (j - t - 1) * cfg.delta
        if reference is not None:
            errors.append(df_prime(reference, v_cur))
        history.append(
            BootstrapState(j=j, p_j=p_j, eta_j=eta_j, V_j=DenseUnitary(v_cur), t=t)
        )
        vdag = v_cur.conj().T
        powered = [
            DenseUnitary(np.linalg.matrix_power(u @ vdag, p_j)) for u in base
        ]
        if exact_selection:
            target = np.linalg.matrix_power(reference @ vdag, p_j)
            subnet = CandidateNet(
                mode="unitary", n_qubits=len(region), circuits=None, cached=tuple(powered)
            )
            index, _ = net_min_distance(subnet, DenseUnitary(target), "df_prime")
        else:
            inner_eps = min(cfg.epsilon, 1.0 / (25000.0 * math.sqrt(d)))
            inner_cfg = replace(cfg, epsilon=inner_eps, delta=eta_j, junta_rounds=0)
            subnet = CandidateNet(
                mode="unitary", n_qubits=len(region), circuits=None, cached=tuple(powered)
            )
            powered_oracle = PoweredQueryOracle(query_oracle, vdag, p_j, region)
            index, _ = learn_unitary_choi(
                powered_oracle, subnet, inner_cfg, rng, region=region
            )
        v_cur = matrix_power_root(powered[index], 1.0 / p_j).matrix @ v_cur
    if reference is not None:
        errors.append(df_prime(reference, v_cur))
    return BootstrapResult(
        estimate=DenseUnitary(v_cur), history=tuple(history), errors=tuple(errors)
    )


# ---------------------------------------------------------------------------
# exact learners from classically described data


@dataclass(frozen=True, eq=False)
class ClassicalDataset:
    """Canonical input/output descriptions for exact unitary reconstruction.

    entangled mode: pairs of (input, output) amplitude vectors over the
    doubled space; inputs are the block-entangled states
    |x_j> = (1/sqrt(Z_j)) sum_{i in block_j} |i>|i> of Schmidt rank <= r.

    mixed mode: each pair is a tuple of components (probability, label i,
    output amplitudes of U|i>), the ancilla label identifying the column.
    """

    mode: str
    n: int
    r: int
    pairs: tuple

    def __post_init__(self):
        if self.mode not in ("entangled", "mixed"):
            raise ValueError(f"unknown dataset mode {self.mode!r}")


def make_entangled_dataset(u: DenseUnitary, r: int) -> ClassicalDataset:
    """Run the entangled-input experiment: ceil(d/r) rank-<=r input/output pairs."""
    d = u.dim
    pairs = []
    for j in range(math.ceil(d / r)):
        block = range(j * r, min((j + 1) * r, d))
        z = len(block)
        x = np.zeros(d * d, dtype=np.complex128)
        for i in block:
            x[i * d + i] = 1.0 / math.sqrt(z)
        # out[k*d + i] = U[k, i]/sqrt(z) for i in block
        out = np.zeros(d * d, dtype=np.complex128)
        for i in block:
            out[i::d] += u.matrix[:, i] / math.sqrt(z)
        pairs.append((x, out))
    return ClassicalDataset(mode="entangled", n=u.n_qubits, r=r, pairs=tuple(pairs))


def learn_from_entangled_data(dataset: ClassicalDataset) -> DenseUnitary:
    """Read the matrix columns off the entangled outputs, block by block."""
    if dataset.mode != "entangled":
        raise ValueError("dataset is not in entangled mode")
    d = 2**dataset.n
    matrix = np.zeros((d, d), dtype=np.complex128)
    seen = np.zeros(d, dtype=bool)
    for x, out in dataset.pairs:
        x = np.asarray(x, dtype=np.complex128).reshape(-1)
        out = np.asarray(out, dtype=np.complex128).reshape(d, d)
        diag = x.reshape(d, d).diagonal()
        block = np.nonzero(np.abs(diag) > 1e-12)[0]
        if block.size == 0:
            continue
        for i in block:
            matrix[:, i] = out[:, i] / diag[i]
            seen[i] = True
    if not seen.all():
        missing = np.nonzero(~seen)[0]
        raise IncompleteDataset(f"columns {missing.tolist()} were never probed")
    return DenseUnitary(matrix)


def make_mixed_dataset(u: DenseUnitary, r: int) -> ClassicalDataset:
    """Run the labelled-mixture experiment: ceil(d/r) rank-<=r mixed inputs."""
    d = u.dim
    pairs = []
    for j in range(math.ceil(d / r)):
        block = range(j * r, min((j + 1) * r, d))
        p = 1.0 / len(block)
        components = tuple((p, i, u.matrix[:, i].copy()) for i in block)
        pairs.append(components)
    return ClassicalDataset(mode="mixed", n=u.n_qubits, r=r, pairs=tuple(pairs))


def learn_from_mixed_data(dataset: ClassicalDataset) -> DenseUnitary:
    """Each labelled mixture component hands over one column of U."""
    if dataset.mode != "mixed":
        raise ValueError("dataset is not in mixed mode")
    d = 2**dataset.n
    matrix = np.zeros((d, d), dtype=np.complex128)
    seen = np.zeros(d, dtype=bool)
    for components in dataset.pairs:
        for _prob, label, out in components:
            matrix[:, int(label)] = np.asarray(out, dtype=np.complex128)
            seen[int(label)] = True
    if not seen.all():
        missing = np.nonzero(~seen)[0]
        raise IncompleteDataset(f"columns {missing.tolist()} were never probed")
    return DenseUnitary(matrix)


# ---------------------------------------------------------------------------
# dataset file format


def write_dataset(dataset: ClassicalDataset, path) -> None:
    from .qcore import _format_complex

    with open(path, "w") as fh:
        fh.write(f"mode {dataset.mode}\n")
        fh.write(f"n {dataset.n}\n")
        fh.write(f"r {dataset.r}\n")
        fh.write(f"samples {len(dataset.pairs)}\n")
        if dataset.mode == "entangled":
            for x, out in dataset.pairs:
                fh.write("input " + " ".join(_format_complex(v) for v in x) + "\n")
                fh.write("output " + " ".join(_format_complex(v) for v in out) + "\n")
        else:
            for components in dataset.pairs:
                fh.write(f"components {len(components)}\n")
                for prob, label, out in components:
                    fh.write("component {:.17g} {}\n".format(prob, int(label)))
                    fh.write("out " + " ".join(_format_complex(v) for v in out) + "\n")


def read_dataset(path) -> ClassicalDataset:
    from .qcore import _parse_complex

    with open(path) as fh:
        lines = iter(line.split() for line in fh if line.strip())
        mode = next(lines)[1]
        n = int(next(lines)[1])
        r = int(next(lines)[1])
        count = int(next(lines)[1])
        pairs = []
        if mode == "entangled":
            for _ in range(count):
                x = np.array([_parse_complex(t) for t in next(lines)[1:]])
                out = np.array([_parse_complex(t) for t in next(lines)[1:]])
                pairs.append((x, out))
        else:
            for _ in range(count):
                n_comp = int(next(lines)[1])
                components = []
                for _ in range(n_comp):
                    header = next(lines)
                    prob, label = float(header[1]), int(header[2])
                    out = np.array([_parse_complex(t) for t in next(lines)[1:]])
                    components.append((prob, label, out))
                pairs.append(tuple(components))
    return ClassicalDataset(mode=mode, n=n, r=r, pairs=tuple(pairs))
