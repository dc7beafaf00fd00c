"""Identification of nontrivially-acted qubits, and zero-postselection.

Three variants share the same accumulate-support skeleton: measure, take
the support of the outcome, union it into the running estimate.  A qubit
enters the estimate only on a nonzero outcome, which is impossible for
qubits the target never touches, so the estimate is always a subset of the
true support.  Implicit |0> qubits are never materialized; their outcomes
are deterministically zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import SupportCapExceeded
from .qcore import (
    SUPPORT_CAP,
    PureState,
    project_zero,
    sample_computational,
    stabilizer_product_state,
)

# Pauli-Choi (Bell) basis on one entangled pair, columns = ||I>>, ||X>>, ||Y>>, ||Z>>.
_BELL_COLUMNS = np.array(
    [
        [1, 0, 0, 1],
        [0, 1, 1j, 0],
        [0, 1, -1j, 0],
        [1, 0, 0, -1],
    ],
    dtype=np.complex128,
) / math.sqrt(2.0)


@dataclass(frozen=True)
class SupportEstimate:
    support: tuple[int, ...]
    rounds_used: int


def default_rounds(gates: int, epsilon1: float, delta1: float = 0.01) -> int:
    """Measurement rounds from the soundness analysis: ceil(28 ln(2^{2G}/d)/3e)."""
    return math.ceil(28.0 * math.log(2.0 ** (2 * gates) / delta1) / (3.0 * epsilon1))


def identify_support_state(
    sample_oracle: Callable[[], PureState], n: int, rounds: int, rng: np.random.Generator
) -> SupportEstimate:
    """Algorithm: measure fresh copies in the computational basis, union supports."""
    found: set[int] = set()
    for _ in range(rounds):
        state = sample_oracle()
        bits = sample_computational(state, rng)
        found.update(q for q, b in zip(state.active, bits) if b)
    return SupportEstimate(support=tuple(sorted(found)), rounds_used=rounds)


def identify_support_unitary(
    query_oracle, n: int, rounds: int, rng: np.random.Generator
) -> SupportEstimate:
    """Conjugate by random stabilizer-product preparations and measure.

    Each round prepares |x> = U_x|0...0>, applies the unknown unitary, then
    U_x^dag, and measures everything.  On qubits the unitary never touches
    the preparation cancels exactly, so only the oracle's touched region is
    ever materialized (see UnitaryQueryOracle.touched).
    """
    touched = tuple(sorted(query_oracle.touched))
    found: set[int] = set()
    for _ in range(rounds):
        labels = rng.integers(0, 6, size=len(touched))
        if touched:
            state = stabilizer_product_state(labels, n_total=n, qubits=touched)
        else:
            state = PureState.zero(n)
        state = query_oracle.apply(state)
        state = _unprepare(state, dict(zip(touched, labels)))
        bits = sample_computational(state, rng)
        found.update(q for q, b in zip(state.active, bits) if b)
    return SupportEstimate(support=tuple(sorted(found)), rounds_used=rounds)


def _unprepare(state: PureState, labels: dict[int, int]) -> PureState:
    """Apply U_x^dag on the labelled qubits of the state."""
    from .qcore import STABILIZER_PREP

    tensor = state.tensor()
    for axis, qubit in enumerate(state.active):
        if qubit not in labels:
            continue
        inverse = STABILIZER_PREP[labels[qubit]].conj().T
        tensor = np.moveaxis(
            np.tensordot(inverse, tensor, axes=([1], [axis])), 0, axis
        )
    return PureState(
        n_total=state.n_total, active=state.active, amplitudes=tensor.reshape(-1)
    )


def identify_support_choi(
    query_oracle, n: int, rounds: int, rng: np.random.Generator
) -> SupportEstimate:
    """Measure the Choi state pairwise in the Pauli-Choi (Bell) basis.

    Pairs whose outcome is not ||I>> mark their system qubit as acted upon.
    Untouched pairs stay exactly maximally entangled and deterministically
    yield ||I>>.
    """
    touched = tuple(sorted(query_oracle.touched))
    if 2 * len(touched) > SUPPORT_CAP:
        raise SupportCapExceeded(
            f"Choi junta needs {2 * len(touched)} active qubits, cap is {SUPPORT_CAP}"
        )
    if not touched:
        # every pair yields ||I>> deterministically; queries are still spent
        query_oracle.consume(rounds)
        return SupportEstimate(support=(), rounds_used=rounds)
    found: set[int] = set()
    for _ in range(rounds):
        state = query_oracle.apply_choi(touched)
        state = _rotate_pairs_to_computational(state, touched, n)
        bits = dict(zip(state.active, sample_computational(state, rng)))
        for qubit in touched:
            outcome = 2 * bits.get(qubit, 0) + bits.get(n + qubit, 0)
            if outcome != 0:
                found.add(qubit)
    return SupportEstimate(support=tuple(sorted(found)), rounds_used=rounds)


def _rotate_pairs_to_computational(state: PureState, system: tuple[int, ...], n: int) -> PureState:
    """Map each (q, n+q) pair's Pauli-Choi basis onto computational |m1 m2>."""
    rotation = _BELL_COLUMNS.conj().T
    tensor = state.tensor()
    active = state.active
    for qubit in system:
        a1 = active.index(qubit)
        a2 = active.index(n + qubit)
        gate = rotation.reshape(2, 2, 2, 2)
        tensor = np.moveaxis(
            np.tensordot(gate, tensor, axes=([2, 3], [a1, a2])), [0, 1], [a1, a2]
        )
    return PureState(n_total=state.n_total, active=active, amplitudes=tensor.reshape(-1))


def postselect_zero(state: PureState, complement: set[int] | tuple[int, ...]) -> tuple[PureState, float]:
    """Project the qubits in `complement` onto |0> and renormalize.

    Returns the post-measurement state and the success probability
    tr(Lambda rho); raises PostselectionImpossible below 1e-12.
    """
    return project_zero(state, complement)
