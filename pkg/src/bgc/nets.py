"""Candidate nets for hypothesis selection.

Exhaustive enumeration over a discrete gate set and explicit gate
placements realizes the covering-net construction at desk scale: when the
unknown target is drawn from the same gate set and placements, the net
contains it exactly.  Random epsilon-nets over small unitary groups are
provided for property tests of the metric-space machinery.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyNet, EnumerationCapExceeded
from .metrics import davg, df_prime, trace_distance_pure
from .qcore import (
    Circuit,
    DenseUnitary,
    GatePlacement,
    PureState,
    _format_complex,
    circuit_from_lines,
    circuit_to_text,
    circuit_unitary,
    haar_batch,
    run_circuit,
)

ENUMERATION_CAP = 10**6

Placements = Sequence[tuple[int, int]]


@dataclass(frozen=True, eq=False)
class GateSet:
    """A small named collection of two-qubit gates."""

    gates: tuple[np.ndarray, ...]
    names: tuple[str, ...]

    def __post_init__(self):
        gates = tuple(
            np.ascontiguousarray(np.asarray(g, dtype=np.complex128)) for g in self.gates
        )
        object.__setattr__(self, "gates", gates)
        if len(gates) != len(self.names):
            raise ValueError("one name per gate required")
        for g in gates:
            GatePlacement(matrix=g, targets=(0, 1))  # validates shape + unitarity

    @property
    def size(self) -> int:
        return len(self.gates)

    def digest(self) -> str:
        h = hashlib.sha256()
        for name, gate in zip(self.names, self.gates):
            h.update(name.encode())
            h.update(" ".join(_format_complex(v) for v in gate.reshape(-1)).encode())
        return h.hexdigest()

    @classmethod
    def haar(cls, size: int, rng: np.random.Generator, prefix: str = "g") -> "GateSet":
        gates = tuple(haar_batch(4, size, rng))
        return cls(gates=gates, names=tuple(f"{prefix}{i}" for i in range(size)))


@dataclass(frozen=True, eq=False)
class CandidateNet:
    """Finite candidate set with cached states (state mode) or unitaries."""

    mode: str                                  # "state" or "unitary"
    n_qubits: int
    circuits: tuple[Circuit, ...] | None       # None for sampled dense nets
    cached: tuple
    complete: bool = True

    def __post_init__(self):
        if self.mode not in ("state", "unitary"):
            raise ValueError(f"unknown net mode {self.mode!r}")
        if len(self.cached) < 1:
            raise EmptyNet("candidate net must hold at least one candidate")
        if self.circuits is not None and len(self.circuits) != len(self.cached):
            raise ValueError("cached entries must match circuits one-to-one")

    @property
    def size(self) -> int:
        return len(self.cached)

    def circuit(self, index: int) -> Circuit | None:
        return None if self.circuits is None else self.circuits[index]


def enumerate_net(
    gate_set: GateSet,
    configurations: Sequence[Placements],
    num_gates: int,
    mode: str,
    n_qubits: int,
    cap: int = ENUMERATION_CAP,
) -> CandidateNet:
    """One candidate per (gate assignment, configuration) pair.

    A configuration fixes the target pair of every gate slot; assignments
    range over gate_set^num_gates in lexicographic order with the first
    slot slowest, matching itertools.product.
    """
    if not configurations:
        raise ValueError("at least one configuration required")
    for placements in configurations:
        if len(placements) != num_gates:
            raise ValueError("each configuration must place every gate slot")
    total = gate_set.size**num_gates * len(configurations)
    if total > cap:
        raise EnumerationCapExceeded(f"{total} candidates exceed cap {cap}")

    circuits: list[Circuit] = []
    cached: list = []
    for placements in configurations:
        placements = tuple((int(a), int(b)) for a, b in placements)
        for assignment in itertools.product(range(gate_set.size), repeat=num_gates):
            circuits.append(
                Circuit(
                    n_qubits=n_qubits,
                    gates=tuple(
                        GatePlacement(matrix=gate_set.gates[a], targets=t)
                        for a, t in zip(assignment, placements)
                    ),
                )
            )
        if mode == "state":
            cached.extend(
                _enumerate_states_fast(gate_set, placements, num_gates, n_qubits)
            )
        else:
            base = len(cached)
            cached.extend(
                circuit_unitary(c, range(n_qubits)) for c in circuits[base:]
            )
    return CandidateNet(
        mode=mode, n_qubits=n_qubits, circuits=tuple(circuits), cached=tuple(cached)
    )


def _enumerate_states_fast(
    gate_set: GateSet, placements: Placements, num_gates: int, n_qubits: int
) -> list[PureState]:
    """All g^G output states of one configuration via shared-prefix expansion.

    Slot t of the assignment becomes axis t of a growing batch, so the final
    flat order equals itertools.product order; agreement with per-candidate
    run_circuit is pinned by the net-image-consistency tests.
    """
    dim = 2**n_qubits
    g = gate_set.size
    batch = np.zeros((1, dim), dtype=np.complex128)
    batch[0, 0] = 1.0
    embedded = {}
    for t in range(num_gates):
        q1, q2 = placements[t]
        key = (q1, q2)
        if key not in embedded:
            embedded[key] = [
                _embed_two_qubit(gate, q1, q2, n_qubits) for gate in gate_set.gates
            ]
        batch = np.stack([batch @ m.T for m in embedded[key]], axis=1).reshape(
            -1, dim
        )
    active = tuple(range(n_qubits))
    return [
        PureState(n_total=n_qubits, active=active, amplitudes=row) for row in batch
    ]


def _embed_two_qubit(gate: np.ndarray, q1: int, q2: int, n_qubits: int) -> np.ndarray:
    """Dense 2^n x 2^n embedding of a 4x4 gate on (q1, q2)."""
    dim = 2**n_qubits
    tensor = np.eye(dim, dtype=np.complex128).reshape((2,) * n_qubits + (dim,))
    out = np.tensordot(gate.reshape(2, 2, 2, 2), tensor, axes=([2, 3], [q1, q2]))
    return np.moveaxis(out, [0, 1], [q1, q2]).reshape(dim, dim)


def sample_epsilon_net(
    k: int,
    epsilon: float,
    metric: str,
    rng: np.random.Generator,
    budget: int,
    probe_count: int = 200,
) -> CandidateNet:
    """Randomly grown net over U(2^k) until a held-out probe set is covered.

    Haar samples accumulate until all probes have a net element within
    epsilon under the chosen metric, or the budget runs out, in which case
    the net is returned flagged incomplete.
    """
    if k > 3:
        raise DimensionMismatch("sampled nets support k <= 3")
    dist = _metric_fn("unitary", metric)
    dim = 2**k
    probes = haar_batch(dim, probe_count, rng)
    members: list[DenseUnitary] = []
    uncovered = list(range(probe_count))
    drawn = 0
    while uncovered and drawn < budget:
        candidate = haar_batch(dim, 1, rng)[0]
        drawn += 1
        members.append(DenseUnitary(candidate))
        uncovered = [
            i for i in uncovered if dist(DenseUnitary(probes[i]), members[-1]) > epsilon
        ]
    return CandidateNet(
        mode="unitary",
        n_qubits=k,
        circuits=None,
        cached=tuple(members) if members else (DenseUnitary.identity(dim),),
        complete=not uncovered,
    )


def _metric_fn(mode: str, metric: str) -> Callable:
    if mode == "state":
        if metric in ("trace", "dtr"):
            return trace_distance_pure
        raise ValueError(f"unknown state metric {metric!r}")
    if metric == "davg":
        return davg
    if metric in ("df_prime", "dF'"):
        return df_prime
    raise ValueError(f"unknown unitary metric {metric!r}")


def net_min_distance(net: CandidateNet, target, metric: str) -> tuple[int, float]:
    """Exhaustive argmin of the metric over the net; ties break low."""
    if net.size == 0:
        raise EmptyNet("empty candidate net")
    dist = _metric_fn(net.mode, metric)
    best_index = 0
    best = float("inf")
    for index, candidate in enumerate(net.cached):
        value = dist(candidate, target)
        if value < best:
            best, best_index = value, index
    return best_index, best


# ---------------------------------------------------------------------------
# net manifest file


def write_manifest(
    net: CandidateNet,
    gate_set: GateSet | None,
    configurations: Sequence[Placements],
    path,
) -> None:
    if net.circuits is None:
        raise ValueError("only circuit-backed nets can be written to a manifest")
    with open(path, "w") as fh:
        fh.write("bgc-net v1\n")
        fh.write(f"mode {net.mode}\n")
        fh.write(f"n {net.n_qubits}\n")
        fh.write(f"candidates {net.size}\n")
        fh.write(f"gateset {gate_set.digest() if gate_set else '-'}\n")
        fh.write(f"configurations {len(configurations)}\n")
        for placements in configurations:
            pairs = " ".join(f"{a}:{b}" for a, b in placements)
            fh.write(f"config {pairs}\n")
        for circuit in net.circuits:
            fh.write(circuit_to_text(circuit))


def read_manifest(path) -> tuple[CandidateNet, str, list[list[tuple[int, int]]]]:
    """Load a manifest; cached objects are recomputed from the circuits."""
    with open(path) as fh:
        lines: Iterator[str] = iter(line.rstrip("\n") for line in fh if line.strip())
        magic = next(lines)
        if magic != "bgc-net v1":
            raise ValueError(f"unrecognized manifest header {magic!r}")
        mode = next(lines).split()[1]
        n_qubits = int(next(lines).split()[1])
        count = int(next(lines).split()[1])
        digest = next(lines).split()[1]
        n_configs = int(next(lines).split()[1])
        configurations = []
        for _ in range(n_configs):
            tokens = next(lines).split()[1:]
            configurations.append(
                [tuple(int(v) for v in tok.split(":")) for tok in tokens]
            )
        circuits = tuple(circuit_from_lines(lines) for _ in range(count))
    if mode == "state":
        cached = tuple(run_circuit(c, PureState.zero(n_qubits)) for c in circuits)
    else:
        cached = tuple(circuit_unitary(c, range(n_qubits)) for c in circuits)
    net = CandidateNet(mode=mode, n_qubits=n_qubits, circuits=circuits, cached=cached)
    return net, digest, configurations
