"""Dense pure-state simulation over a small active qubit set.

States on very large registers (n up to 10^4 and beyond) are stored as an
amplitude vector over the *active* qubits only; every qubit outside the
active set is implicitly |0>.  A circuit of G two-qubit gates touches at
most 2G qubits, so this keeps everything dense and small.

Index convention: the active set is kept sorted ascending and the first
active qubit is the most significant bit of the amplitude index (so for
active = (0, 1), basis |q0 q1> = |10> sits at index 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    PostselectionImpossible,
    SupportCapExceeded,
    TargetOutsideSubset,
)

SUPPORT_CAP = 20          # hard dense-simulation limit on |active|
UNITARY_ATOL = 1e-10      # max-entry tolerance for M^dag M - I
CLIFFORD_DENSE_CAP = 6    # largest k for dense Clifford materialization

_FLOAT_FMT = "{:.17g}"    # exact decimal round-trip for float64


def is_unitary(matrix: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        return False
    gram = matrix.conj().T @ matrix
    return bool(np.max(np.abs(gram - np.eye(matrix.shape[0]))) <= atol)


@dataclass(frozen=True, eq=False)
class GatePlacement:
    """A two-qubit gate: 4x4 unitary acting on the ordered pair (q1, q2).

    q1 is the first tensor factor (most significant bit of the 4-dim index).
    """

    matrix: np.ndarray
    targets: tuple[int, int]

    def __post_init__(self):
        matrix = np.ascontiguousarray(np.asarray(self.matrix, dtype=np.complex128))
        object.__setattr__(self, "matrix", matrix)
        q1, q2 = self.targets
        if q1 == q2 or q1 < 0 or q2 < 0:
            raise ValueError(f"invalid gate targets {self.targets}")
        if matrix.shape != (4, 4):
            raise ValueError(f"gate matrix must be 4x4, got {matrix.shape}")
        if not is_unitary(matrix):
            raise ValueError("gate matrix is not unitary to 1e-10")


@dataclass(frozen=True, eq=False)
class Circuit:
    """An ordered list of two-qubit gate placements on n_qubits wires.

    Gate 0 is applied first (the circuit reads left to right in time).
    """

    n_qubits: int
    gates: tuple[GatePlacement, ...]

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.n_qubits <= 0:
            raise ValueError("n_qubits must be positive")
        for gate in self.gates:
            if max(gate.targets) >= self.n_qubits:
                raise ValueError(
                    f"gate targets {gate.targets} exceed n_qubits={self.n_qubits}"
                )

    @property
    def num_gates(self) -> int:
        return len(self.gates)

    def support(self) -> tuple[int, ...]:
        """Qubits touched by at least one gate (sorted)."""
        touched: set[int] = set()
        for gate in self.gates:
            touched.update(gate.targets)
        return tuple(sorted(touched))


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized amplitudes over the active qubits; the rest are |0>."""

    n_total: int
    active: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        active = tuple(int(q) for q in self.active)
        amps = np.ascontiguousarray(np.asarray(self.amplitudes, dtype=np.complex128)).reshape(-1)
        object.__setattr__(self, "active", active)
        object.__setattr__(self, "amplitudes", amps)
        if self.n_total <= 0:
            raise ValueError("n_total must be positive")
        if any(a < 0 or a >= self.n_total for a in active):
            raise ValueError("active qubit index out of range")
        if list(active) != sorted(set(active)):
            raise ValueError("active set must be sorted and duplicate-free")
        if amps.size != 2 ** len(active):
            raise DimensionMismatch(
                f"{amps.size} amplitudes for {len(active)} active qubits"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state norm {norm} deviates from 1")

    @classmethod
    def zero(cls, n_total: int) -> "PureState":
        return cls(n_total=n_total, active=(), amplitudes=np.ones(1, dtype=np.complex128))

    @classmethod
    def from_amplitudes(cls, amplitudes: np.ndarray, n_total: int | None = None) -> "PureState":
        """Dense k-qubit state on qubits 0..k-1."""
        amplitudes = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        k = int(round(math.log2(amplitudes.size)))
        if 2**k != amplitudes.size:
            raise DimensionMismatch("amplitude length is not a power of two")
        if n_total is None:
            n_total = max(k, 1)
        return cls(n_total=n_total, active=tuple(range(k)), amplitudes=amplitudes)

    @property
    def num_active(self) -> int:
        return len(self.active)

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per active qubit."""
        return self.amplitudes.reshape((2,) * len(self.active))

    def pruned(self, tol: float = 1e-12) -> "PureState":
        """Drop active qubits whose one-branch carries at most tol amplitude mass."""
        if not self.active:
            return self
        tensor = self.tensor()
        keep: list[int] = []
        for axis, qubit in enumerate(self.active):
            one_mass = float(np.sum(np.abs(np.take(tensor, 1, axis=axis)) ** 2))
            if one_mass > tol:
                keep.append(axis)
        if len(keep) == len(self.active):
            return self
        drop = [axis for axis in range(len(self.active)) if axis not in keep]
        reduced = tensor
        for axis in sorted(drop, reverse=True):
            reduced = np.take(reduced, 0, axis=axis)
        amps = reduced.reshape(-1)
        amps = amps / np.linalg.norm(amps)
        return PureState(
            n_total=self.n_total,
            active=tuple(self.active[a] for a in keep),
            amplitudes=amps,
        )


@dataclass(frozen=True, eq=False)
class DenseUnitary:
    """A fully materialized unitary on a power-of-two dimension."""

    matrix: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        matrix = np.ascontiguousarray(np.asarray(self.matrix, dtype=np.complex128))
        object.__setattr__(self, "matrix", matrix)
        dim = matrix.shape[0]
        object.__setattr__(self, "dim", dim)
        if dim & (dim - 1) != 0:
            raise ValueError(f"dimension {dim} is not a power of two")
        if not is_unitary(matrix):
            raise ValueError("matrix is not unitary to 1e-10")

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    @classmethod
    def identity(cls, dim: int) -> "DenseUnitary":
        return cls(np.eye(dim, dtype=np.complex128))


@dataclass(frozen=True)
class StabilizerProductLabel:
    """Per-qubit labels over {|0>,|1>,|x+>,|x->,|y+>,|y->} encoded as 0..5."""

    labels: tuple[int, ...]

    def __post_init__(self):
        labels = tuple(int(v) for v in self.labels)
        object.__setattr__(self, "labels", labels)
        if any(v < 0 or v > 5 for v in labels):
            raise ValueError("stabilizer labels must lie in 0..5")


_SQRT2 = math.sqrt(2.0)

# Single-qubit stabilizer states, indexed by label.
STABILIZER_STATES = np.array(
    [
        [1, 0],
        [0, 1],
        [1 / _SQRT2, 1 / _SQRT2],
        [1 / _SQRT2, -1 / _SQRT2],
        [1 / _SQRT2, 1j / _SQRT2],
        [1 / _SQRT2, -1j / _SQRT2],
    ],
    dtype=np.complex128,
)

# Canonical preparation unitaries: column 0 of STABILIZER_PREP[m] is state m.
_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / _SQRT2
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_S = np.diag([1, 1j]).astype(np.complex128)
STABILIZER_PREP = np.stack(
    [np.eye(2, dtype=np.complex128), _X, _H, _H @ _X, _S @ _H, _S @ _H @ _X]
)


# ---------------------------------------------------------------------------
# state manipulation


def _extend_active(tensor: np.ndarray, active: tuple[int, ...], new_qubits: Iterable[int]):
    """Insert |0> axes so that new_qubits join the active set (kept sorted)."""
    for qubit in sorted(set(new_qubits) - set(active)):
        pos = int(np.searchsorted(active, qubit))
        tensor = np.stack([tensor, np.zeros_like(tensor)], axis=pos)
        active = active[:pos] + (qubit,) + active[pos:]
    return tensor, active


def _apply_two_qubit(tensor: np.ndarray, matrix: np.ndarray, axis1: int, axis2: int) -> np.ndarray:
    gate = matrix.reshape(2, 2, 2, 2)
    out = np.tensordot(gate, tensor, axes=([2, 3], [axis1, axis2]))
    return np.moveaxis(out, [0, 1], [axis1, axis2])


def run_circuit(circuit: Circuit, state: PureState, cap: int = SUPPORT_CAP) -> PureState:
    """Apply the circuit's gates in order; active grows by the circuit targets."""
    if state.n_total != circuit.n_qubits:
        raise DimensionMismatch(
            f"state on {state.n_total} qubits vs circuit on {circuit.n_qubits}"
        )
    final_active = set(state.active) | set(circuit.support())
    if len(final_active) > cap:
        raise SupportCapExceeded(
            f"active support {len(final_active)} would exceed cap {cap}"
        )
    active = state.active
    tensor = state.tensor()
    for gate in circuit.gates:
        tensor, active = _extend_active(tensor, active, gate.targets)
        axis1 = active.index(gate.targets[0])
        axis2 = active.index(gate.targets[1])
        tensor = _apply_two_qubit(tensor, gate.matrix, axis1, axis2)
    return PureState(n_total=state.n_total, active=active, amplitudes=tensor.reshape(-1))


def circuit_unitary(circuit: Circuit, subset: Sequence[int], cap: int = SUPPORT_CAP) -> DenseUnitary:
    """Full unitary of the circuit on `subset` (identity on untargeted qubits)."""
    subset = tuple(sorted(int(q) for q in subset))
    if len(set(subset)) != len(subset):
        raise ValueError("subset has duplicate qubits")
    if len(subset) > cap:
        raise SupportCapExceeded(f"subset of {len(subset)} qubits exceeds cap {cap}")
    missing = set(circuit.support()) - set(subset)
    if missing:
        raise TargetOutsideSubset(f"circuit targets {sorted(missing)} outside subset")
    k = len(subset)
    dim = 2**k
    position = {q: i for i, q in enumerate(subset)}
    # Columns as a trailing axis; gates act on the row (bra-side) axes.
    unitary = np.eye(dim, dtype=np.complex128).reshape((2,) * k + (dim,))
    for gate in circuit.gates:
        axis1 = position[gate.targets[0]]
        axis2 = position[gate.targets[1]]
        unitary = _apply_two_qubit(unitary, gate.matrix, axis1, axis2)
    return DenseUnitary(unitary.reshape(dim, dim))


def state_overlap(psi: PureState, phi: PureState) -> complex:
    """<psi|phi> with |0> padding to align differing active sets."""
    if psi.n_total != phi.n_total:
        raise DimensionMismatch("states live on different registers")
    union = tuple(sorted(set(psi.active) | set(phi.active)))
    a, _ = _extend_active(psi.tensor(), psi.active, union)
    b, _ = _extend_active(phi.tensor(), phi.active, union)
    return complex(np.vdot(a.reshape(-1), b.reshape(-1)))


def restrict_to(state: PureState, region: Sequence[int]) -> PureState:
    """Reindex a state whose activity lies inside `region` to a len(region)-qubit register."""
    region = tuple(sorted(int(q) for q in region))
    if not set(state.active) <= set(region):
        raise DimensionMismatch(
            f"active qubits {state.active} not contained in region {region}"
        )
    local = {q: i for i, q in enumerate(region)}
    return PureState(
        n_total=len(region),
        active=tuple(local[q] for q in state.active),
        amplitudes=state.amplitudes,
    )


def embed_in(state: PureState, region: Sequence[int], n_total: int) -> PureState:
    """Inverse of restrict_to: place a len(region)-qubit state onto global wires."""
    region = tuple(int(q) for q in region)
    if state.n_total != len(region):
        raise DimensionMismatch("state size does not match region size")
    mapping = [region[q] for q in state.active]
    if mapping != sorted(mapping):
        raise ValueError("region must be increasing on the active qubits")
    return PureState(n_total=n_total, active=tuple(mapping), amplitudes=state.amplitudes)


def full_vector(state: PureState) -> np.ndarray:
    """Dense amplitude vector over all n_total qubits (n_total <= cap)."""
    if state.n_total > SUPPORT_CAP:
        raise SupportCapExceeded(
            f"cannot densify a {state.n_total}-qubit register (cap {SUPPORT_CAP})"
        )
    tensor, _ = _extend_active(state.tensor(), state.active, range(state.n_total))
    return tensor.reshape(-1)


def apply_dense(
    state: PureState, matrix: np.ndarray, qubits: Sequence[int], cap: int = SUPPORT_CAP
) -> PureState:
    """Apply a dense 2^k x 2^k unitary to the given k qubits (any order).

    The matrix's first tensor factor is qubits[0], matching GatePlacement's
    convention for k = 2.
    """
    qubits = tuple(int(q) for q in qubits)
    k = len(qubits)
    matrix = np.asarray(matrix, dtype=np.complex128)
    if matrix.shape != (2**k, 2**k):
        raise DimensionMismatch(f"matrix shape {matrix.shape} for {k} qubits")
    if len(set(state.active) | set(qubits)) > cap:
        raise SupportCapExceeded("dense application would exceed the support cap")
    tensor, active = _extend_active(state.tensor(), state.active, qubits)
    axes = [active.index(q) for q in qubits]
    gate = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(gate, tensor, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return PureState(n_total=state.n_total, active=active, amplitudes=out.reshape(-1))


def sample_computational(state: PureState, rng: np.random.Generator) -> tuple[int, ...]:
    """Measure every active qubit in the computational basis.

    Returns the outcome bits over the active qubits in order; implicit |0>
    qubits deterministically yield 0 and are the caller's bookkeeping.
    """
    probs = np.abs(state.amplitudes) ** 2
    probs = probs / probs.sum()
    index = int(rng.choice(probs.size, p=probs))
    k = len(state.active)
    return tuple((index >> (k - 1 - j)) & 1 for j in range(k))


def project_zero(state: PureState, qubits: Iterable[int]) -> tuple[PureState, float]:
    """Project the given qubits onto |0> and renormalize.

    Returns (projected state, success probability).  Qubits outside the
    active set are already |0> and contribute probability 1.  The projected
    qubits leave the active set.
    """
    targets = sorted(set(int(q) for q in qubits) & set(state.active))
    if not targets:
        return state, 1.0
    tensor = state.tensor()
    for qubit in reversed(targets):
        axis = state.active.index(qubit)
        tensor = np.take(tensor, 0, axis=axis)
    amps = tensor.reshape(-1)
    prob = float(np.sum(np.abs(amps) ** 2))
    if prob < 1e-12:
        raise PostselectionImpossible(f"all-zero outcome on {targets} has probability {prob}")
    remaining = tuple(q for q in state.active if q not in targets)
    return (
        PureState(n_total=state.n_total, active=remaining, amplitudes=amps / math.sqrt(prob)),
        prob,
    )


def measure_zeros_or_reject(
    state: PureState, qubits: Iterable[int], rng: np.random.Generator
) -> PureState | None:
    """Measure `qubits` in the computational basis, keep only the all-zero branch.

    Returns the collapsed state, or None when the sampled outcome was nonzero
    (the sample is consumed and rejected, as in measure-and-postselect).
    """
    targets = sorted(set(int(q) for q in qubits) & set(state.active))
    if not targets:
        return state
    tensor = state.tensor()
    for qubit in reversed(targets):
        axis = state.active.index(qubit)
        tensor = np.take(tensor, 0, axis=axis)
    amps = tensor.reshape(-1)
    prob = float(np.sum(np.abs(amps) ** 2))
    if rng.random() >= prob:
        return None
    remaining = tuple(q for q in state.active if q not in targets)
    return PureState(
        n_total=state.n_total, active=remaining, amplitudes=amps / math.sqrt(prob)
    )


# ---------------------------------------------------------------------------
# random objects


def sample_haar_unitary(dim: int, rng: np.random.Generator) -> DenseUnitary:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    return DenseUnitary(haar_batch(dim, 1, rng)[0])


def haar_batch(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """`count` stacked Haar unitaries of the given dimension."""
    ginibre = rng.standard_normal((count, dim, dim)) + 1j * rng.standard_normal((count, dim, dim))
    q, r = np.linalg.qr(ginibre)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    q = q * (diag / np.abs(diag))[:, None, :]
    return q


def sample_stabilizer_product(
    k: int, rng: np.random.Generator
) -> tuple[StabilizerProductLabel, PureState]:
    """Uniform tensor product of single-qubit stabilizer states on k qubits."""
    if k < 1:
        raise ValueError("k must be at least 1")
    labels = tuple(int(v) for v in rng.integers(0, 6, size=k))
    return StabilizerProductLabel(labels), stabilizer_product_state(labels, n_total=k)


def stabilizer_product_state(
    labels: Sequence[int], n_total: int | None = None, qubits: Sequence[int] | None = None
) -> PureState:
    """Build the product state for the given labels, optionally on chosen wires."""
    amps = np.ones(1, dtype=np.complex128)
    for label in labels:
        amps = np.kron(amps, STABILIZER_STATES[int(label)])
    k = len(labels)
    if qubits is None:
        qubits = tuple(range(k))
    qubits = tuple(int(q) for q in qubits)
    if n_total is None:
        n_total = max(qubits) + 1
    return PureState(n_total=n_total, active=qubits, amplitudes=amps)


# ---------------------------------------------------------------------------
# random Cliffords: Koenig-Smolin symplectic sampling + dense materialization.
# Vectors over GF(2) use the interleaved layout (x1 z1 x2 z2 ...).


def _symp_inner(u: np.ndarray, v: np.ndarray) -> int:
    return int(np.sum(u[0::2] & v[1::2]) + np.sum(u[1::2] & v[0::2])) & 1


def _transvect(h: np.ndarray, v: np.ndarray) -> np.ndarray:
    if h is None or not h.any():
        return v
    if _symp_inner(v, h):
        return v ^ h
    return v


def _anticommuting_block(block: tuple[int, int]) -> tuple[int, int]:
    # A single-qubit (x, z) pair anticommuting with the given nonzero pair.
    return (0, 1) if block == (1, 0) else (1, 0)


def _find_transvections(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two transvections mapping x to y: Z_h2(Z_h1(x)) = y for nonzero x, y."""
    if np.array_equal(x, y):
        zero = np.zeros_like(x)
        return zero, zero
    if _symp_inner(x, y):
        return x ^ y, np.zeros_like(x)
    n = x.size // 2
    z = np.zeros_like(x)
    common = [
        j
        for j in range(n)
        if (x[2 * j] or x[2 * j + 1]) and (y[2 * j] or y[2 * j + 1])
    ]
    if common:
        j = common[0]
        xb = (int(x[2 * j]), int(x[2 * j + 1]))
        yb = (int(y[2 * j]), int(y[2 * j + 1]))
        for zb in ((0, 1), (1, 0), (1, 1)):
            if (xb[0] & zb[1]) ^ (xb[1] & zb[0]) and (yb[0] & zb[1]) ^ (yb[1] & zb[0]):
                z[2 * j], z[2 * j + 1] = zb
                break
    else:
        jx = next(j for j in range(n) if x[2 * j] or x[2 * j + 1])
        jy = next(j for j in range(n) if y[2 * j] or y[2 * j + 1])
        z[2 * jx], z[2 * jx + 1] = _anticommuting_block(
            (int(x[2 * jx]), int(x[2 * jx + 1]))
        )
        z[2 * jy], z[2 * jy + 1] = _anticommuting_block(
            (int(y[2 * jy]), int(y[2 * jy + 1]))
        )
    return x ^ z, z ^ y


def _random_symplectic(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform element of Sp(2n, F2), rows = images of (X1, Z1, ..., Xn, Zn)."""
    nn = 2 * n
    f1 = np.zeros(nn, dtype=np.uint8)
    while not f1.any():
        f1 = rng.integers(0, 2, size=nn).astype(np.uint8)
    e1 = np.zeros(nn, dtype=np.uint8)
    e1[0] = 1
    t1, t2 = _find_transvections(e1, f1)
    bits = rng.integers(0, 2, size=nn - 1).astype(np.uint8)
    eprime = e1.copy()
    eprime[2:] = bits[1:]
    h0 = _transvect(t2, _transvect(t1, eprime))
    extra = f1 if bits[0] else None

    if n == 1:
        g = np.eye(2, dtype=np.uint8)
    else:
        g = np.zeros((nn, nn), dtype=np.uint8)
        g[:2, :2] = np.eye(2, dtype=np.uint8)
        g[2:, 2:] = _random_symplectic(n - 1, rng)
    for row in range(nn):
        v = _transvect(t2, _transvect(t1, g[row]))
        v = _transvect(h0, v)
        if extra is not None:
            v = _transvect(extra, v)
        g[row] = v
    return g


# Indexed by x + 2z: I, X, Z, Y (= i X Z).
_PAULI_1Q = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[1, 0], [0, -1]],
        [[0, -1j], [1j, 0]],
    ],
    dtype=np.complex128,
)


def _pauli_from_bits(xbits: np.ndarray, zbits: np.ndarray, sign: int) -> np.ndarray:
    """Hermitian Pauli i^{x.z} X^x Z^z with overall sign (-1)^sign."""
    out = np.ones((1, 1), dtype=np.complex128)
    for x, z in zip(xbits, zbits):
        out = np.kron(out, _PAULI_1Q[int(x) + 2 * int(z)])
    return -out if sign else out


def sample_random_clifford(k: int, rng: np.random.Generator) -> DenseUnitary:
    """Uniformly random k-qubit Clifford, materialized densely (k <= 6).

    Uniform up to global phase: the symplectic part is Koenig-Smolin sampled
    and the 2k sign bits are uniform, a bijection with C_k / U(1).
    """
    if k < 1 or k > CLIFFORD_DENSE_CAP:
        raise SupportCapExceeded(
            f"dense Clifford materialization supports 1..{CLIFFORD_DENSE_CAP} qubits, got {k}"
        )
    symplectic = _random_symplectic(k, rng)
    signs = rng.integers(0, 2, size=2 * k)
    dim = 2**k
    x_images = []
    z_images = []
    for j in range(k):
        rx = symplectic[2 * j]
        rz = symplectic[2 * j + 1]
        x_images.append(_pauli_from_bits(rx[0::2], rx[1::2], int(signs[2 * j])))
        z_images.append(_pauli_from_bits(rz[0::2], rz[1::2], int(signs[2 * j + 1])))
    # U|0..0> is the joint +1 eigenvector of the Z images.
    projector = np.eye(dim, dtype=np.complex128)
    for gz in z_images:
        projector = projector @ (np.eye(dim) + gz) / 2.0
    col = int(np.argmax(np.linalg.norm(projector, axis=0)))
    psi0 = projector[:, col]
    psi0 = psi0 / np.linalg.norm(psi0)
    # Columns: U|x> = (prod_j Gx_j^{x_j}) U|0..0>.
    unitary = np.empty((dim, dim), dtype=np.complex128)
    unitary[:, 0] = psi0
    for x in range(1, dim):
        prev = x & (x - 1)                      # clear the lowest set bit
        j = k - (x ^ prev).bit_length()         # qubit owning that bit
        unitary[:, x] = x_images[j] @ unitary[:, prev]
    return DenseUnitary(unitary)


# ---------------------------------------------------------------------------
# circuit text serialization

_COMPLEX_FMT = _FLOAT_FMT + "," + _FLOAT_FMT


def _format_complex(value: complex) -> str:
    return _COMPLEX_FMT.format(value.real, value.imag)


def _parse_complex(token: str) -> complex:
    re_str, im_str = token.split(",")
    return complex(float(re_str), float(im_str))


def circuit_to_text(circuit: Circuit) -> str:
    """Line-oriented serialization, exact at 17 significant digits."""
    lines = [f"n {circuit.n_qubits} g {circuit.num_gates}"]
    for gate in circuit.gates:
        entries = " ".join(_format_complex(v) for v in gate.matrix.reshape(-1))
        lines.append(f"{gate.targets[0]} {gate.targets[1]} {entries}")
    return "\n".join(lines) + "\n"


def circuit_from_lines(lines: Iterator[str]) -> Circuit:
    header = next(lines).split()
    if len(header) != 4 or header[0] != "n" or header[2] != "g":
        raise ValueError(f"bad circuit header: {' '.join(header)}")
    n_qubits = int(header[1])
    num_gates = int(header[3])
    gates = []
    for _ in range(num_gates):
        tokens = next(lines).split()
        if len(tokens) != 18:
            raise ValueError("bad gate line: expected 2 targets + 16 entries")
        q1, q2 = int(tokens[0]), int(tokens[1])
        matrix = np.array([_parse_complex(t) for t in tokens[2:]]).reshape(4, 4)
        gates.append(GatePlacement(matrix=matrix, targets=(q1, q2)))
    return Circuit(n_qubits=n_qubits, gates=tuple(gates))


def circuit_from_text(text: str) -> Circuit:
    lines = iter(line for line in text.splitlines() if line.strip())
    return circuit_from_lines(lines)
