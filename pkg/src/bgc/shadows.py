"""Classical-shadow snapshot collection and median-of-means estimation.

A snapshot is one randomized measurement: a sampled rotation C (global
Haar unitary by default, random Clifford optionally) and the computational
outcome b of measuring C|psi>.  The inversion map

    rho_hat = (2^k + 1) C^dag |b><b| C - I

is unbiased for |psi><psi|, so tr(O rho_hat) estimates tr(O rho).
Observables are passed in spectral form (eigenvalue, eigenvector) so that
rank-1 candidate projectors and rank-<=2 Helstrom operators share one code
path.

The hot loop is `single_shot_values`, which evaluates many snapshots
against many observables at once without materializing Snapshot objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DimensionMismatch, LengthMismatch, SupportCapExceeded
from .qcore import (
    CLIFFORD_DENSE_CAP,
    DenseUnitary,
    PureState,
    _format_complex,
    _parse_complex,
    haar_batch,
    sample_random_clifford,
)

SCHEMES = ("haar", "clifford")

# Eigenpairs: sequence of (eigenvalue, eigenvector) with orthonormal vectors.
Eigenpairs = Sequence[tuple[float, np.ndarray]]


@dataclass(frozen=True, eq=False)
class Snapshot:
    """One classical-shadow record: the rotation applied and the outcome bits."""

    k: int
    rotation: DenseUnitary
    outcome: tuple[int, ...]

    def __post_init__(self):
        if self.rotation.dim != 2**self.k:
            raise DimensionMismatch("rotation dimension does not match k")
        if len(self.outcome) != self.k or any(b not in (0, 1) for b in self.outcome):
            raise ValueError("outcome must be a k-bit tuple")

    @property
    def outcome_index(self) -> int:
        index = 0
        for bit in self.outcome:
            index = (index << 1) | bit
        return index


@dataclass(frozen=True)
class MedianOfMeansConfig:
    """K batches of N consecutive values each; K is odd for a tie-free median."""

    N: int
    K: int

    def __post_init__(self):
        if self.N < 1 or self.K < 1:
            raise ValueError("N and K must be positive")
        if self.K % 2 == 0:
            raise ValueError("K must be odd")

    @property
    def total(self) -> int:
        return self.N * self.K

    @classmethod
    def for_accuracy(
        cls, epsilon: float, delta: float, n_observables: int = 1
    ) -> "MedianOfMeansConfig":
        """Batch layout K = 2 ln(2M/delta) (rounded up to odd), N = ceil(102/eps^2)."""
        k = max(1, math.ceil(2.0 * math.log(2.0 * max(n_observables, 1) / delta)))
        if k % 2 == 0:
            k += 1
        n = max(1, math.ceil(102.0 / epsilon**2))
        return cls(N=n, K=k)


def _rotations(k: int, count: int, scheme: str, rng: np.random.Generator) -> np.ndarray:
    if scheme == "haar":
        return haar_batch(2**k, count, rng)
    if scheme == "clifford":
        if k > CLIFFORD_DENSE_CAP:
            raise SupportCapExceeded(
                f"clifford scheme materializes dense rotations only up to {CLIFFORD_DENSE_CAP} qubits"
            )
        return np.stack([sample_random_clifford(k, rng).matrix for _ in range(count)])
    raise ValueError(f"unknown scheme {scheme!r} (expected one of {SCHEMES})")


def _sample_outcomes(
    amplitudes: np.ndarray, rotations: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Outcome indices of measuring C|psi> for a stack of rotations C."""
    rotated = rotations @ amplitudes
    probs = np.abs(rotated) ** 2
    probs /= probs.sum(axis=1, keepdims=True)
    u = rng.random(size=probs.shape[0])
    cumulative = np.cumsum(probs, axis=1)
    return np.minimum(
        (u[:, None] > cumulative).sum(axis=1), probs.shape[1] - 1
    ).astype(np.intp)


def collect_snapshot(state: PureState, scheme: str, rng: np.random.Generator) -> Snapshot:
    """Sample one rotation per the scheme and one measurement outcome."""
    k = state.num_active
    rotation = _rotations(k, 1, scheme, rng)
    index = int(_sample_outcomes(state.amplitudes, rotation, rng)[0])
    outcome = tuple((index >> (k - 1 - j)) & 1 for j in range(k))
    return Snapshot(k=k, rotation=DenseUnitary(rotation[0]), outcome=outcome)


def estimate_observable(snapshot: Snapshot, observable: Eigenpairs) -> float:
    """Single-snapshot estimate of tr(O rho) via the inversion formula.

    Returns sum_m lambda_m (2^k+1) |<v_m| C^dag |b>|^2 - tr(O).
    """
    dim = snapshot.rotation.dim
    b = snapshot.outcome_index
    total = 0.0
    trace = 0.0
    for value, vector in observable:
        vector = np.asarray(vector, dtype=np.complex128).reshape(-1)
        if vector.size != dim:
            raise DimensionMismatch("eigenvector length does not match snapshot dimension")
        amp = (snapshot.rotation.matrix @ vector)[b]
        total += value * (dim + 1) * abs(amp) ** 2
        trace += value
    return total - trace


def single_shot_values(
    rotations: np.ndarray, outcomes: np.ndarray, observables: Sequence[Eigenpairs]
) -> np.ndarray:
    """Vectorized estimate_observable: (n_snapshots, n_observables) array.

    Only the outcome row <b|C of each rotation enters the estimates, so it
    is extracted once and reused for every observable.
    """
    count, dim, _ = rotations.shape
    rows = rotations[np.arange(count), outcomes, :]
    values = np.zeros((count, len(observables)))
    for col, eigenpairs in enumerate(observables):
        trace = 0.0
        for value, vector in eigenpairs:
            amps = rows @ np.asarray(vector, dtype=np.complex128)
            values[:, col] += value * (dim + 1) * np.abs(amps) ** 2
            trace += value
        values[:, col] -= trace
    return values


def collect_snapshot_values(
    state: PureState,
    observables: Sequence[Eigenpairs],
    count: int,
    scheme: str,
    rng: np.random.Generator | np.random.SeedSequence,
    chunk: int = 4096,
) -> np.ndarray:
    """Collect `count` snapshots of `state` and return their single-shot values.

    Rotations are never retained, so memory stays at chunk * 4^k complex
    entries.  Passing a SeedSequence derives one child seed per snapshot
    index, which makes the result independent of chunking and safe to
    reproduce under parallel dispatch; passing a Generator draws from the
    single stream in order.
    """
    k = state.num_active
    values = np.empty((count, len(observables)))
    if isinstance(rng, np.random.SeedSequence):
        generators = [np.random.default_rng(s) for s in rng.spawn(count)]
        for start in range(0, count, chunk):
            stop = min(start + chunk, count)
            rotations = np.stack(
                [_rotations(k, 1, scheme, g)[0] for g in generators[start:stop]]
            )
            outcomes = np.empty(stop - start, dtype=np.intp)
            rotated = rotations @ state.amplitudes
            probs = np.abs(rotated) ** 2
            probs /= probs.sum(axis=1, keepdims=True)
            cumulative = np.cumsum(probs, axis=1)
            for j, g in enumerate(generators[start:stop]):
                outcomes[j] = min(
                    int((g.random() > cumulative[j]).sum()), probs.shape[1] - 1
                )
            values[start:stop] = single_shot_values(rotations, outcomes, observables)
    else:
        for start in range(0, count, chunk):
            stop = min(start + chunk, count)
            rotations = _rotations(k, stop - start, scheme, rng)
            outcomes = _sample_outcomes(state.amplitudes, rotations, rng)
            values[start:stop] = single_shot_values(rotations, outcomes, observables)
    return values


def median_of_means(values: Sequence[float], cfg: MedianOfMeansConfig) -> float:
    """Median of K batch means over consecutive batches of N values."""
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.size != cfg.total:
        raise LengthMismatch(f"expected {cfg.total} values, got {values.size}")
    batches = values.reshape(cfg.K, cfg.N)
    return float(np.median(batches.mean(axis=1)))


def median_of_means_columns(values: np.ndarray, cfg: MedianOfMeansConfig) -> np.ndarray:
    """median_of_means applied to each column of an (N*K, m) array."""
    if values.shape[0] != cfg.total:
        raise LengthMismatch(f"expected {cfg.total} rows, got {values.shape[0]}")
    batches = values.reshape(cfg.K, cfg.N, -1)
    return np.median(batches.mean(axis=1), axis=0)


def estimate_all_candidates(
    snapshots: Sequence[Snapshot],
    observables: Sequence[Eigenpairs],
    cfg: MedianOfMeansConfig,
) -> np.ndarray:
    """Per-candidate median-of-means estimates reusing one snapshot set.

    Batch assignment is by snapshot index (consecutive blocks of N), fixed
    before any parallel dispatch.
    """
    if not observables:
        return np.zeros(0)
    if len(snapshots) != cfg.total:
        raise LengthMismatch(f"expected {cfg.total} snapshots, got {len(snapshots)}")
    ks = {s.k for s in snapshots}
    if len(ks) != 1:
        raise DimensionMismatch("snapshots have inconsistent qubit counts")
    rotations = np.stack([s.rotation.matrix for s in snapshots])
    outcomes = np.array([s.outcome_index for s in snapshots], dtype=np.intp)
    values = single_shot_values(rotations, outcomes, observables)
    return median_of_means_columns(values, cfg)


def rank1_observable(state: PureState) -> Eigenpairs:
    """|sigma><sigma| as eigenpairs, for overlap estimation."""
    return [(1.0, state.amplitudes.copy())]


# ---------------------------------------------------------------------------
# snapshot log


def write_snapshot_log(snapshots: Iterable[Snapshot], scheme: str, path) -> None:
    """One line per snapshot: scheme tag, k, outcome bits, rotation entries."""
    with open(path, "w") as fh:
        for snap in snapshots:
            bits = "".join(str(b) for b in snap.outcome)
            entries = " ".join(
                _format_complex(v) for v in snap.rotation.matrix.reshape(-1)
            )
            fh.write(f"{scheme} {snap.k} {bits} {entries}\n")


def read_snapshot_log(path) -> tuple[str, list[Snapshot]]:
    snapshots: list[Snapshot] = []
    scheme = ""
    with open(path) as fh:
        for line in fh:
            tokens = line.split()
            if not tokens:
                continue
            scheme, k_str, bits = tokens[0], tokens[1], tokens[2]
            k = int(k_str)
            matrix = np.array([_parse_complex(t) for t in tokens[3:]]).reshape(2**k, 2**k)
            snapshots.append(
                Snapshot(
                    k=k,
                    rotation=DenseUnitary(matrix),
                    outcome=tuple(int(b) for b in bits),
                )
            )
    return scheme, snapshots
