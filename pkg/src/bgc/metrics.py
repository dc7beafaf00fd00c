"""Distance metrics on pure states and unitaries, plus the Choi construction.

All unitary distances are evaluated in closed form on small subsystems:
the average-case (root mean squared trace) distance and the quotient
Frobenius distance from |tr(U^dag V)|, the quotient spectral distance from
the eigenphases of U^dag V, and the diamond distance from the distance of
the origin to the convex hull of those eigenphases on the unit circle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, SupportCapExceeded
from .qcore import (
    SUPPORT_CAP,
    DenseUnitary,
    PureState,
    STABILIZER_STATES,
    state_overlap,
)


def _mat(u) -> np.ndarray:
    return u.matrix if isinstance(u, DenseUnitary) else np.asarray(u, dtype=np.complex128)


def _pair(u, v) -> tuple[np.ndarray, np.ndarray]:
    mu, mv = _mat(u), _mat(v)
    if mu.shape != mv.shape:
        raise DimensionMismatch(f"unitary shapes differ: {mu.shape} vs {mv.shape}")
    return mu, mv


def _clamped_sqrt(x: float) -> float:
    return math.sqrt(min(max(x, 0.0), 1.0))


def trace_distance_pure(psi: PureState, phi: PureState) -> float:
    """sqrt(1 - |<psi|phi>|^2), the trace distance between pure states."""
    overlap = state_overlap(psi, phi)
    return _clamped_sqrt(1.0 - abs(overlap) ** 2)


def fidelity_pure(psi: PureState, phi: PureState) -> float:
    """|<psi|phi>|^2."""
    return min(abs(state_overlap(psi, phi)) ** 2, 1.0)


def _trace_gap(mu: np.ndarray, mv: np.ndarray) -> float:
    """d - |tr(U^dag V)|, computed without cancellation near zero.

    Equals ||U - e^{i phi*} V||_F^2 / 2 at the aligning phase phi*, a sum of
    squared elementwise differences, so nearly-equal unitaries give ~1e-32
    instead of the ~1e-16 absolute error of the trace formula (whose square
    root would floor every derived distance at ~1e-8).
    """
    t_raw = complex(np.trace(mu.conj().T @ mv))
    if abs(t_raw) == 0.0:
        return float(mu.shape[0])
    phase = np.conj(t_raw) / abs(t_raw)
    diff = mu - phase * mv
    return float(np.sum(np.abs(diff) ** 2)) / 2.0


def davg(u, v) -> float:
    """Root mean squared trace distance of outputs over Haar-random inputs.

    davg(U, V)^2 = 1 - (d + |tr(U^dag V)|^2) / (d(d+1))
                 = (d - T)(d + T) / (d(d+1)) with T = |tr(U^dag V)|.
    """
    mu, mv = _pair(u, v)
    d = mu.shape[0]
    gap = _trace_gap(mu, mv)
    t = d - gap
    return math.sqrt(min(max(gap * (d + t) / (d * (d + 1)), 0.0), 1.0))


def df_prime(u, v) -> float:
    """Global-phase-quotiented normalized Frobenius distance.

    df'(U, V)^2 = 2 - (2/d)|tr(U^dag V)|.
    """
    mu, mv = _pair(u, v)
    d = mu.shape[0]
    return math.sqrt(max(2.0 * _trace_gap(mu, mv) / d, 0.0))


def _eigenphases(u, v) -> np.ndarray:
    mu, mv = _pair(u, v)
    return np.angle(np.linalg.eigvals(mu.conj().T @ mv))


def d2_prime(u, v) -> float:
    """Global-phase-quotiented spectral distance.

    Equals min_phi max_k |e^{i theta_k} - e^{i phi}| over the eigenphases
    theta_k of U^dag V.  The 1-D circle minimization runs golden-section
    search seeded at the best point of a coarse phase grid (the raw seed at
    the phase of tr(U^dag V) is unreliable when the trace nearly vanishes).
    """
    phases = _eigenphases(u, v)

    def objective(phi: float) -> float:
        return 2.0 * float(np.max(np.abs(np.sin((phases - phi) / 2.0))))

    grid = np.linspace(-math.pi, math.pi, 512, endpoint=False)
    values = 2.0 * np.max(np.abs(np.sin((phases[None, :] - grid[:, None]) / 2.0)), axis=1)
    center = grid[int(np.argmin(values))]
    step = grid[1] - grid[0]
    lo, hi = center - step, center + step
    inv_golden = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_golden * (b - a)
    d = a + inv_golden * (b - a)
    fc, fd = objective(c), objective(d)
    while b - a > 1e-9:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_golden * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_golden * (b - a)
            fd = objective(d)
    return objective((a + b) / 2.0)


def diamond_distance(u, v) -> float:
    """Diamond distance between the unitary channels of U and V.

    Computed as 2 sqrt(1 - m^2) where m is the distance from the origin to
    the convex hull of the eigenvalues of U^dag V on the unit circle.  The
    eigenvalues are in convex position, so the hull is their angular sort;
    the origin lies inside iff no angular gap exceeds pi, and otherwise the
    nearest hull point sits on the chord closing the largest gap.
    """
    mu, mv = _pair(u, v)
    if mu.shape[0] > 2**SUPPORT_CAP:
        raise SupportCapExceeded("dimension exceeds dense eigendecomposition cap")
    phases = np.sort(_eigenphases(u, v))
    gaps = np.diff(phases, append=phases[0] + 2.0 * math.pi)
    largest = float(np.max(gaps)) if gaps.size else 2.0 * math.pi
    if phases.size == 1:
        largest = 2.0 * math.pi
    if largest <= math.pi:
        return 2.0
    m = abs(math.cos(largest / 2.0))
    return 2.0 * _clamped_sqrt(1.0 - m * m)


@dataclass(frozen=True, eq=False)
class ChoiState:
    """Pure state (U x I)|Phi> over system + ancilla halves of equal size."""

    base_dim: int
    state: PureState


def choi_state(u, cap: int = SUPPORT_CAP) -> ChoiState:
    """Choi state of a k-qubit unitary as a 2k-qubit PureState.

    Amplitude of |i>|j> is U_ij / sqrt(d); qubits 0..k-1 carry the output
    system, k..2k-1 the maximally entangled reference copy.
    """
    matrix = _mat(u)
    d = matrix.shape[0]
    k = d.bit_length() - 1
    if 2 * k > cap:
        raise SupportCapExceeded(f"Choi state needs {2 * k} qubits, cap is {cap}")
    amps = (matrix / math.sqrt(d)).reshape(-1)
    return ChoiState(
        base_dim=d,
        state=PureState(n_total=2 * k, active=tuple(range(2 * k)), amplitudes=amps),
    )


def stabilizer_rms_distance(u, v) -> float:
    """Exact root mean squared trace distance over the uniform ensemble of
    single-qubit stabilizer product inputs, by enumeration of all 6^k labels."""
    mu, mv = _pair(u, v)
    d = mu.shape[0]
    k = d.bit_length() - 1
    if 6**k > 200_000:
        raise SupportCapExceeded(f"stabilizer enumeration of 6^{k} inputs is too large")
    w = mu.conj().T @ mv
    total = 0.0
    for labels in itertools.product(range(6), repeat=k):
        x = np.ones(1, dtype=np.complex128)
        for label in labels:
            x = np.kron(x, STABILIZER_STATES[label])
        amp = np.vdot(x, w @ x)
        total += 1.0 - min(abs(amp) ** 2, 1.0)
    return math.sqrt(max(total / 6**k, 0.0))


def unitary_fidelity(u, v) -> float:
    """|tr(U^dag V)|^2 / d^2: global-phase-invariant process fidelity.

    Equals the squared overlap of the Choi states of U and V.
    """
    mu, mv = _pair(u, v)
    d = mu.shape[0]
    return min(abs(np.trace(mu.conj().T @ mv)) ** 2 / d**2, 1.0)
