"""Experiment harness: fidelity-vs-sample-size sweeps over gate count.

Reproduces the linear-in-G sample-complexity numerics at desk scale: per
trial, sample a target circuit from a small discrete gate set on known
placements, enumerate the candidate net sharing those placements, collect
the shadow pool once at the maximal sample size, and sub-sample it for
every smaller size.  Trials are independently seeded, so results are
bit-identical across runs and worker counts.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, SupportCapExceeded
from .metrics import choi_state
from .nets import GateSet
from .qcore import (
    SUPPORT_CAP,
    Circuit,
    GatePlacement,
    PureState,
    _FLOAT_FMT,
    full_vector,
    haar_batch,
    run_circuit,
)
from .shadows import single_shot_values

CASES = ("concentrated", "random_placement")
MODES = ("state", "unitary_choi", "unitary_no_ancilla")


@dataclass(frozen=True)
class SweepConfig:
    case: str
    n_total: int
    g_range: tuple[int, ...]
    n_range: tuple[int, ...]
    trials: int
    gate_set_seed: int
    trial_seed_base: int
    fidelity_thresholds: tuple[float, ...] = (0.999,)
    mode: str = "state"
    gate_set_size: int = 2
    support_cap: int = SUPPORT_CAP
    workers: int = 1
    selection_delta: float = 0.05   # failure budget feeding the learner's K

    def __post_init__(self):
        if self.case not in CASES:
            raise ConfigError(f"case must be one of {CASES}, got {self.case!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.g_range or not self.n_range:
            raise ConfigError("g_range and n_range must be nonempty")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.n_total < 4:
            raise ConfigError("n_total must be at least 4")
        if self.gate_set_size < 1:
            raise ConfigError("gate_set_size must be at least 1")
        if self.support_cap > SUPPORT_CAP:
            raise ConfigError(f"support_cap may not exceed {SUPPORT_CAP}")
        if any(g < 1 for g in self.g_range) or any(n < 1 for n in self.n_range):
            raise ConfigError("g_range and n_range entries must be positive")
        if not 0.0 < self.selection_delta < 1.0:
            raise ConfigError("selection_delta must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class SweepResult:
    config: SweepConfig
    records: tuple[tuple[int, int, int, float], ...]   # (G, N, trial, fidelity)
    mean: dict = field(default_factory=dict)           # (G, N) -> mean fidelity
    median: dict = field(default_factory=dict)         # (G, N) -> median fidelity
    n_star: dict = field(default_factory=dict)         # (G, threshold) -> N or None


# ---------------------------------------------------------------------------
# config file parsing: flat `key = value` lines with # comments

_RANGE_KEYS = ("g_range", "n_range")
_INT_KEYS = (
    "n_total",
    "trials",
    "gate_set_seed",
    "trial_seed_base",
    "gate_set_size",
    "support_cap",
    "workers",
)


def parse_config_text(text: str) -> SweepConfig:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key in ("case", "mode"):
            values[key] = value
        elif key in _INT_KEYS:
            values[key] = _parse_int(key, value)
        elif key in _RANGE_KEYS:
            values[key] = _parse_range(key, value)
        elif key == "fidelity_thresholds":
            try:
                values[key] = tuple(float(v) for v in value.split(","))
            except ValueError as exc:
                raise ConfigError(f"bad float list for {key}: {value!r}") from exc
        else:
            raise ConfigError(f"unknown config key {key!r}")
    required = ("case", "n_total", "g_range", "n_range", "trials",
                "gate_set_seed", "trial_seed_base")
    missing = [k for k in required if k not in values]
    if missing:
        raise ConfigError(f"missing config keys: {', '.join(missing)}")
    return SweepConfig(**values)


def _parse_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError as exc:
        raise ConfigError(f"bad integer for {key}: {value!r}") from exc


def _parse_range(key: str, value: str) -> tuple[int, ...]:
    try:
        if ".." in value:
            lo, hi = value.split("..")
            return tuple(range(int(lo), int(hi) + 1))
        return tuple(int(v) for v in value.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad range for {key}: {value!r}") from exc


def load_config(path) -> SweepConfig:
    with open(path) as fh:
        return parse_config_text(fh.read())


# ---------------------------------------------------------------------------
# target sampling

_LINE_REGION_A = 4   # Case (a): gates concentrated on the first 4 qubits


def _sample_placements(cfg: SweepConfig, num_gates: int, rng: np.random.Generator):
    """Random neighboring pairs on the 1-D line, resampled under the cap."""
    if cfg.case == "concentrated":
        span = _LINE_REGION_A
        starts = rng.integers(0, span - 1, size=num_gates)
        return [(int(s), int(s) + 1) for s in starts]
    while True:
        starts = rng.integers(0, cfg.n_total - 1, size=num_gates)
        placements = [(int(s), int(s) + 1) for s in starts]
        support = set()
        for a, b in placements:
            support.update((a, b))
        if len(support) <= cfg.support_cap:
            return placements


def _clusters(placements) -> list[list[int]]:
    """Connected components of gate slots under shared-qubit adjacency."""
    parent = list(range(len(placements)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    qubit_owner: dict[int, int] = {}
    for slot, (a, b) in enumerate(placements):
        for q in (a, b):
            if q in qubit_owner:
                ra, rb = find(qubit_owner[q]), find(slot)
                parent[ra] = rb
            else:
                qubit_owner[q] = slot
    groups: dict[int, list[int]] = {}
    for slot in range(len(placements)):
        groups.setdefault(find(slot), []).append(slot)
    return [sorted(g) for g in groups.values()]


def _enumerate_vectors(gate_matrices, placements, region) -> np.ndarray:
    """g^G stacked output state vectors over the region (product order)."""
    position = {q: i for i, q in enumerate(region)}
    k = len(region)
    dim = 2**k
    batch = np.zeros((1, dim), dtype=np.complex128)
    batch[0, 0] = 1.0
    for a, b in placements:
        embedded = [
            _embed(g, position[a], position[b], k) for g in gate_matrices
        ]
        batch = np.stack([batch @ m.T for m in embedded], axis=1).reshape(-1, dim)
    return batch


def _enumerate_unitaries(gate_matrices, placements, region) -> np.ndarray:
    """g^G stacked circuit unitaries over the region (product order)."""
    position = {q: i for i, q in enumerate(region)}
    k = len(region)
    dim = 2**k
    batch = np.eye(dim, dtype=np.complex128)[None, :, :]
    for a, b in placements:
        embedded = [
            _embed(g, position[a], position[b], k) for g in gate_matrices
        ]
        batch = np.stack([m @ batch for m in embedded], axis=1).reshape(
            -1, dim, dim
        )
    return batch


def _embed(gate: np.ndarray, q1: int, q2: int, k: int) -> np.ndarray:
    dim = 2**k
    tensor = np.eye(dim, dtype=np.complex128).reshape((2,) * k + (dim,))
    out = np.tensordot(gate.reshape(2, 2, 2, 2), tensor, axes=([2, 3], [q1, q2]))
    return np.moveaxis(out, [0, 1], [q1, q2]).reshape(dim, dim)


def _assignment_index(assignment: np.ndarray, g: int) -> int:
    index = 0
    for a in assignment:
        index = index * g + int(a)
    return index


# ---------------------------------------------------------------------------
# one trial

_CASE_CODE = {name: i for i, name in enumerate(CASES)}
_MODE_CODE = {name: i for i, name in enumerate(MODES)}


def _trial_seed(cfg: SweepConfig, num_gates: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(
        [
            cfg.trial_seed_base,
            _CASE_CODE[cfg.case],
            _MODE_CODE[cfg.mode],
            num_gates,
            trial,
        ]
    )


def run_trial(cfg: SweepConfig, gate_matrices, num_gates: int, trial: int) -> np.ndarray:
    """Fidelity achieved at every N in cfg.n_range for one sampled target."""
    seed = _trial_seed(cfg, num_gates, trial)
    setup_ss, shadow_ss = seed.spawn(2)
    rng = np.random.default_rng(setup_ss)
    placements = _sample_placements(cfg, num_gates, rng)
    g = len(gate_matrices)
    assignment = rng.integers(0, g, size=num_gates)
    max_n = max(cfg.n_range)

    if cfg.mode == "state":
        region = sorted({q for pair in placements for q in pair})
        vectors = _enumerate_vectors(gate_matrices, placements, region)
        target_index = _assignment_index(assignment, g)
        target = vectors[target_index]
        exact_fid = np.minimum(np.abs(vectors.conj() @ target) ** 2, 1.0)
        values = _shadow_values_for_vectors(target, vectors, max_n, shadow_ss)
        batches = _derived_batches(vectors.shape[0], cfg.selection_delta)
        return _subsampled_fidelities(values, exact_fid, cfg.n_range, batches)

    # Unitary modes: placements are known, so the target factorizes over
    # placement clusters; each cluster is learned independently and the
    # process fidelities multiply.
    slot_clusters = _clusters(placements)
    cluster_seqs = shadow_ss.spawn(len(slot_clusters))
    fid = np.ones(len(cfg.n_range))
    for slots, cluster_ss in zip(slot_clusters, cluster_seqs):
        sub_placements = [placements[s] for s in slots]
        region = sorted({q for pair in sub_placements for q in pair})
        sub_assignment = assignment[slots]
        unitaries = _enumerate_unitaries(gate_matrices, sub_placements, region)
        target_index = _assignment_index(sub_assignment, g)
        target_u = unitaries[target_index]
        d = target_u.shape[0]
        exact_fid = np.minimum(
            np.abs(np.einsum("cji,ji->c", unitaries.conj(), target_u)) ** 2 / d**2,
            1.0,
        )
        if cfg.mode == "unitary_choi":
            choi_vecs = unitaries.reshape(unitaries.shape[0], -1) / math.sqrt(d)
            target_vec = choi_vecs[target_index]
            values = _shadow_values_for_vectors(
                target_vec, choi_vecs, max_n, cluster_ss
            )
        else:
            values = _no_ancilla_values(target_u, unitaries, max_n, cluster_ss)
        batches = _derived_batches(unitaries.shape[0], cfg.selection_delta)
        fid = fid * _subsampled_fidelities(values, exact_fid, cfg.n_range, batches)
    return fid


def _shadow_values_for_vectors(
    target: np.ndarray, candidates: np.ndarray, count: int, ss: np.random.SeedSequence
) -> np.ndarray:
    """Single-shot overlap estimates of each candidate projector, one row
    per snapshot, with per-index derived seeds.

    Only the outcome row <b|C of each rotation survives into the estimates,
    so rotations are generated in chunks and discarded.
    """
    dim = target.size
    generators = [np.random.default_rng(s) for s in ss.spawn(count)]
    rows = np.empty((count, dim), dtype=np.complex128)
    chunk = max(1, (1 << 24) // (dim * dim))
    for start in range(0, count, chunk):
        stop = min(start + chunk, count)
        rotations = np.empty((stop - start, dim, dim), dtype=np.complex128)
        for i, gen in enumerate(generators[start:stop]):
            gin = gen.standard_normal((dim, dim)) + 1j * gen.standard_normal((dim, dim))
            q, r = np.linalg.qr(gin)
            diag = np.diagonal(r)
            rotations[i] = q * (diag / np.abs(diag))[None, :]
        rotated = rotations @ target
        probs = np.abs(rotated) ** 2
        probs /= probs.sum(axis=1, keepdims=True)
        cumulative = np.cumsum(probs, axis=1)
        for i, gen in enumerate(generators[start:stop]):
            b = min(int((gen.random() > cumulative[i]).sum()), dim - 1)
            rows[start + i] = rotations[i, b, :]
    amps = rows @ candidates.T
    return (dim + 1) * np.abs(amps) ** 2 - 1.0


def _no_ancilla_values(
    target_u: np.ndarray, candidates: np.ndarray, count: int, ss: np.random.SeedSequence
) -> np.ndarray:
    """Single-shot values for the ancilla-free estimator on random
    stabilizer-product inputs."""
    from .qcore import STABILIZER_STATES

    dim = target_u.shape[0]
    k = dim.bit_length() - 1
    generators = [np.random.default_rng(s) for s in ss.spawn(count)]
    values = np.empty((count, candidates.shape[0]))
    for i, gen in enumerate(generators):
        labels = gen.integers(0, 6, size=k)
        x = np.ones(1, dtype=np.complex128)
        for label in labels:
            x = np.kron(x, STABILIZER_STATES[int(label)])
        out = target_u @ x
        gin = gen.standard_normal((dim, dim)) + 1j * gen.standard_normal((dim, dim))
        q, r = np.linalg.qr(gin)
        diag = np.diagonal(r)
        rotation = q * (diag / np.abs(diag))[None, :]
        rotated = rotation @ out
        probs = np.abs(rotated) ** 2
        probs /= probs.sum()
        b = min(int((gen.random() > np.cumsum(probs)).sum()), dim - 1)
        amps = (candidates @ x) @ rotation[b, :]
        values[i] = (dim + 1) * np.abs(amps) ** 2 - 1.0
    return values


def _derived_batches(candidates: int, delta: float) -> int:
    """The learner's median-of-means batch count K = 2 ln(2m/delta), odd."""
    k = max(1, math.ceil(2.0 * math.log(2.0 * candidates / delta)))
    return k + 1 if k % 2 == 0 else k


def _subsampled_fidelities(
    values: np.ndarray, exact_fid: np.ndarray, n_range: Sequence[int], batches: int
) -> np.ndarray:
    """Evaluate the learner at every sample size by subsampling the pool.

    At sample size N the learner sees the first N single-shot values and
    selects by argmax of median-of-means with K = min(batches, N) (odd);
    any remainder of the division into K equal batches is left unused,
    matching the estimator's fixed-layout contract.
    """
    prefixed = np.vstack([np.zeros((1, values.shape[1])), np.cumsum(values, axis=0)])
    out = np.empty(len(n_range))
    for col, n in enumerate(n_range):
        k = min(batches, n)
        if k % 2 == 0:
            k -= 1
        size = n // k
        edges = np.arange(k + 1) * size
        means = (prefixed[edges[1:]] - prefixed[edges[:-1]]) / size
        estimates = np.median(means, axis=0)
        out[col] = exact_fid[int(np.argmax(estimates))]
    return out


# ---------------------------------------------------------------------------
# sweep driver

_pool_config: SweepConfig | None = None
_pool_gates = None


def _pool_init(cfg: SweepConfig, gates):
    global _pool_config, _pool_gates
    _pool_config = cfg
    _pool_gates = gates


def _pool_task(args):
    num_gates, trial = args
    return num_gates, trial, run_trial(_pool_config, _pool_gates, num_gates, trial)


def effective_workers(requested: int) -> int:
    cap = os.environ.get("BGC_THREADS", "")
    workers = max(1, requested)
    if cap.strip():
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError as exc:
            raise ConfigError(f"BGC_THREADS must be an integer, got {cap!r}") from exc
    return workers


def make_gate_set(cfg: SweepConfig) -> GateSet:
    rng = np.random.default_rng(np.random.SeedSequence([cfg.gate_set_seed]))
    return GateSet.haar(cfg.gate_set_size, rng)


def run_sweep(cfg: SweepConfig) -> SweepResult:
    """Run all (G, trial) cells; deterministic for fixed seeds regardless of
    worker count, since every trial derives its own seed sequence."""
    _validate_feasibility(cfg)
    gate_set = make_gate_set(cfg)
    gates = gate_set.gates
    tasks = [(g, t) for g in cfg.g_range for t in range(cfg.trials)]
    workers = effective_workers(cfg.workers)
    results: dict[tuple[int, int], np.ndarray] = {}
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_pool_init, initargs=(cfg, gates)
        ) as pool:
            for num_gates, trial, fid in pool.map(_pool_task, tasks, chunksize=16):
                results[(num_gates, trial)] = fid
    else:
        for num_gates, trial in tasks:
            results[(num_gates, trial)] = run_trial(cfg, gates, num_gates, trial)

    records = []
    for num_gates in cfg.g_range:
        for col, n in enumerate(cfg.n_range):
            for trial in range(cfg.trials):
                records.append(
                    (num_gates, n, trial, float(results[(num_gates, trial)][col]))
                )
    records.sort(key=lambda r: (r[0], r[1], r[2]))
    return summarize(cfg, tuple(records))


def _validate_feasibility(cfg: SweepConfig) -> None:
    max_g = max(cfg.g_range)
    if cfg.case == "concentrated" and _LINE_REGION_A > cfg.support_cap:
        raise SupportCapExceeded("concentrated region exceeds the support cap")
    if cfg.mode == "unitary_choi" and 2 * min(2 * max_g, cfg.support_cap) > 2 * SUPPORT_CAP:
        raise SupportCapExceeded("Choi doubling exceeds the hard support cap")
    if cfg.gate_set_size**max_g > 10**6:
        raise ConfigError("gate_set_size**max(G) exceeds the enumeration cap")


def summarize(cfg: SweepConfig, records) -> SweepResult:
    """Recompute per-(G,N) statistics and threshold curves from records."""
    by_cell: dict[tuple[int, int], list[float]] = {}
    for g, n, _trial, fid in records:
        by_cell.setdefault((g, n), []).append(fid)
    mean = {cell: float(np.mean(v)) for cell, v in by_cell.items()}
    median = {cell: float(np.median(v)) for cell, v in by_cell.items()}
    n_star = {}
    for g in cfg.g_range:
        for threshold in cfg.fidelity_thresholds:
            hit = None
            for n in sorted(cfg.n_range):
                if median.get((g, n), 0.0) >= threshold:
                    hit = n
                    break
            n_star[(g, threshold)] = hit
    return SweepResult(
        config=cfg, records=tuple(records), mean=mean, median=median, n_star=n_star
    )


# ---------------------------------------------------------------------------
# export / import

_REC_HEADER = "G,N,trial,fidelity"


def export(result: SweepResult, path: str, fmt: str = "csv") -> None:
    """Write records plus a companion summary; exact 17-digit round-trip."""
    if fmt == "csv":
        with open(path, "w") as fh:
            fh.write(_REC_HEADER + "\n")
            for g, n, trial, fid in result.records:
                fh.write(f"{g},{n},{trial},{_FLOAT_FMT.format(fid)}\n")
        with open(_summary_path(path), "w") as fh:
            fh.write("G,N,mean_fidelity,median_fidelity\n")
            for (g, n) in sorted(result.mean):
                fh.write(
                    f"{g},{n},{_FLOAT_FMT.format(result.mean[(g, n)])},"
                    f"{_FLOAT_FMT.format(result.median[(g, n)])}\n"
                )
            fh.write("\n")
            fh.write("G,threshold,n_star\n")
            for (g, threshold) in sorted(result.n_star):
                star = result.n_star[(g, threshold)]
                fh.write(
                    f"{g},{_FLOAT_FMT.format(threshold)},"
                    f"{-1 if star is None else star}\n"
                )
    elif fmt == "json":
        payload = {
            "records": [
                [g, n, trial, _FLOAT_FMT.format(fid)]
                for g, n, trial, fid in result.records
            ],
            "summary": [
                {
                    "G": g,
                    "N": n,
                    "mean": _FLOAT_FMT.format(result.mean[(g, n)]),
                    "median": _FLOAT_FMT.format(result.median[(g, n)]),
                }
                for (g, n) in sorted(result.mean)
            ],
            "curves": [
                {
                    "G": g,
                    "threshold": threshold,
                    "n_star": result.n_star[(g, threshold)],
                }
                for (g, threshold) in sorted(result.n_star)
            ],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)
    else:
        raise ConfigError(f"unknown export format {fmt!r}")


def _summary_path(path: str) -> str:
    return path + ".summary.csv"


def import_records(path: str, cfg: SweepConfig, fmt: str = "csv") -> SweepResult:
    """Rebuild a SweepResult from an exported records file."""
    records: list[tuple[int, int, int, float]] = []
    if fmt == "csv":
        with open(path) as fh:
            header = fh.readline().strip()
            if header != _REC_HEADER:
                raise ConfigError(f"unexpected records header {header!r}")
            for line in fh:
                g, n, trial, fid = line.strip().split(",")
                records.append((int(g), int(n), int(trial), float(fid)))
    elif fmt == "json":
        with open(path) as fh:
            payload = json.load(fh)
        for g, n, trial, fid in payload["records"]:
            records.append((int(g), int(n), int(trial), float(fid)))
    else:
        raise ConfigError(f"unknown import format {fmt!r}")
    return summarize(cfg, tuple(records))
