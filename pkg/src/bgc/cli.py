"""Command-line entry points.

Subcommands: `sweep` (run a configured experiment and export results),
`learn-state` / `learn-unitary` (run one learner against a simulated
target), `metrics` (distances between two serialized circuits), and
`gen-net` (enumerate a candidate net into a manifest file).

Exit codes: 0 success, 2 configuration errors, 3 cap violations.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import harness, learners, metrics, nets, qcore
from .errors import (
    BgcError,
    ConfigError,
    EnumerationCapExceeded,
    SupportCapExceeded,
)


def _load_circuit(path: str) -> qcore.Circuit:
    with open(path) as fh:
        return qcore.circuit_from_text(fh.read())


def _cmd_sweep(args) -> int:
    cfg = harness.load_config(args.config)
    if args.workers is not None:
        cfg = harness.SweepConfig(
            **{**cfg.__dict__, "workers": args.workers}
        )
    result = harness.run_sweep(cfg)
    harness.export(result, args.out, fmt=args.format)
    for (g, threshold), n_star in sorted(result.n_star.items()):
        print(f"G={g} threshold={threshold}: N*={n_star}")
    print(f"wrote {args.out}")
    return 0


def _parse_placements(text: str) -> list[tuple[int, int]]:
    placements = []
    for token in text.split(","):
        a, _, b = token.partition(":")
        placements.append((int(a), int(b)))
    return placements


def _cmd_gen_net(args) -> int:
    rng = np.random.default_rng(np.random.SeedSequence([args.gate_set_seed]))
    gate_set = nets.GateSet.haar(args.gate_set_size, rng)
    placements = _parse_placements(args.placements)
    net = nets.enumerate_net(
        gate_set, [placements], len(placements), args.mode, args.n
    )
    nets.write_manifest(net, gate_set, [placements], args.out)
    print(f"wrote {args.out}: {net.size} candidates on {args.n} qubits")
    return 0


def _cmd_metrics(args) -> int:
    circuit_a = _load_circuit(args.a)
    circuit_b = _load_circuit(args.b)
    subset = sorted(set(circuit_a.support()) | set(circuit_b.support()))
    if not subset:
        subset = [0, 1]
    u = qcore.circuit_unitary(circuit_a, subset)
    v = qcore.circuit_unitary(circuit_b, subset)
    print(f"subset {subset}")
    print(f"davg      {metrics.davg(u, v):.12g}")
    print(f"df_prime  {metrics.df_prime(u, v):.12g}")
    print(f"d2_prime  {metrics.d2_prime(u, v):.12g}")
    print(f"diamond   {metrics.diamond_distance(u, v):.12g}")
    psi = qcore.run_circuit(circuit_a, qcore.PureState.zero(circuit_a.n_qubits))
    phi = qcore.run_circuit(circuit_b, qcore.PureState.zero(circuit_b.n_qubits))
    if circuit_a.n_qubits == circuit_b.n_qubits:
        print(f"trace     {metrics.trace_distance_pure(psi, phi):.12g}")
    return 0


def _cmd_learn_state(args) -> int:
    net, _digest, _configs = nets.read_manifest(args.net)
    target = _load_circuit(args.target)
    oracle = learners.StateSampleOracle(target)
    cfg = learners.LearnConfig(
        epsilon=args.epsilon,
        delta=args.delta,
        selection_rule=args.rule,
        mom=None if args.snapshots is None else _mom_for(args.snapshots),
    )
    rng = np.random.default_rng(np.random.SeedSequence([args.seed]))
    region = tuple(range(net.n_qubits)) if args.region is None else tuple(
        int(q) for q in args.region.split(",")
    )
    index, circuit = learners.learn_state(oracle, net, cfg, rng, region=region)
    truth = qcore.run_circuit(target, qcore.PureState.zero(target.n_qubits))
    chosen = qcore.embed_in(net.cached[index], region, target.n_qubits)
    fid = metrics.fidelity_pure(truth, chosen)
    print(f"selected candidate {index} (samples used: {oracle.samples_used})")
    print(f"fidelity to target: {fid:.12g}")
    return 0


def _cmd_learn_unitary(args) -> int:
    net, _digest, _configs = nets.read_manifest(args.net)
    target = _load_circuit(args.target)
    oracle = learners.UnitaryQueryOracle(target)
    cfg = learners.LearnConfig(
        epsilon=args.epsilon,
        delta=args.delta,
        mom=None if args.snapshots is None else _mom_for(args.snapshots),
    )
    rng = np.random.default_rng(np.random.SeedSequence([args.seed]))
    region = tuple(range(net.n_qubits)) if args.region is None else tuple(
        int(q) for q in args.region.split(",")
    )
    learn = (
        learners.learn_unitary_choi
        if args.variant == "choi"
        else learners.learn_unitary_no_ancilla
    )
    index, _circuit = learn(oracle, net, cfg, rng, region=region)
    truth = oracle.dense(region)
    fid = metrics.unitary_fidelity(truth, net.cached[index])
    print(f"selected candidate {index} (queries used: {oracle.queries})")
    print(f"process fidelity to target: {fid:.12g}")
    return 0


def _mom_for(snapshots: int):
    from .shadows import MedianOfMeansConfig

    k = 5 if snapshots >= 5 else 1
    return MedianOfMeansConfig(N=max(1, snapshots // k), K=k)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bgc")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run a configured fidelity sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="sweep.csv")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("gen-net", help="enumerate a candidate net manifest")
    p.add_argument("--gate-set-seed", type=int, default=0)
    p.add_argument("--gate-set-size", type=int, default=2)
    p.add_argument("--placements", required=True, help="e.g. 0:1,1:2,2:3")
    p.add_argument("--mode", choices=("state", "unitary"), default="state")
    p.add_argument("--n", type=int, required=True, help="net register size")
    p.add_argument("--out", default="net.txt")
    p.set_defaults(func=_cmd_gen_net)

    p = sub.add_parser("metrics", help="distances between two circuits")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("learn-state", help="run the state learner once")
    p.add_argument("--target", required=True, help="target circuit file")
    p.add_argument("--net", required=True, help="net manifest file")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--rule", choices=("overlap_argmax", "helstrom_tournament"),
                   default="overlap_argmax")
    p.add_argument("--snapshots", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--region", default=None, help="comma-separated wires")
    p.set_defaults(func=_cmd_learn_state)

    p = sub.add_parser("learn-unitary", help="run a unitary learner once")
    p.add_argument("--target", required=True)
    p.add_argument("--net", required=True)
    p.add_argument("--variant", choices=("choi", "no_ancilla"), default="choi")
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--snapshots", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--region", default=None)
    p.set_defaults(func=_cmd_learn_unitary)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SupportCapExceeded, EnumerationCapExceeded) as exc:
        print(f"cap violation: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except BgcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
