"""Command-line interface.

    qaproute route --circuits 'suites/*.qasm' --device grid:4x4 \
        --router qap-greedy --mapping trivial --passes 3 --out results.csv
"""

from __future__ import annotations

import argparse
import sys

from .bench import ExperimentSpec, export, run_experiment, summarize
from .routers import (
    BASIC_SWAP,
    QAP_GREEDY,
    SABRE_BASIC,
    SABRE_LOOKAHEAD,
    RouterConfig,
)

_ROUTER_NAMES = ("basic", "sabre", "sabre-la", "qap-greedy", "nn")


def _router_entry(name: str, args) -> tuple:
    if name == "basic":
        return (name, RouterConfig(kind=BASIC_SWAP), args.passes)
    if name == "sabre":
        return (name, RouterConfig(kind=SABRE_BASIC), args.passes)
    if name == "sabre-la":
        return (name, RouterConfig(kind=SABRE_LOOKAHEAD, omega=args.omega),
                args.passes)
    if name == "qap-greedy":
        return (name, RouterConfig(kind=QAP_GREEDY, horizon=args.horizon,
                                   gamma=args.gamma), args.passes)
    if name == "nn":
        return (name, "nn", 1)
    raise ValueError(f"unknown router {name!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qaproute")
    sub = parser.add_subparsers(dest="command", required=True)

    rt = sub.add_parser("route", help="route a circuit suite and report CNOTs")
    rt.add_argument("--circuits", required=True,
                    help="glob of .qasm/.json files, or gen:N:COUNT:SEED")
    rt.add_argument("--device", required=True,
                    help="grid:RxC, tokyo:N, or a device JSON file")
    rt.add_argument("--router", action="append", required=True,
                    help=f"one of {'|'.join(_ROUTER_NAMES)}; repeat or "
                         "comma-separate for several")
    rt.add_argument("--mapping", default="trivial",
                    help="trivial or random:K:SEED")
    rt.add_argument("--passes", type=int, default=1, choices=(1, 3),
                    help="1 = single forward pass, 3 = forward-backward-forward")
    rt.add_argument("--horizon", type=int, default=8)
    rt.add_argument("--gamma", type=float, default=0.7)
    rt.add_argument("--omega", type=float, default=0.5)
    rt.add_argument("--tmax", type=int, default=1000)
    rt.add_argument("--out", default=None, help="row output path (.csv/.json)")
    rt.add_argument("--summarize", default=None,
                    choices=("router", "gate-range", "circuit-family"),
                    help="print a grouped summary to stdout")
    rt.add_argument("--format", default=None, choices=("csv", "json"),
                    help="row format; default follows --out extension")
    rt.add_argument("--nn-checkpoint", default=None,
                    help="encoder checkpoint for --router nn")
    rt.add_argument("--nn-seed", type=int, default=0,
                    help="random-parameter seed when no checkpoint is given")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    names = [n for chunk in args.router for n in chunk.split(",") if n]
    for name in names:
        if name not in _ROUTER_NAMES:
            print(f"error: unknown router {name!r}", file=sys.stderr)
            return 2
    spec = ExperimentSpec(
        circuits=args.circuits,
        device=args.device,
        routers=tuple(_router_entry(n, args) for n in names),
        mapping=args.mapping,
        t_max=args.tmax,
        out=args.out,
        nn_checkpoint=args.nn_checkpoint,
        nn_seed=args.nn_seed,
    )
    fmt = args.format or ("json" if (args.out or "").endswith(".json") else "csv")
    if args.out and fmt == "csv":
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            rows = run_experiment(spec, out_stream=fh)
    else:
        rows = run_experiment(spec)
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(export(rows, fmt))
    if not args.out:
        sys.stdout.write(export(rows, fmt))
    if args.summarize:
        for line in summarize(rows, args.summarize):
            print(line)
    truncated = sum(r.truncated for r in rows)
    print(f"routed {len(rows)} rows ({truncated} truncated)", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
