"""Command-line front end for the demoflow pipeline.

Subcommands:

* ``validate``    — structural soundness of a transaction network file
* ``generate``    — compile a network into a BPMN collaboration file
* ``analyze``     — audit a BPMN model for transaction-act coverage
* ``simulate``    — token-play a compiled network, exhaustively or randomly
* ``conformance`` — compare a compiled network's traces with the engine

Exit codes: 0 success, 1 validation or conformance failure, 2 usage or I/O
error.  All diagnostics go to stderr; artifacts are written only to the files
named on the command line, and identical invocations over identical inputs
produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .compiler import DetailLevel, compile_network
from .coverage import classify_acts, render_matrix
from .engine import Bounds
from .network import Severity, load_network, validate_network
from .simulator import (
    SimulationError,
    Verdict,
    check_network_conformance,
    simulate_exhaustive,
    simulate_random,
)
from .xmlio import parse_model, serialize_model

_LEVELS = {level.value: level for level in DetailLevel}


def _fail(violations) -> bool:
    """Print violations to stderr; return True when any is an error."""
    failed = False
    for violation in violations:
        print(violation, file=sys.stderr)
        failed = failed or violation.severity is Severity.ERROR
    return failed


def _load_json(path: str):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def cmd_validate(args) -> int:
    net = load_network(args.network)
    if _fail(validate_network(net)):
        return 1
    print(
        f"{args.network}: valid network with {len(net.transactions)} transaction(s)",
        file=sys.stderr,
    )
    return 0


def cmd_generate(args) -> int:
    net = load_network(args.network)
    if _fail(validate_network(net)):
        return 1
    model = compile_network(net, _LEVELS[args.level])
    Path(args.out).write_bytes(serialize_model(model, layout=args.layout_grid))
    return 0


def cmd_analyze(args) -> int:
    model = parse_model(Path(args.model).read_bytes())
    net = load_network(args.network)
    mapping = _load_json(args.mapping) if args.mapping else None
    annotations = _load_json(args.annotations) if args.annotations else None
    matrix = classify_acts(
        net,
        model,
        mapping=mapping,
        annotations=annotations,
        heuristic_names=args.heuristic_names,
    )
    for warning in matrix.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    report = render_matrix(matrix, fmt=args.format)
    Path(args.report).write_bytes(report.encode("utf-8"))
    return 0


def _bounds(args) -> Bounds:
    return Bounds(
        rerequest=args.max_rerequest,
        redeclare=args.max_redeclare,
        revocations=args.max_revocations,
    )


def cmd_simulate(args) -> int:
    net = load_network(args.network)
    if _fail(validate_network(net)):
        return 1
    model = compile_network(net, _LEVELS[args.level])
    if args.random:
        traces = simulate_random(model, _bounds(args), seed=args.seed, runs=args.runs)
        lines = [trace.to_json() for trace in traces]
        print(
            f"{len(lines)} run(s), {len(set(lines))} distinct trace(s)",
            file=sys.stderr,
        )
    else:
        result = simulate_exhaustive(model, _bounds(args))
        lines = sorted(trace.to_json() for trace in result.traces)
        print(
            f"{len(lines)} trace(s) over {result.states} explored state(s)",
            file=sys.stderr,
        )
    if args.traces:
        payload = "".join(line + "\n" for line in lines)
        Path(args.traces).write_bytes(payload.encode("utf-8"))
    return 0


def cmd_conformance(args) -> int:
    net = load_network(args.network)
    if _fail(validate_network(net)):
        return 1
    report = check_network_conformance(net, _LEVELS[args.level])
    print(report.summary(), file=sys.stderr)
    return 0 if report.verdict is Verdict.CONFORMANT else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="demoflow",
        description="Compile, audit and simulate DEMO transaction networks as BPMN collaborations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    levels = [level.value for level in DetailLevel]

    p = sub.add_parser("validate", help="check a transaction network file")
    p.add_argument("network", help="transaction network JSON file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("generate", help="compile a network into BPMN")
    p.add_argument("network", help="transaction network JSON file")
    p.add_argument("--level", required=True, choices=levels, help="detail level")
    p.add_argument("--out", required=True, help="output BPMN file")
    p.add_argument(
        "--layout-grid",
        action="store_true",
        help="embed a simple grid diagram layout",
    )
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("analyze", help="audit a BPMN model for act coverage")
    p.add_argument("model", help="BPMN model file")
    p.add_argument("--network", required=True, help="transaction network JSON file")
    p.add_argument("--mapping", help="explicit act-to-node mapping JSON file")
    p.add_argument("--annotations", help="implicit-act annotation JSON file")
    p.add_argument(
        "--heuristic-names",
        action="store_true",
        help="also match acts by node naming conventions",
    )
    p.add_argument("--report", required=True, help="output report file")
    p.add_argument("--format", choices=["csv", "text"], default="csv")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="token-play a compiled network")
    p.add_argument("network", help="transaction network JSON file")
    p.add_argument("--level", required=True, choices=levels, help="detail level")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument(
        "--exhaustive", action="store_true", help="explore every interleaving (default)"
    )
    mode.add_argument("--random", action="store_true", help="seeded random walks")
    p.add_argument("--seed", type=int, default=0, help="random mode seed")
    p.add_argument("--runs", type=int, default=100, help="random mode run count")
    p.add_argument("--max-rerequest", type=int, default=1)
    p.add_argument("--max-redeclare", type=int, default=1)
    p.add_argument("--max-revocations", type=int, default=1)
    p.add_argument("--traces", help="write traces to this JSON-lines file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("conformance", help="check a network against the engine")
    p.add_argument("network", help="transaction network JSON file")
    p.add_argument("--level", required=True, choices=levels, help="detail level")
    p.set_defaults(func=cmd_conformance)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, SimulationError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
