"""Operator entry points: serve an agent, pose goals, prove and check.

Exit codes for ``ask``: 0 answered, 2 refused, 3 connection failure,
4 protocol error.  ``prove`` exits 1 when the formula is unprovable and 2 on
bad input; ``check`` exits 1 for an invalid proof.  ``serve`` exits nonzero
when the knowledgebase or the listen address is unusable.
"""

from __future__ import annotations

import argparse
import asyncio
import sys
from pathlib import Path

from . import client as client_mod
from .agent import AgentCore, KBError, load_kb
from .formula import FormulaError, parse_annotated, print_formula
from .prover import DEFAULT_ENV, Unprovable, check_proof, format_proof, parse_proof, prove
from .server import AgentServer
from .validity import CapacityError


def _host_port(text: str) -> "tuple[str, int]":
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {text!r}")
    return host, int(port)


def _route(text: str) -> "tuple[str, str]":
    name, _, addr = text.partition("=")
    if not name or not addr:
        raise argparse.ArgumentTypeError(f"expected NAME=HOST:PORT, got {text!r}")
    _host_port(addr)
    return name, addr


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="choicelogic",
        description="agents that answer queries by playing proofs against each other")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="host an agent from a knowledgebase file")
    serve.add_argument("--kb", required=True, help="knowledgebase file")
    serve.add_argument("--listen", required=True, type=_host_port,
                       metavar="HOST:PORT")
    serve.add_argument("--route", action="append", default=[], type=_route,
                       metavar="NAME=HOST:PORT",
                       help="where to reach a resource agent (repeatable)")
    serve.add_argument("--trace", action="store_true",
                       help="stream per-session derivation steps to stderr")
    serve.add_argument("--console", type=_host_port, metavar="HOST:PORT",
                       help="also serve the browser console bridge here")
    serve.add_argument("--assets", type=Path,
                       help="static asset directory for the console "
                            "(default: bundled frontend build)")

    ask = sub.add_parser("ask", help="pose one query to an agent")
    ask.add_argument("agent", help="HOST:PORT or a name given via --route")
    ask.add_argument("query", help="query formula text")
    ask.add_argument("--route", action="append", default=[], type=_route,
                     metavar="NAME=HOST:PORT")
    ask.add_argument("--asker", default="user", help="identity to query under")
    ask.add_argument("--interactive", action="store_true",
                     help="prompt for choices the asker owns")
    ask.add_argument("--timeout", type=float, default=None,
                     help="give up after this many seconds")
    ask.add_argument("--trace", action="store_true",
                     help="narrate moves to stderr")

    prove_cmd = sub.add_parser("prove", help="print a numbered proof of a formula")
    prove_cmd.add_argument("formula")

    check = sub.add_parser("check", help="validate a serialized proof")
    check.add_argument("proof", type=Path, help="file in the numbered-list format")
    return parser


def _stderr(line: str):
    print(line, file=sys.stderr, flush=True)


def cmd_serve(args) -> int:
    try:
        kb = load_kb(Path(args.kb).read_text())
    except (OSError, KBError, FormulaError) as exc:
        _stderr(f"cannot load knowledgebase: {exc}")
        return 1
    if args.trace:
        core = AgentCore(kb, trace=lambda s: _stderr(f"[{kb.owner}] {s}"))
    else:
        core = AgentCore(kb)
    assets = args.assets
    if assets is None:
        bundled = Path(__file__).resolve().parents[2] / "frontend" / "static"
        assets = bundled if bundled.is_dir() else None
    server = AgentServer(core, routes=dict(args.route), assets=assets)

    async def run():
        host, port = args.listen
        try:
            await server.start(host, port, console=args.console)
        except OSError as exc:
            _stderr(f"cannot listen on {host}:{port}: {exc}")
            return 1
        _stderr(f"[{kb.owner}] serving on {host}:{port}"
                + (f", console on {args.console[0]}:{args.console[1]}"
                   if args.console else ""))
        try:
            await asyncio.Event().wait()
        except asyncio.CancelledError:
            pass
        return 0

    try:
        return asyncio.run(run()) or 0
    except KeyboardInterrupt:
        return 0


def cmd_ask(args) -> int:
    routes = dict(args.route)
    target = routes.get(args.agent, args.agent)
    try:
        host, port = _host_port(target)
    except argparse.ArgumentTypeError:
        _stderr(f"unknown agent {args.agent!r}; give HOST:PORT or --route")
        return client_mod.EXIT_CONNECT
    chooser = client_mod.terminal_chooser if args.interactive else None
    trace = _stderr if args.trace else None
    try:
        result = asyncio.run(client_mod.ask(
            host, port, args.query, asker=args.asker,
            chooser=chooser, timeout=args.timeout, trace=trace))
    except FormulaError as exc:
        _stderr(f"bad query: {exc}")
        return client_mod.EXIT_PROTOCOL
    if result.exit_code == client_mod.EXIT_ANSWERED:
        print(result.answer)
    else:
        _stderr(result.detail)
    return result.exit_code


def cmd_prove(args) -> int:
    try:
        formula = parse_annotated(args.formula, DEFAULT_ENV)
        outcome = prove(formula)
    except (FormulaError, CapacityError) as exc:
        _stderr(str(exc))
        return 2
    if isinstance(outcome, Unprovable):
        print("unprovable")
        for blocker in outcome.blockers:
            print(f"  blocked by: {print_formula(blocker)}")
        return 1
    sys.stdout.write(format_proof(outcome))
    return 0


def cmd_check(args) -> int:
    try:
        tree = parse_proof(args.proof.read_text())
    except (OSError, ValueError) as exc:
        _stderr(f"cannot read proof: {exc}")
        return 2
    result = check_proof(tree)
    if result:
        print("valid proof")
        return 0
    print(f"invalid proof at node {result.path}: {result.reason}")
    return 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"serve": cmd_serve, "ask": cmd_ask,
               "prove": cmd_prove, "check": cmd_check}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
