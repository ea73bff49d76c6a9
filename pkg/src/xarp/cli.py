"""Command line entry points: serve, sim, inspect.

Exit codes: 0 success, 1 usage error, 2 runtime failure.  XARP_BIND and
XARP_LOG_DIR override the built-in defaults; explicit flags win over both.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import os
import sys
from pathlib import Path

from .gateway import GatewayConfig, MODES, serve_blocking
from .sim_client import ScriptValidationError, load_script, run_scripted_client
from .transcript import read_jsonl, validate_entries

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def build_parser() -> _Parser:
    parser = _Parser(prog="xarp", description="Remote XR tool platform")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the gateway service")
    serve.add_argument(
        "--bind",
        default=os.environ.get("XARP_BIND", "127.0.0.1:8080"),
        help="host:port to listen on",
    )
    serve.add_argument("--mode", choices=MODES, default="echo")
    serve.add_argument(
        "--log-dir",
        default=os.environ.get("XARP_LOG_DIR", "transcripts"),
        help="directory for session transcript files",
    )
    serve.add_argument(
        "--web",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="serve the web client at /",
    )

    sim = sub.add_parser("sim", help="run a scripted simulator client")
    sim.add_argument("--url", required=True, help="ws://host:port/ws")
    sim.add_argument("--script", required=True, help="path to a JSON script file")
    sim.add_argument("--seed", type=int, default=None, help="reorder shuffle seed")
    sim.add_argument(
        "--reorder-batch",
        type=int,
        default=None,
        help="buffer N responses and emit them in seeded-shuffled order",
    )
    sim.add_argument(
        "--out", default="sim-transcript.jsonl", help="transcript output path"
    )

    inspect = sub.add_parser("inspect", help="validate and pretty-print a transcript")
    inspect.add_argument("transcript", help="path to a .jsonl transcript")
    return parser


def _cmd_serve(args: argparse.Namespace) -> int:
    try:
        config = GatewayConfig(
            bind=args.bind,
            mode=args.mode,
            log_dir=Path(args.log_dir),
            serve_web=args.web,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    try:
        serve_blocking(config)
    except KeyboardInterrupt:
        pass
    except (OSError, SystemExit) as exc:
        print(f"serve failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_sim(args: argparse.Namespace) -> int:
    try:
        script = load_script(args.script)
    except FileNotFoundError:
        print(f"script not found: {args.script}", file=sys.stderr)
        return EXIT_RUNTIME
    except ScriptValidationError as exc:
        print("invalid script:", file=sys.stderr)
        for violation in exc.violations:
            print(f"  - {violation}", file=sys.stderr)
        return EXIT_RUNTIME
    try:
        transcript = asyncio.run(
            run_scripted_client(
                args.url, script, seed=args.seed, reorder_batch=args.reorder_batch
            )
        )
    except Exception as exc:
        print(f"sim run failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    out = transcript.write(args.out)
    print(out)
    return EXIT_OK


def _cmd_inspect(args: argparse.Namespace) -> int:
    path = Path(args.transcript)
    if not path.exists():
        print(f"file not found: {path}", file=sys.stderr)
        return EXIT_RUNTIME
    try:
        entries = read_jsonl(path)
    except (json.JSONDecodeError, KeyError) as exc:
        print(f"unreadable transcript: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    for i, entry in enumerate(entries):
        if entry.envelope is not None:
            kind = entry.envelope.get("kind", "?")
            detail = json.dumps(entry.envelope.get("payload", {}))[:100]
            ident = entry.envelope.get("id", "")
            ident = f" id={ident}" if ident else ""
            print(f"{i:4d} {entry.ts_unix_ms} {entry.direction:>8} {kind}{ident} {detail}")
        elif entry.note is not None:
            print(f"{i:4d} {entry.ts_unix_ms} {entry.direction:>8} # {entry.note}")
        else:
            print(f"{i:4d} {entry.ts_unix_ms} {entry.direction:>8} !raw {entry.raw!r}")

    problems = validate_entries(entries)
    if problems:
        print(f"\n{len(problems)} problem(s):", file=sys.stderr)
        for problem in problems:
            print(f"  - {problem}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"\nok: {len(entries)} entries")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("XARP_LOG_LEVEL", "INFO"),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "serve":
            return _cmd_serve(args)
        if args.command == "sim":
            return _cmd_sim(args)
        return _cmd_inspect(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
