"""Command-line driver: ``tfit check | run | dump``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from typing import Optional

from . import cfg as C
from . import constraints as K
from .checker import Analysis, CheckConfig, analyze, check_program, instantiate
from .diagnostics import diagnostics_for, render, render_warnings
from .errors import TfitError
from .frontend import load_program
from .oracle import interpret, value_from_json
from .smt import SOLVER_ENV, SolverNotFound, solver_command
from .symexec import render_summary

EXIT_OK = 0
EXIT_ERRORS = 1
EXIT_USAGE = 2


@dataclass
class RunConfig:
    inputs: list[str]
    entry: Optional[str] = None
    solver_cmd: Optional[str] = None
    timeout: float = 10.0
    max_examples: int = 3
    fmt: str = "text"
    dump_cfg: bool = False
    dump_summaries: bool = False
    dump_constraints: bool = False
    dump_smt: Optional[str] = None
    jobs: int = 1
    no_eliminate: bool = False

    def __post_init__(self) -> None:
        if not self.inputs:
            raise ValueError("at least one input file is required")
        if self.timeout <= 0:
            raise ValueError("--timeout must be positive")

    def check_config(self) -> CheckConfig:
        return CheckConfig(
            solver_cmd=self.solver_cmd, timeout=self.timeout, max_examples=self.max_examples,
            eliminate=not self.no_eliminate, dump_smt=self.dump_smt, jobs=self.jobs,
        )


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 2 with usage, as argparse does, but via our contract
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tfit", description="Static tensor shape checker.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("inputs", nargs="+", metavar="FILE", help=".tfit source files")
        p.add_argument("--entry", metavar="NAME", help="entry function (default: uncalled functions)")

    check = sub.add_parser("check", help="run the full analysis")
    common(check)
    check.add_argument("--solver-cmd", metavar="CMD",
                       help=f"SMT-LIB 2 solver command (default ${SOLVER_ENV} or 'z3 -in -smt2')")
    check.add_argument("--timeout", type=_positive_float, default=10.0, metavar="SECONDS")
    check.add_argument("--max-examples", type=_nonneg_int, default=3, metavar="N")
    check.add_argument("--format", choices=("text", "json"), default="text")
    check.add_argument("--dump-cfg", action="store_true")
    check.add_argument("--dump-summaries", action="store_true")
    check.add_argument("--dump-constraints", action="store_true")
    check.add_argument("--dump-smt", metavar="DIR")
    check.add_argument("--jobs", type=int, default=1, metavar="N")
    check.add_argument("--no-eliminate", action="store_true",
                       help="skip equality elimination before solving")

    run = sub.add_parser("run", help="execute with the reference interpreter")
    common(run)
    run.add_argument("--arg", action="append", default=[], metavar="JSON",
                     help="entry argument: int, bool, {\"shape\": [...]} or {\"tensor\": [...]}")

    dump = sub.add_parser("dump", help="print intermediate artifacts without solving")
    common(dump)
    dump.add_argument("--what", choices=("cfg", "loopfree", "summaries", "constraints"),
                      action="append", help="artifacts to print (default: all)")
    return parser


def _read_sources(paths: list[str]) -> list[tuple[str, str]]:
    out = []
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            out.append((path, fh.read()))
    return out


def _dump(analysis: Analysis, what: set[str], entries: list[str], budget: int) -> str:
    parts = []
    if "cfg" in what:
        parts += [C.dump_cfg(c) for c in analysis.cfgs.values()]
    if "loopfree" in what:
        parts += [C.dump_cfg(c) for c in analysis.loop_free.values()]
    if "summaries" in what:
        parts += [render_summary(s) for s in analysis.summaries.values()]
    if "constraints" in what:
        for e in entries:
            if e not in analysis.summaries:
                continue
            system = instantiate(analysis.summaries[e], analysis.summaries, budget)
            lines = [f"{e}:"] + [f"  {K.render_constraint(c)}" for c in system.constraints]
            parts.append("\n".join(lines) + "\n")
    return "\n".join(parts)


def _entries(analysis: Analysis, entry: Optional[str]) -> list[str]:
    if entry is None:
        return analysis.entries
    if entry not in analysis.program.functions:
        raise TfitError(f"no function named {entry!r}")
    return [entry]


def main(argv: Optional[list[str]] = None) -> int:
    logging.basicConfig(level=logging.ERROR, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        sources = _read_sources(args.inputs)
    except OSError as exc:
        print(f"tfit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        program = load_program(sources)
        if args.command == "run":
            return _run(program, args)
        analysis = analyze(program)
        analysis.entries = _entries(analysis, args.entry)
    except TfitError as exc:
        where = f"{exc.loc}: " if exc.loc else ""
        print(f"tfit: error: {where}{exc.message}", file=sys.stderr)
        return EXIT_USAGE
    for loc, message in analysis.warnings:
        print(f"warning: {loc}: {message}", file=sys.stderr)
    if args.command == "dump":
        what = set(args.what or ("cfg", "loopfree", "summaries", "constraints"))
        sys.stdout.write(_dump(analysis, what, analysis.entries, CheckConfig().budget))
        return EXIT_OK
    return _check(analysis, dict(sources), args)


def _run(program, args) -> int:
    entry = args.entry or "main"
    if entry not in program.functions:
        print(f"tfit: error: no function named {entry!r}", file=sys.stderr)
        return EXIT_USAGE
    try:
        values = [value_from_json(json.loads(a)) for a in args.arg]
        result = interpret(program, entry, values)
    except (ValueError, KeyError) as exc:
        print(f"tfit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if result.status == "ok":
        print("ok" if result.value is None else f"ok: {result.value!r}")
        return EXIT_OK
    print(f"{result.status} at {result.loc}: {result.message}")
    return EXIT_ERRORS if result.failed else EXIT_USAGE


def _check(analysis: Analysis, sources: dict[str, str], args) -> int:
    try:
        config = RunConfig(
            inputs=args.inputs, entry=args.entry, solver_cmd=args.solver_cmd, timeout=args.timeout,
            max_examples=args.max_examples, fmt=args.format, dump_cfg=args.dump_cfg,
            dump_summaries=args.dump_summaries, dump_constraints=args.dump_constraints,
            dump_smt=args.dump_smt, jobs=args.jobs, no_eliminate=args.no_eliminate,
        )
        solver_command(config.solver_cmd)
    except SolverNotFound as exc:
        print(f"tfit: error: {exc.message}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"tfit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    what = {name for name, on in (("cfg", config.dump_cfg), ("summaries", config.dump_summaries),
                                  ("constraints", config.dump_constraints)) if on}
    if what:
        if config.dump_cfg:
            what.add("loopfree")
        sys.stderr.write(_dump(analysis, what, analysis.entries, CheckConfig().budget))
    try:
        reports = check_program(analysis, config.check_config())
    except SolverNotFound as exc:
        print(f"tfit: error: {exc.message}", file=sys.stderr)
        return EXIT_USAGE
    diags = [d for r in reports for d in diagnostics_for(r)]
    sys.stdout.write(render(diags, config.fmt, sources=sources, reports=reports,
                            program=analysis.program))
    if config.fmt == "text":
        sys.stderr.write(render_warnings(diags))
    if any(r.contradictions for r in reports):
        return EXIT_ERRORS
    if any(q.status == "solver-error" for r in reports for q in r.queries):
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
