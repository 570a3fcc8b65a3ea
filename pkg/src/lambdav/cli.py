"""Command line front end.

Exit codes: 0 success; 1 usage, parse, or suite failure; 2 a requested
observation ended at the error result; 3 a formula check found no
derivation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from .assignment import check_assign
from .formulae import parse_formula
from .reduction import reachable_results
from .stream import render, stream_eval
from .suites import SUITES, run_suites
from .surface import LVError, LVSyntaxError, parse_term
from .syntax import (
    DISCRETE,
    SymbolTable,
    Top,
    parse_sym_table,
    term_to_text,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_TOP = 2
EXIT_NO_DERIVATION = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # usage errors exit 1, not 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_FAIL)


class Style:
    def __init__(self, enabled: bool):
        self.ok = "\x1b[32m" if enabled else ""
        self.bad = "\x1b[31m" if enabled else ""
        self.dim = "\x1b[2m" if enabled else ""
        self.off = "\x1b[0m" if enabled else ""


def _want_color() -> bool:
    flag = os.environ.get("LAMBDAV_COLOR")
    if flag == "1":
        return True
    if flag == "0":
        return False
    return sys.stdout.isatty()


def _load_table(path: Optional[str]) -> SymbolTable:
    if path is None:
        return DISCRETE
    try:
        with open(path, encoding="utf-8") as fh:
            table = parse_sym_table(fh.read())
        table.validate()
        return table
    except OSError as ex:
        print(f"error: cannot read symbol table: {ex}", file=sys.stderr)
        raise SystemExit(EXIT_FAIL)
    except ValueError as ex:
        print(f"error: bad symbol table: {ex}", file=sys.stderr)
        raise SystemExit(EXIT_FAIL)


def _load_program(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as ex:
        print(f"error: cannot read program: {ex}", file=sys.stderr)
        raise SystemExit(EXIT_FAIL)
    try:
        return parse_term(text)
    except LVSyntaxError as ex:
        print(f"{path}:{ex.line}:{ex.col}: {ex.msg}", file=sys.stderr)
        raise SystemExit(EXIT_FAIL)
    except LVError as ex:
        print(f"{path}: {ex}", file=sys.stderr)
        raise SystemExit(EXIT_FAIL)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lambdav", description="parallel streaming lambda calculus")
    sub = p.add_subparsers(dest="cmd", required=True)

    obs = sub.add_parser("observe", help="run a program along the fuel axis")
    obs.add_argument("file")
    obs.add_argument("--max-fuel", type=int, default=32)
    obs.add_argument("--format", choices=("pretty", "json-lines"), default="pretty")
    obs.add_argument("--sym-table", default=None)

    exp = sub.add_parser("explore", help="enumerate reachable results by rewriting")
    exp.add_argument("file")
    exp.add_argument("--budget", type=int, default=6, help="rewrite steps to explore")
    exp.add_argument("--frontier-cap", type=int, default=10_000)
    exp.add_argument("--allow-truncate", action="store_true")
    exp.add_argument("--format", choices=("pretty", "json-lines"), default="pretty")
    exp.add_argument("--sym-table", default=None)

    chk = sub.add_parser("check", help="check a formula against a program")
    chk.add_argument("file")
    chk.add_argument("--formula", required=True)
    chk.add_argument("--depth", type=int, default=2, help="witness pool height")
    chk.add_argument("--max-fuel", type=int, default=None, help="probe fuel cap")
    chk.add_argument("--format", choices=("pretty", "json-lines"), default="pretty")
    chk.add_argument("--sym-table", default=None)

    tst = sub.add_parser("test", help="run the property suites")
    tst.add_argument("--suite", action="append", choices=sorted(SUITES), default=None)
    tst.add_argument("--seed", type=int, default=0)
    tst.add_argument("--depth", type=int, default=3, help="formula pool height")
    tst.add_argument("--sym-table", default=None)

    return p


def cmd_observe(args) -> int:
    table = _load_table(args.sym_table)
    e = _load_program(args.file)
    style = Style(_want_color())
    last = None
    prev = None
    for n in range(args.max_fuel + 1):
        last = stream_eval(e, n, table)
        shown = render(last, n, table)
        if args.format == "json-lines":
            print(json.dumps({"fuel": n, "result": shown}))
        elif shown != prev:
            # print only the fuels where the observation visibly grows
            print(f"{style.dim}fuel {n}:{style.off} {shown}")
        prev = shown
    return EXIT_TOP if isinstance(last, Top) else EXIT_OK


def cmd_explore(args) -> int:
    table = _load_table(args.sym_table)
    e = _load_program(args.file)
    style = Style(_want_color())
    results, ex = reachable_results(
        e, args.budget, table, frontier_cap=args.frontier_cap
    )
    if args.format == "json-lines":
        for t in results:
            print(json.dumps({"result": term_to_text(t)}))
        print(json.dumps({"states": len(ex.reached), "truncated": ex.truncated}))
    else:
        for t in results:
            print(f"result: {term_to_text(t)}")
        print(f"{style.dim}explored {len(ex.reached)} states{style.off}")
    if ex.truncated:
        print("warning: frontier truncated", file=sys.stderr)
        if not args.allow_truncate:
            return EXIT_FAIL
    return EXIT_OK


def cmd_check(args) -> int:
    table = _load_table(args.sym_table)
    e = _load_program(args.file)
    style = Style(_want_color())
    try:
        phi = parse_formula(args.formula)
    except ValueError as ex:
        print(f"error: bad formula: {ex}", file=sys.stderr)
        return EXIT_FAIL
    d = check_assign(e, phi, table, depth=args.depth, max_fuel=args.max_fuel)
    if args.format == "json-lines":
        payload = {"formula": args.formula.strip(), "holds": d is not None}
        if d is not None:
            payload["derivation"] = d.pretty()
        print(json.dumps(payload))
    else:
        if d is not None:
            print(f"{style.ok}holds{style.off}")
            print(d.pretty())
        else:
            print(f"{style.bad}no derivation found{style.off}")
    return EXIT_OK if d is not None else EXIT_NO_DERIVATION


def cmd_test(args) -> int:
    table = _load_table(args.sym_table)
    style = Style(_want_color())
    results = run_suites(args.suite, seed=args.seed, table=table, depth=args.depth)
    bad = False
    for r in results:
        if r.ok:
            print(
                f"{r.name}: {style.ok}ok{style.off} "
                f"({r.checks} checks, seed {args.seed})"
            )
        else:
            bad = True
            print(
                f"{r.name}: {style.bad}FAIL{style.off} "
                f"({len(r.failures)} failures, seed {args.seed})"
            )
            for msg in r.failures[:10]:
                print(f"  {msg}")
    return EXIT_FAIL if bad else EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.cmd == "observe":
        return cmd_observe(args)
    if args.cmd == "explore":
        return cmd_explore(args)
    if args.cmd == "check":
        return cmd_check(args)
    if args.cmd == "test":
        return cmd_test(args)
    return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
