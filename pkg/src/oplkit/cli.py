"""Command-line interface: ``oplkit <command> ...``.

Exit codes: 0 success or accept, 1 reject or false, 2 precedence conflict,
64 usage error, 65 malformed input data, 70 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

from . import opa as opa_mod
from .errors import (AutomatonFormatError, ConflictError, EqualityCycleError, GrammarError,
                     GrammarSyntaxError, OplError, ParseError, PassLimitError)
from .grammar import Grammar, load_grammar
from .opm import PrecedenceMatrix, compute_opm, detect_partition, load_matrix
from .parallel import ParallelParser, benchmark
from .parser import OpParser
from .trees import to_json as tree_json, to_sexpr

EXIT_OK, EXIT_FALSE, EXIT_CONFLICT = 0, 1, 2
EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 64, 65, 70


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# loading

def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    if not os.path.isfile(path):
        raise UsageError(f"no such file: {path}")
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _grammar(path: str) -> Grammar:
    return load_grammar(_read(path))


def _automaton(path: str) -> opa_mod.Opa:
    return opa_mod.load_opa(_read(path))


def _looks_json(text: str) -> bool:
    return text.lstrip().startswith("{")


def _sentences(args) -> list[list[str]] | None:
    """Tokens from the positional input, or None for line-by-line stdin."""
    if args.input is not None:
        return [args.input.split()]
    if getattr(args, "input_file", None):
        return [line.split() for line in _read(args.input_file).splitlines()]
    return None


def _stdin_sentences():
    for line in sys.stdin:
        yield line.split()


def _emit(text: str, out: str | None):
    if out in (None, "-"):
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------------------
# renderers

def _render_tree(tree, fmt: str) -> str:
    if fmt == "json":
        return tree_json(tree)
    return to_sexpr(tree)


def _render_matrix(m: PrecedenceMatrix, fmt: str) -> str:
    if fmt == "json":
        return m.to_json()
    return m.to_text()


def _render_opa(a: opa_mod.Opa, fmt: str) -> str:
    if fmt == "dot":
        return opa_mod.to_dot(a)
    if fmt == "text":
        a = opa_mod.relabel(a)
        lines = [f"states: {' '.join(a.states)}",
                 f"initial: {' '.join(q for q in a.states if q in a.initial)}",
                 f"final: {' '.join(q for q in a.states if q in a.final)}"]
        obj = opa_mod.to_json_obj(a)
        for kind in ("push", "shift", "pop"):
            for e in obj[kind]:
                lines.append(f"{kind} {' '.join(e)}")
        return "\n".join(lines)
    return opa_mod.to_json(a)


def _diagnostic(exc: ParseError) -> str:
    pos = "" if exc.position is None else f" at {exc.position}"
    return f"reject ({exc.kind}{pos}): {exc}"


# ---------------------------------------------------------------------------
# commands

def cmd_opm(args) -> int:
    g = _grammar(args.grammar)
    m = compute_opm(g)
    _emit(_render_matrix(m, args.format), None)
    conflicts = m.conflicts()
    if conflicts:
        for a, b, rels in conflicts:
            names = ",".join(sorted(r.value for r in rels))
            print(f"conflict at ({a}, {b}): {names}", file=sys.stderr)
        return EXIT_CONFLICT
    return EXIT_OK


def _parse_loop(args, parse_one) -> int:
    batch = _sentences(args)
    lines = batch if batch is not None else _stdin_sentences()
    status = EXIT_OK
    for tokens in lines:
        try:
            tree, extra = parse_one(tokens)
        except ParseError as exc:
            print(_diagnostic(exc), file=sys.stderr)
            if batch is None or len(batch) > 1:
                print("reject")
            status = EXIT_FALSE
            continue
        print(_render_tree(tree, args.format))
        if extra is not None:
            print(json.dumps(extra, sort_keys=True))
    return status


def cmd_parse(args) -> int:
    p = OpParser(_grammar(args.grammar))
    return _parse_loop(args, lambda toks: (p.parse(toks), None))


def cmd_pparse(args) -> int:
    g = _grammar(args.grammar)
    m = compute_opm(g)
    pp = ParallelParser(g, m, workers=args.workers, max_passes=args.passes, policy=args.policy,
                        executor=args.executor)

    def one(tokens):
        result = pp.run(tokens)
        report = None
        if args.report:
            report = benchmark(g, m, tokens, args.workers, max_passes=args.passes,
                               policy=args.policy, executor=args.executor)
            report["passes"] = result.pass_count
        return result.tree, report

    return _parse_loop(args, one)


def cmd_auto(args) -> int:
    op = args.op
    files = args.files
    need = {"run": 1, "det": 1, "compl": 1, "and": 2, "or": 2, "empty": 1, "contains": 2,
            "togramm": 1, "fromgramm": 1}[op]
    if len(files) != need:
        raise UsageError(f"auto {op} takes {need} file argument(s), got {len(files)}")
    fmt = args.format if args.format not in (None, "sexpr") else "json"
    if op == "fromgramm":
        a = opa_mod.grammar_to_opa(_grammar(files[0]))
        _emit(_render_opa(a, fmt), args.output)
        return EXIT_OK
    autos = [_automaton(f) for f in files]
    if op == "run":
        return _auto_run(args, autos[0])
    if op == "det":
        _emit(_render_opa(opa_mod.determinize(autos[0]), fmt), args.output)
    elif op == "compl":
        _emit(_render_opa(opa_mod.complement(autos[0]), fmt), args.output)
    elif op == "and":
        _emit(_render_opa(opa_mod.relabel(opa_mod.intersect(*autos)), fmt), args.output)
    elif op == "or":
        _emit(_render_opa(opa_mod.relabel(opa_mod.union(*autos)), fmt), args.output)
    elif op == "togramm":
        _emit(opa_mod.opa_to_grammar(autos[0]).to_text(), args.output)
    elif op == "empty":
        res = opa_mod.is_empty(autos[0])
        print("true" if res else "false")
        return EXIT_OK if res else EXIT_FALSE
    elif op == "contains":
        res = opa_mod.contains(*autos)
        print("true" if res else "false")
        return EXIT_OK if res else EXIT_FALSE
    return EXIT_OK


def _auto_run(args, a) -> int:
    batch = _sentences(args)
    lines = batch if batch is not None else _stdin_sentences()
    status = EXIT_OK
    for tokens in lines:
        unknown = [t for t in tokens if t not in a.terminals]
        res = opa_mod.RunResult(False) if unknown else opa_mod.run(a, tokens)
        print("accept" if res.accepted else "reject")
        if not res.accepted:
            status = EXIT_FALSE
        if args.trace and res.accepted:
            if args.format == "json":
                print(json.dumps([{"input": r, "state": q, "stack": [list(x) for x in s]}
                                  for r, q, s in res.traces[0].rows()], ensure_ascii=False))
            else:
                sys.stdout.write(res.traces[0].format())
    return status


def cmd_check_vpl(args) -> int:
    text = _read(args.file)
    m = load_matrix(text) if _looks_json(text) else compute_opm(load_grammar(text))
    part = detect_partition(m, allow_subset=args.allow_subset)
    if part is None:
        print("not a partitioned matrix")
        return EXIT_FALSE
    order = {t: i for i, t in enumerate(m.terminals)}

    def names(s):
        return " ".join(sorted(s, key=order.__getitem__))

    if args.format == "json":
        print(json.dumps({"calls": names(part.calls).split(), "returns": names(part.returns).split(),
                          "internals": names(part.internals).split()}))
    else:
        print(f"calls: {names(part.calls)}")
        print(f"returns: {names(part.returns)}")
        print(f"internals: {names(part.internals)}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="oplkit", description="Operator-precedence grammars, parsers and automata.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def fmt(p, choices, default):
        p.add_argument("--format", choices=choices, default=default)

    p = sub.add_parser("opm", help="print the precedence matrix of a grammar")
    p.add_argument("grammar")
    fmt(p, ["text", "json"], "text")
    p.set_defaults(func=cmd_opm)

    for name, func, helptext in (("parse", cmd_parse, "parse sentences sequentially"),
                                 ("pparse", cmd_pparse, "parse sentences with parallel workers")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("grammar")
        p.add_argument("input", nargs="?", help="whitespace-separated tokens; omit to read stdin lines")
        p.add_argument("--input-file", help="file with one sentence per line")
        fmt(p, ["sexpr", "json", "text"], "sexpr")
        p.set_defaults(func=func)
        if name == "pparse":
            p.add_argument("--workers", "-k", type=int, default=os.cpu_count() or 1)
            p.add_argument("--passes", type=int, default=16, help="maximum number of passes")
            p.add_argument("--policy", choices=["equal", "after-gt"], default="equal")
            p.add_argument("--executor", choices=["serial", "thread", "process"], default=None)
            p.add_argument("--report", action="store_true", help="print a JSON benchmark report")

    p = sub.add_parser("auto", help="operator-precedence automata")
    p.add_argument("op", choices=["run", "det", "compl", "and", "or", "empty", "contains",
                                  "togramm", "fromgramm"])
    p.add_argument("files", nargs="+", help="automaton (or grammar, for fromgramm) files; "
                                            "for run, the file is followed by the input")
    p.add_argument("--trace", action="store_true")
    p.add_argument("-o", "--output")
    fmt(p, ["json", "dot", "text", "sexpr"], None)
    p.set_defaults(func=cmd_auto)

    p = sub.add_parser("check-vpl", help="is the matrix a visibly-pushdown partition?")
    p.add_argument("file", help="grammar or matrix JSON")
    p.add_argument("--allow-subset", action="store_true",
                   help="accept matrices whose cells are contained in a partitioned matrix")
    fmt(p, ["text", "json"], "text")
    p.set_defaults(func=cmd_check_vpl)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command == "auto":
        args.input = None
        args.input_file = None
        if args.op == "run":
            if len(args.files) == 2:
                args.input = args.files.pop()
            elif len(args.files) != 1:
                ap.error("auto run takes an automaton file and an optional input")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"oplkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConflictError as exc:
        print(f"oplkit: conflict: {exc}", file=sys.stderr)
        return EXIT_CONFLICT
    except (GrammarSyntaxError, AutomatonFormatError, EqualityCycleError, GrammarError,
            json.JSONDecodeError, UnicodeDecodeError) as exc:
        print(f"oplkit: invalid input: {exc}", file=sys.stderr)
        return EXIT_DATA
    except PassLimitError as exc:
        print(f"oplkit: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except OplError as exc:
        print(f"oplkit: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"oplkit: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
