"""Command-line driver: ``semtrans transform | run | check``."""
from __future__ import annotations

import argparse
import logging
import re
import sys

from . import sexpr
from .cfa import dump_analysis
from .errors import ArgumentError, EvalError, ParseError, SemtransError, TransformError
from .interp import format_value, run
from .pipeline import STAGES, check_stages, parse_tests, transform
from .syntax import parse_value_datum, pretty

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_TRANSFORM, EXIT_RUNTIME, EXIT_MISMATCH = range(6)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="semtrans", description="Derive abstract machines from interpreters.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log analysis warnings")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("transform", help="transform an interpreter into an abstract machine")
    t.add_argument("file")
    t.add_argument("-o", "--output", help="write the result here instead of stdout")
    t.add_argument("--stop-after", choices=STAGES, default="inline")
    t.add_argument("--dump-cfa", metavar="PATH", help="write the control-flow analyses here")

    r = sub.add_parser("run", help="evaluate main on the given values")
    r.add_argument("file")
    r.add_argument("--stage", choices=STAGES, default="parse",
                   help="run the program produced by this stage")
    r.add_argument("--fuel", type=int, default=None, help="maximum number of machine steps")
    r.add_argument("values", nargs="*", help="arguments of main as s-expressions")

    c = sub.add_parser("check", help="run a tests file against every stage")
    c.add_argument("file")
    c.add_argument("tests")
    c.add_argument("--fuel", type=int, default=10**7)
    return parser


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as f:
        return f.read()


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)


def cmd_transform(args) -> int:
    result = transform(_read(args.file), args.stop_after)
    if args.dump_cfa:
        chunks = [f";; analysis of the {stage} program\n{dump_analysis(a)}"
                  for stage, a in result.analyses.items()]
        _write(args.dump_cfa, "\n".join(chunks))
    _write(args.output, pretty(result.final))
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        values = [parse_value_datum(sexpr.read_one(v)) for v in args.values]
    except ParseError as e:
        print(f"semtrans: bad argument: {e}", file=sys.stderr)
        return EXIT_USAGE
    program = transform(_read(args.file), args.stage).final
    print(format_value(run(program, values, fuel=args.fuel)))
    return EXIT_OK


def cmd_check(args) -> int:
    result = transform(_read(args.file))
    checks = parse_tests(_read(args.tests))
    mismatches = check_stages(result.programs, checks, args.fuel)
    for m in mismatches:
        print(m, file=sys.stderr)
    stages = len(result.programs)
    print(f"{len(checks)} checks x {stages} stages: {len(mismatches)} mismatches")
    return EXIT_MISMATCH if mismatches else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    # everything after "--" is a value for main, even when it looks like an option
    trailing = []
    if "--" in argv:
        cut = argv.index("--")
        argv, trailing = argv[:cut], argv[cut + 1:]
    args, extra = parser.parse_known_args(argv)
    # argparse stops filling a positional list at the first option, so
    # values given after an option come back unrecognized
    stray = [e for e in extra if e.startswith("-") and not re.fullmatch(r"-\d+", e)]
    if extra and (args.command != "run" or stray):
        parser.error(f"unrecognized arguments: {' '.join(stray or extra)}")
    if trailing and args.command != "run":
        parser.error("only run accepts values after --")
    if args.command == "run":
        args.values = list(args.values) + extra + trailing
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="semtrans: %(message)s")
    handler = {"transform": cmd_transform, "run": cmd_run, "check": cmd_check}[args.command]
    try:
        return handler(args)
    except OSError as e:
        print(f"semtrans: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ArgumentError as e:
        print(f"semtrans: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as e:
        print(f"semtrans: parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except TransformError as e:
        print(f"semtrans: transformation error: {e}", file=sys.stderr)
        return EXIT_TRANSFORM
    except EvalError as e:
        print(f"semtrans: runtime error ({e.kind}): {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except SemtransError as e:  # pragma: no cover - every subclass is handled above
        print(f"semtrans: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
