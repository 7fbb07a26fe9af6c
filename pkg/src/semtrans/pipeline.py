"""The transformation pipeline and the differential test harness."""
from __future__ import annotations

from dataclasses import dataclass, field

from . import sexpr
from .anf import normalize_program
from .cfa import Analysis, analyze
from .cps import cps_program
from .defun import defun_program
from .errors import EvalError, SourceSyntaxError
from .inline import inline_program
from .interp import observe, observe_datum, run
from .syntax import Program, parse_program, parse_value_datum

STAGES = ("parse", "anf", "cps", "defun", "inline")


@dataclass
class PipelineResult:
    programs: dict = field(default_factory=dict)   # stage -> Program
    analyses: dict = field(default_factory=dict)   # "anf" / "cps" -> Analysis

    @property
    def final(self) -> Program:
        return self.programs[list(self.programs)[-1]]


def transform(source: str | Program, stop_after: str = "inline") -> PipelineResult:
    """Run the stages in order, keeping every intermediate program."""
    if stop_after not in STAGES:
        raise ValueError(f"unknown stage {stop_after}")
    result = PipelineResult()
    program = parse_program(source) if isinstance(source, str) else source
    result.programs["parse"] = program
    if stop_after == "parse":
        return result
    program = normalize_program(program)
    result.programs["anf"] = program
    if stop_after == "anf":
        return result
    result.analyses["anf"] = analyze(program)
    program = cps_program(program, result.analyses["anf"])
    result.programs["cps"] = program
    if stop_after == "cps":
        return result
    result.analyses["cps"] = analyze(program)
    program = defun_program(program, result.analyses["cps"])
    result.programs["defun"] = program
    if stop_after == "defun":
        return result
    result.programs["inline"] = inline_program(program)
    return result


# ---------------------------------------------------------------------------
# Tests files: (check (arg ...) expected)


@dataclass(frozen=True)
class ExpectError:
    message: str | None = None  # None accepts any runtime error


@dataclass(frozen=True)
class Check:
    args: tuple
    expected: object  # a value datum or an ExpectError
    text: str = ""


def parse_tests(text: str) -> list[Check]:
    checks = []
    for d in sexpr.read_all(text):
        items = getattr(d, "items", ())
        if not (isinstance(d, sexpr.SList) and d.bracket == "(" and len(items) == 3
                and isinstance(items[0], sexpr.Atom) and items[0].text == "check"
                and isinstance(items[1], sexpr.SList) and items[1].bracket == "("):
            raise SourceSyntaxError("expected (check (arg ...) expected)", d.pos)
        args = tuple(parse_value_datum(a) for a in items[1].items)
        exp = items[2]
        if isinstance(exp, sexpr.SList) and exp.bracket == "(" and exp.items \
                and isinstance(exp.items[0], sexpr.Atom) and exp.items[0].text == "error":
            if len(exp.items) == 1:
                expected = ExpectError()
            elif len(exp.items) == 2 and isinstance(exp.items[1], sexpr.Str):
                expected = ExpectError(exp.items[1].value)
            else:
                raise SourceSyntaxError('expected (error "message")', exp.pos)
        else:
            expected = parse_value_datum(exp)
        checks.append(Check(args, expected, _datum_text(d)))
    return checks


def _datum_text(d) -> str:
    if isinstance(d, sexpr.Atom):
        return d.text
    if isinstance(d, sexpr.Str):
        return sexpr.quote_string(d.value)
    return d.bracket + " ".join(_datum_text(i) for i in d.items) + sexpr.OPENERS[d.bracket]


def outcome(program: Program, args, generated=frozenset(), fuel: int | None = 10**7):
    """Observable result of running ``program``: ("value", view) or ("error", kind, message)."""
    try:
        return ("value", observe(run(program, list(args), fuel=fuel), generated))
    except EvalError as e:
        message = e.message if hasattr(e, "message") else None
        return ("error", e.kind, message)


def expectation_met(expected, got) -> bool:
    if isinstance(expected, ExpectError):
        if got[0] != "error":
            return False
        return expected.message is None or (got[1] == "error" and got[2] == expected.message)
    return got[0] == "value" and got[1] == observe_datum(expected)


def generated_structs(source: Program, program: Program) -> frozenset:
    return frozenset(set(program.struct_arities()) - set(source.struct_arities()))


@dataclass
class Mismatch:
    check: Check
    stage: str
    got: object
    reason: str

    def __str__(self):
        return f"{self.stage}: {self.check.text}: {self.reason}, got {format_outcome(self.got)}"


def format_outcome(o) -> str:
    if o[0] == "error":
        return f"(error {o[1]}{' ' + repr(o[2]) if o[2] is not None else ''})"
    return _format_view(o[1])


def _format_view(v) -> str:
    from .syntax import FUNCTION_PLACEHOLDER, _lit_text
    if v == FUNCTION_PLACEHOLDER:
        return v
    a, b = v
    if isinstance(b, tuple):
        return "{" + " ".join([a, *(_format_view(f) for f in b)]) + "}"
    return _lit_text(b)


def check_stages(programs: dict, checks: list[Check], fuel: int | None = 10**7) -> list[Mismatch]:
    """Run every check on every stage; report disagreements with the expectation or the source."""
    source = programs["parse"]
    mismatches = []
    for check in checks:
        reference = None
        for stage, program in programs.items():
            got = outcome(program, check.args, generated_structs(source, program), fuel)
            if stage == "parse":
                reference = got
            if not expectation_met(check.expected, got):
                mismatches.append(Mismatch(check, stage, got, "unexpected result"))
            elif got != reference:
                mismatches.append(Mismatch(check, stage, got, "differs from the source program"))
    return mismatches
