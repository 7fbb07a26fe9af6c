"""Exception hierarchy shared by every pipeline stage."""
from __future__ import annotations


def _where(pos) -> str:
    if pos is None:
        return ""
    line, col = pos
    return f"{line}:{col}: "


class SemtransError(Exception):
    pass


# parsing (exit code 2)

class ParseError(SemtransError):
    def __init__(self, message: str, pos=None):
        super().__init__(_where(pos) + message)
        self.pos = pos


class SourceSyntaxError(ParseError):
    pass


class MissingMain(ParseError):
    pass


class UnannotatedMain(ParseError):
    pass


class DuplicateName(ParseError):
    pass


# transformation and analysis (exit code 3)

class TransformError(SemtransError):
    pass


class AnalysisError(TransformError):
    pass


class _CallSiteError(TransformError):
    kind = "call site"

    def __init__(self, label: int, callees, pos=None):
        self.label = label
        self.callees = tuple(callees)
        self.pos = pos
        names = " ".join(str(c) for c in self.callees)
        super().__init__(f"{_where(pos)}{self.kind} at label {label}: ({names})")


class MixedAtomicity(_CallSiteError):
    kind = "mixed atomic and non-atomic callees"


class MixedDefun(_CallSiteError):
    kind = "mixed defunctionalized and kept callees"


class ArityConflict(_CallSiteError):
    kind = "callees disagree on arity"


class DuplicateConstructor(TransformError):
    pass


# evaluation (exit code 4)

class EvalError(SemtransError):
    kind = "runtime-error"


class UnboundVariable(EvalError):
    kind = "unbound-variable"


class MatchFailure(EvalError):
    kind = "match-failure"


class NotAFunction(EvalError):
    kind = "not-a-function"


class ArityMismatch(EvalError):
    kind = "arity-mismatch"


class PrimopTypeError(EvalError):
    kind = "primop-type-error"


class UserError(EvalError):
    kind = "error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class OutOfFuel(EvalError):
    kind = "out-of-fuel"


class ArgumentError(SemtransError):
    """Arguments passed to ``main`` do not fit its signature."""
