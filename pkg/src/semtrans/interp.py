"""Concrete evaluation of programs.

:class:`Machine` is the store-free instance of the machine template for
programs in A-normal form: an environment, the expression under evaluation
and a stack of let-frames.  :class:`TermMachine` evaluates arbitrary terms
with a richer frame set; it runs the source program and the stage outputs
that are no longer in ANF, and it is an independent oracle for the former.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

from .anf import is_anf
from .errors import (
    ArgumentError, ArityMismatch, MatchFailure, NotAFunction, OutOfFuel, PrimopTypeError,
    UnboundVariable, UserError,
)
from .syntax import (
    ANY, BASE_TYPES, FUNCTION_PLACEHOLDER, PRIMITIVES, App, Error, Fun, FunId, Let, Lit, Match,
    PLit, PRecord, PType, PVar, PWild, Program, Record, RecordType, Var, _lit_text,
)

Literal = Union[int, bool, str]


@dataclass(frozen=True)
class RecordV:
    struct: str
    fields: tuple


@dataclass(frozen=True, eq=False)
class ClosureV:
    env: dict
    fun: Fun


@dataclass(frozen=True)
class TopFunV:
    name: str


@dataclass(frozen=True)
class PrimV:
    op: str


Value = Union[Literal, RecordV, ClosureV, TopFunV, PrimV]


def fun_id(v: Value) -> Optional[FunId]:
    match v:
        case ClosureV(fun=fun):
            return FunId("fun", fun.label)
        case TopFunV(name):
            return FunId("top", name)
        case PrimV(op):
            return FunId("prim", op)
    return None


# ---------------------------------------------------------------------------
# Primitive operations


def _int(op, v):
    if type(v) is not int:
        raise PrimopTypeError(f"{op} expects integers, got {format_value(v)}")
    return v


def _is_literal(v) -> bool:
    return type(v) in (int, bool, str)


def delta(op: str, args: list) -> Value:
    if len(args) != PRIMITIVES[op]:
        raise ArityMismatch(f"{op} expects {PRIMITIVES[op]} arguments, got {len(args)}")
    match op:
        case "+":
            return _int(op, args[0]) + _int(op, args[1])
        case "-":
            return _int(op, args[0]) - _int(op, args[1])
        case "*":
            return _int(op, args[0]) * _int(op, args[1])
        case "<":
            return _int(op, args[0]) < _int(op, args[1])
        case "<=":
            return _int(op, args[0]) <= _int(op, args[1])
        case "eq?":
            a, b = args
            if not (_is_literal(a) and _is_literal(b)):
                raise PrimopTypeError("eq? compares literals only")
            return type(a) is type(b) and a == b
        case "not":
            if type(args[0]) is not bool:
                raise PrimopTypeError(f"not expects a boolean, got {format_value(args[0])}")
            return not args[0]
    raise KeyError(op)


# ---------------------------------------------------------------------------
# Pattern matching


_PY_TYPES = {"String": str, "Integer": int, "Boolean": bool}


def bind_pattern(p, v, env: dict) -> bool:
    """Extend ``env`` in place with the bindings of ``p``; False if ``v`` does not match."""
    match p:
        case PVar(name):
            env[name] = v
            return True
        case PWild():
            return True
        case PLit(value):
            return type(v) is type(value) and v == value
        case PType(tp, name):
            if type(v) is not _PY_TYPES[tp]:
                return False
            env[name] = v
            return True
        case PRecord(struct=r, items=items):
            if not (isinstance(v, RecordV) and v.struct == r and len(v.fields) == len(items)):
                return False
            return all(bind_pattern(i, f, env) for i, f in zip(items, v.fields))
    raise TypeError(p)


def match_value(v: Value, branches, env: dict):
    """First branch whose pattern matches ``v``, with its extended environment."""
    for p, body in branches:
        new_env = dict(env)
        if bind_pattern(p, v, new_env):
            return new_env, body
    raise MatchFailure(f"no branch matches {format_value(v)}")


# ---------------------------------------------------------------------------
# Machines


@dataclass(frozen=True)
class Frame:
    env: dict
    pattern: object
    body: object


@dataclass(frozen=True)
class Eval:
    env: dict
    expr: object
    stack: object  # None or (frame, rest)


@dataclass(frozen=True)
class Continue:
    value: object
    stack: object


@dataclass(frozen=True)
class Final:
    value: object


class _Base:
    def __init__(self, program: Program, on_call: Callable | None = None):
        self.program = program
        self.defs = {fd.name: fd for fd in program.functions}
        self.on_call = on_call

    def lookup(self, env: dict, name: str) -> Value:
        try:
            return env[name]
        except KeyError:
            pass
        if name in self.defs:
            return TopFunV(name)
        if name in PRIMITIVES:
            return PrimV(name)
        raise UnboundVariable(f"unbound variable {name}")

    def apply_fn(self, fn: Value, args: list, stack, label: int = -1):
        if self.on_call is not None:
            fid = fun_id(fn)
            if fid is not None:
                self.on_call(label, fid)
        match fn:
            case ClosureV(env=env, fun=fun):
                if len(fun.params) != len(args):
                    raise ArityMismatch(f"function expects {len(fun.params)} arguments, got {len(args)}")
                new_env = dict(env)
                new_env.update(zip(fun.params, args))
                return Eval(new_env, fun.body, stack)
            case TopFunV(name):
                fd = self.defs[name]
                if len(fd.params) != len(args):
                    raise ArityMismatch(f"{name} expects {len(fd.params)} arguments, got {len(args)}")
                return Eval(dict(zip(fd.param_names, args)), fd.body, stack)
            case PrimV(op):
                return Continue(delta(op, args), stack)
        raise NotAFunction(f"cannot apply {format_value(fn)}")

    def run_config(self, config, fuel: int | None = None) -> Value:
        steps = 0
        while not isinstance(config, Final):
            if fuel is not None:
                steps += 1
                if steps > fuel:
                    raise OutOfFuel(f"no result after {fuel} steps")
            config = self.step(config)
        return config.value


class Machine(_Base):
    """Environment/stack machine for programs in A-normal form."""

    def step(self, config):
        if isinstance(config, Continue):
            if config.stack is None:
                return Final(config.value)
            frame, rest = config.stack
            env = dict(frame.env)
            if not bind_pattern(frame.pattern, config.value, env):
                raise MatchFailure(f"let pattern does not match {format_value(config.value)}")
            return Eval(env, frame.body, rest)
        env, e, stack = config.env, config.expr, config.stack
        match e:
            case Var(name):
                return Continue(self.lookup(env, name), stack)
            case Lit(value):
                return Continue(value, stack)
            case Record(struct=r, fields=fields):
                return Continue(RecordV(r, tuple(self._atom(env, f) for f in fields)), stack)
            case Fun():
                return Continue(ClosureV(env, e), stack)
            case Let(pattern=p, bound=c, body=body):
                return Eval(env, c, (Frame(env, p, body), stack))
            case App(fn=fn, args=args):
                return self.apply_fn(self._atom(env, fn), [self._atom(env, a) for a in args],
                                     stack, fn.label)
            case Match(scrutinee=s, branches=branches):
                new_env, body = match_value(self._atom(env, s), branches, env)
                return Eval(new_env, body, stack)
            case Error(message):
                raise UserError(message)
        raise TypeError(f"not an ANF expression: {e!r}")

    def _atom(self, env, t):
        if not isinstance(t, Var):
            raise TypeError(f"expected a variable in ANF position, got {t!r}")
        return self.lookup(env, t.name)


class TermMachine(_Base):
    """Machine for unrestricted terms; frames remember partially evaluated nodes."""

    def step(self, config):
        if isinstance(config, Continue):
            if config.stack is None:
                return Final(config.value)
            (tag, env, node, done), rest = config.stack
            v = config.value
            match tag:
                case "let":
                    new_env = dict(env)
                    if not bind_pattern(node.pattern, v, new_env):
                        raise MatchFailure(f"let pattern does not match {format_value(v)}")
                    return Eval(new_env, node.body, rest)
                case "match":
                    new_env, body = match_value(v, node.branches, env)
                    return Eval(new_env, body, rest)
                case "app":
                    vals = done + (v,)
                    if len(vals) <= len(node.args):
                        return Eval(env, node.args[len(vals) - 1], (("app", env, node, vals), rest))
                    return self.apply_fn(vals[0], list(vals[1:]), rest, node.fn.label)
                case "record":
                    vals = done + (v,)
                    if len(vals) < len(node.fields):
                        return Eval(env, node.fields[len(vals)], (("record", env, node, vals), rest))
                    return Continue(RecordV(node.struct, vals), rest)
        env, e, stack = config.env, config.expr, config.stack
        match e:
            case Var(name):
                return Continue(self.lookup(env, name), stack)
            case Lit(value):
                return Continue(value, stack)
            case Fun():
                return Continue(ClosureV(env, e), stack)
            case Record(struct=r, fields=fields):
                if not fields:
                    return Continue(RecordV(r, ()), stack)
                return Eval(env, fields[0], (("record", env, e, ()), stack))
            case Let(bound=c):
                return Eval(env, c, (("let", env, e, ()), stack))
            case App(fn=fn):
                return Eval(env, fn, (("app", env, e, ()), stack))
            case Match(scrutinee=s):
                return Eval(env, s, (("match", env, e, ()), stack))
            case Error(message):
                raise UserError(message)
        raise TypeError(f"not a term: {e!r}")


# ---------------------------------------------------------------------------
# Entry point


def to_value(datum) -> Value:
    """Convert a parsed value datum (literal or ``(label, fields)``) to a runtime value."""
    if isinstance(datum, tuple):
        label, fields = datum
        return RecordV(label, tuple(to_value(f) for f in fields))
    if datum == FUNCTION_PLACEHOLDER:
        raise ArgumentError("functions cannot be passed to main")
    return datum


def inhabits(program: Program, v: Value, tp: str, _seen=None) -> bool:
    """Does ``v`` belong to the declared type ``tp``?"""
    if tp == ANY:
        return True
    if tp in BASE_TYPES:
        return type(v) is _PY_TYPES[tp]
    dd = program.datatype(tp)
    if dd is not None:
        return any(_inhabits_ref(program, v, ref) for ref in dd.variants)
    arities = program.struct_arities()
    if tp in arities:
        return isinstance(v, RecordV) and v.struct == tp and len(v.fields) == arities[tp] \
            and _declared_fields_ok(program, v)
    return False


def _inhabits_ref(program, v, ref) -> bool:
    if isinstance(ref, RecordType):
        return (isinstance(v, RecordV) and v.struct == ref.struct and len(v.fields) == len(ref.fields)
                and all(inhabits(program, f, t) for f, t in zip(v.fields, ref.fields)))
    return inhabits(program, v, ref)


def _declared_fields_ok(program, v: RecordV) -> bool:
    for dd in program.datatypes:
        for ref in dd.variants:
            if isinstance(ref, RecordType) and ref.struct == v.struct:
                return _inhabits_ref(program, v, ref)
    return True


def run(program: Program, args: list, fuel: int | None = None,
        on_call: Callable[[int, FunId], None] | None = None, machine: str = "auto") -> Value:
    """Evaluate ``main`` on ``args`` (runtime values or parsed value data)."""
    main = program.main
    values = [a if isinstance(a, (RecordV,)) else to_value(a) for a in args]
    if len(values) != len(main.params):
        raise ArgumentError(f"main expects {len(main.params)} arguments, got {len(values)}")
    for p, v in zip(main.params, values):
        if not inhabits(program, v, p.type):
            raise ArgumentError(f"argument {format_value(v)} is not of type {p.type}")
    if machine == "auto":
        machine = "anf" if is_anf(program) else "term"
    cls = Machine if machine == "anf" else TermMachine
    m = cls(program, on_call)
    start = Eval(dict(zip(main.param_names, values)), main.body, None)
    return m.run_config(start, fuel)


# ---------------------------------------------------------------------------
# Printing and comparison


def format_value(v: Value) -> str:
    match v:
        case RecordV(struct=r, fields=fields):
            return "{" + " ".join([r, *(format_value(f) for f in fields)]) + "}"
        case ClosureV(fun=fun):
            return f"#<closure:{fun.label}>"
        case TopFunV(name):
            return f"#<def:{name}>"
        case PrimV(op):
            return f"#<prim:{op}>"
    if _is_literal(v):
        return _lit_text(v)
    if isinstance(v, tuple):
        return format_datum(v)
    if v == FUNCTION_PLACEHOLDER:
        return v
    raise TypeError(v)


def format_datum(d) -> str:
    if isinstance(d, tuple):
        label, fields = d
        return "{" + " ".join([label, *(format_datum(f) for f in fields)]) + "}"
    if d == FUNCTION_PLACEHOLDER and isinstance(d, str):
        return d
    return _lit_text(d)


def observe(v: Value, generated=frozenset()):
    """Stage-independent view of a result.

    Functions, and records built by generated constructors (which stand for
    functions after defunctionalization), all become ``#<function>``.
    Literals are tagged with their type so ``1`` and ``#t`` stay distinct.
    """
    match v:
        case RecordV(struct=r, fields=fields):
            if r in generated:
                return FUNCTION_PLACEHOLDER
            return (r, tuple(observe(f, generated) for f in fields))
        case ClosureV() | TopFunV() | PrimV():
            return FUNCTION_PLACEHOLDER
    return (type(v).__name__, v)


def observe_datum(d):
    """The :func:`observe` view of an expected value written as a datum."""
    if isinstance(d, tuple):
        label, fields = d
        return (label, tuple(observe_datum(f) for f in fields))
    if isinstance(d, str) and d == FUNCTION_PLACEHOLDER:
        return d
    return (type(d).__name__, d)
