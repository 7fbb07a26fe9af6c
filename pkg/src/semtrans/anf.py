"""Conversion to administrative normal form.

Commands are variables, literals, ``fun`` with an ANF body, applications
and records over variables, and ``match`` on a variable with ANF branches.
An ANF expression is a chain of ``let``s ending in a command or ``error``.
"""
from __future__ import annotations

from dataclasses import replace
from typing import Callable

from .syntax import (
    PRIMITIVES, App, Error, FreshNames, Fun, Let, Lit, Match, PVar, Program, Record, Term, Var,
    all_names, free_names, pattern_vars, relabel, substitute, walk,
)


def _identity(c):
    return c


def normalize_term(term: Term, k: Callable[[Term], Term] = _identity, fresh: FreshNames | None = None) -> Term:
    """ANF-convert ``term``; ``k`` builds the rest of the expression from a command."""
    if fresh is None:
        fresh = FreshNames(free_names(term) | {v for t in walk(term) for v in _binders(t)})

    def atomic(k):
        def bind(c):
            if isinstance(c, Var):
                return k(c)
            x = fresh()
            return Let(PVar(x), c, k(Var(x, pos=c.pos)), pos=c.pos)
        return bind

    def norm_seq(ts, k):
        def go(i, acc):
            if i == len(ts):
                return k(acc)
            return norm(ts[i], atomic(lambda x: go(i + 1, acc + [x])))
        return go(0, [])

    def norm(t, k):
        match t:
            case Var() | Lit():
                return k(t)
            case Fun(body=body):
                return k(replace(t, body=norm(body, _identity)))
            case App(fn=fn, args=args):
                return norm(fn, atomic(
                    lambda xf: norm_seq(args, lambda xs: k(App(xf, tuple(xs), pos=t.pos)))))
            case Let(pattern=p, bound=c, body=body):
                return norm(c, lambda c1: Let(p, c1, norm(body, k), pos=t.pos))
            case Record(struct=r, fields=fields):
                return norm_seq(fields, lambda xs: k(Record(r, tuple(xs), pos=t.pos)))
            case Match(scrutinee=s, branches=branches):
                return norm(s, atomic(lambda x: k(Match(
                    x, tuple((p, norm(b, _identity)) for p, b in branches), pos=t.pos))))
            case Error():
                return t
        raise TypeError(f"not a term: {t!r}")

    return norm(term, k)


def _binders(t: Term) -> list[str]:
    match t:
        case Fun(params=params):
            return list(params)
        case Let(pattern=p):
            return pattern_vars(p)
        case Match(branches=branches):
            return [v for p, _ in branches for v in pattern_vars(p)]
    return []


def _hygienic(body: Term, params, globals_, fresh_root: set[str]) -> Term:
    # Lets float outward during conversion, so a let-bound name must not be
    # able to capture anything else in the same definition.
    counts: dict[str, int] = {}
    for name in params:
        counts[name] = counts.get(name, 0) + 1
    for t in walk(body):
        for name in _binders(t):
            counts[name] = counts.get(name, 0) + 1
    risky = set(globals_) | set(PRIMITIVES) | free_names(body)
    fresh = FreshNames(fresh_root)

    def go(t):
        match t:
            case Let(pattern=p, bound=c, body=b):
                c, b = go(c), go(b)
                for v in pattern_vars(p):
                    if counts[v] > 1 or v in risky:
                        new = fresh(v + "$")
                        p = _rename_pattern(p, v, new)
                        b = substitute(b, v, Var(new))
                return replace(t, pattern=p, bound=c, body=b)
            case Fun(body=b):
                return replace(t, body=go(b))
            case App(fn=fn, args=args):
                return replace(t, fn=go(fn), args=tuple(go(a) for a in args))
            case Record(fields=fields):
                return replace(t, fields=tuple(go(f) for f in fields))
            case Match(scrutinee=s, branches=branches):
                return replace(t, scrutinee=go(s), branches=tuple((p, go(b)) for p, b in branches))
        return t

    return go(body)


def _rename_pattern(p, old, new):
    from .syntax import PRecord, PType
    match p:
        case PVar(name) if name == old:
            return PVar(new)
        case PType(tp, name) if name == old:
            return PType(tp, new)
        case PRecord(struct=r, items=items):
            return PRecord(r, tuple(_rename_pattern(i, old, new) for i in items))
    return p


def normalize_program(program: Program) -> Program:
    taken = all_names(program)
    globals_ = program.function_names
    functions = []
    for fd in program.functions:
        body = _hygienic(fd.body, fd.param_names, globals_, taken)
        fresh = FreshNames(taken | all_names_in(body))
        functions.append(replace(fd, body=normalize_term(body, fresh=fresh)))
    return relabel(replace(program, functions=tuple(functions)))


def all_names_in(t: Term) -> set[str]:
    return free_names(t) | {v for n in walk(t) for v in _binders(n)}


def is_anf_command(c: Term) -> bool:
    match c:
        case Var() | Lit():
            return True
        case Fun(body=body):
            return is_anf_expr(body)
        case App(fn=fn, args=args):
            return isinstance(fn, Var) and all(isinstance(a, Var) for a in args)
        case Record(fields=fields):
            return all(isinstance(f, Var) for f in fields)
        case Match(scrutinee=s, branches=branches):
            return isinstance(s, Var) and all(is_anf_expr(b) for _, b in branches)
    return False


def is_anf_expr(e: Term) -> bool:
    while isinstance(e, Let):
        if not is_anf_command(e.bound):
            return False
        e = e.body
    return isinstance(e, Error) or is_anf_command(e)


def is_anf(program_or_term) -> bool:
    if isinstance(program_or_term, Program):
        return all(is_anf_expr(fd.body) for fd in program_or_term.functions)
    return is_anf_expr(program_or_term)
