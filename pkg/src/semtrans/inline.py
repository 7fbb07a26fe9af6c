"""Inlining of administrative let-bindings.

A binding ``(let x c e)`` disappears when ``c`` is a variable, or when ``x``
is used exactly once in ``e`` and either ``c`` is a value or the use is
reached before anything with an effect (a call, a match or an error) is
evaluated.  The second condition keeps the order of effects unchanged.
"""
from __future__ import annotations

from dataclasses import replace

from .syntax import (
    App, Capture, Error, Fun, Let, Lit, Match, Program, PVar, Record, Var, count_free,
    relabel, substitute,
)

_FOUND, _BLOCKED, _PURE = "found", "blocked", "pure"


def is_value(t) -> bool:
    match t:
        case Var() | Lit() | Fun():
            return True
        case Record(fields=fields):
            return all(is_value(f) for f in fields)
    return False


def _spine(t, x: str) -> str:
    """Is the first effect-free prefix of ``t``'s evaluation a use of ``x``?"""
    match t:
        case Var(name):
            return _FOUND if name == x else _PURE
        case Lit() | Fun():
            return _PURE
        case Error():
            return _BLOCKED
        case App(fn=fn, args=args):
            for sub in (fn, *args):
                r = _spine(sub, x)
                if r != _PURE:
                    return r
            return _BLOCKED
        case Record(fields=fields):
            for sub in fields:
                r = _spine(sub, x)
                if r != _PURE:
                    return r
            return _PURE
        case Let(pattern=p, bound=c, body=body):
            r = _spine(c, x)
            if r != _PURE:
                return r
            if not isinstance(p, PVar) or p.name == x:
                return _BLOCKED
            return _spine(body, x)
        case Match(scrutinee=s):
            r = _spine(s, x)
            return _BLOCKED if r == _PURE else r
    raise TypeError(f"not a term: {t!r}")


def _try_inline(t: Let):
    x = t.pattern.name
    c = t.bound
    if isinstance(c, Var):
        if c.name == x:
            return t.body
        try:
            return substitute(t.body, x, c)
        except Capture:
            return None
    if count_free(t.body, x) != 1:
        return None
    if not (is_value(c) or _spine(t.body, x) == _FOUND):
        return None
    try:
        return substitute(t.body, x, c)
    except Capture:
        return None


def inline_term(t):
    """Inline to a fixed point."""
    while True:
        new, changed = _pass(t)
        if not changed:
            return new
        t = new


def _pass(t):
    match t:
        case Var() | Lit() | Error():
            return t, False
        case Fun(body=body):
            b, ch = _pass(body)
            return (replace(t, body=b), True) if ch else (t, False)
        case App(fn=fn, args=args):
            parts = [_pass(x) for x in (fn, *args)]
            if not any(ch for _, ch in parts):
                return t, False
            return replace(t, fn=parts[0][0], args=tuple(p for p, _ in parts[1:])), True
        case Record(fields=fields):
            parts = [_pass(x) for x in fields]
            if not any(ch for _, ch in parts):
                return t, False
            return replace(t, fields=tuple(p for p, _ in parts)), True
        case Match(scrutinee=s, branches=branches):
            s2, ch = _pass(s)
            new_branches = []
            for p, b in branches:
                b2, chb = _pass(b)
                ch |= chb
                new_branches.append((p, b2))
            return (replace(t, scrutinee=s2, branches=tuple(new_branches)), True) if ch else (t, False)
        case Let(pattern=p, bound=c, body=body):
            c2, ch1 = _pass(c)
            b2, ch2 = _pass(body)
            t2 = replace(t, bound=c2, body=b2) if (ch1 or ch2) else t
            if isinstance(p, PVar):
                out = _try_inline(t2)
                if out is not None:
                    return out, True
            return t2, ch1 or ch2
    raise TypeError(f"not a term: {t!r}")


def inline_program(program: Program) -> Program:
    functions = tuple(replace(fd, body=inline_term(fd.body)) for fd in program.functions)
    return relabel(replace(program, functions=functions))
