"""Selective transformation into continuation-passing style.

Functions marked ``#:atomic`` (and ``main``) stay in direct style; every other
function receives its continuation as an extra, last argument.  Which
functions a call site may reach comes from the control-flow analysis.
"""
from __future__ import annotations

import logging
from dataclasses import replace

from .cfa import Analysis
from .errors import MixedAtomicity
from .syntax import (
    App, Error, FreshNames, Fun, FunId, Let, Lit, Match, Param, Program, PVar, Record, Var,
    all_names, label_table, relabel,
)

log = logging.getLogger(__name__)

ALL_ATOMIC = "all-atomic"
NONE_ATOMIC = "none-atomic"


class _Cps:
    def __init__(self, program: Program, analysis: Analysis):
        self.program = program
        self.analysis = analysis
        self.table = label_table(program)
        self.defs = {fd.name: fd for fd in program.functions}
        self.fresh = FreshNames(all_names(program))
        self.dead_sites: set[int] = set()

    # -- classification

    def is_atomic(self, fid: FunId) -> bool:
        match fid.kind:
            case "fun":
                return self.table[fid.key].annotations.atomic
            case "top":
                return fid.key == "main" or self.defs[fid.key].annotations.atomic
        return True  # primitive operations

    def verdict(self, app: App) -> str:
        callees = self.analysis.callees.get(app.fn.label, frozenset())
        if not callees:
            if app.fn.label not in self.dead_sites:
                self.dead_sites.add(app.fn.label)
                log.warning("call site %s is never reached; it stays in direct style",
                            app.fn.label)
            return ALL_ATOMIC
        atomic = [self.is_atomic(f) for f in callees]
        if all(atomic):
            return ALL_ATOMIC
        if not any(atomic):
            return NONE_ATOMIC
        raise MixedAtomicity(app.fn.label, sorted(callees), app.pos)

    def trivial(self, c) -> bool:
        match c:
            case App():
                return self.verdict(c) == ALL_ATOMIC
            case Match(branches=branches):
                return all(self.trivial_expr(b) for _, b in branches)
        return True

    def trivial_expr(self, e) -> bool:
        while isinstance(e, Let):
            if not self.trivial(e.bound):
                return False
            e = e.body
        return self.trivial(e)

    # -- translations

    def _return(self, c, k: str):
        y = self.fresh("$v")
        return Let(PVar(y), c, App(Var(k), (Var(y),), pos=c.pos), pos=c.pos)

    def _fun(self, f: Fun) -> Fun:
        if f.annotations.atomic:
            return replace(f, body=self.direct(f.body))
        k = self.fresh("$k")
        return replace(f, params=f.params + (k,), body=self.cps(f.body, k))

    def _identity(self):
        z = self.fresh("$v")
        return Fun((z,), Var(z))

    def cps(self, e, k: str):
        match e:
            case Var():
                return App(Var(k), (e,), pos=e.pos)
            case Lit() | Record():
                return self._return(e, k)
            case Fun():
                return self._return(self._fun(e), k)
            case App(fn=fn, args=args):
                if self.verdict(e) == NONE_ATOMIC:
                    return App(fn, args + (Var(k),), pos=e.pos)
                return self._return(e, k)
            case Match(scrutinee=s, branches=branches):
                return replace(e, branches=tuple((p, self.cps(b, k)) for p, b in branches))
            case Let(pattern=p, bound=c, body=body):
                if self.trivial(c):
                    return replace(e, bound=self.direct(c), body=self.cps(body, k))
                k2 = self.fresh("$k")
                y = self.fresh("$v")
                cont = Fun((y,), Let(p, Var(y), self.cps(body, k), pos=e.pos))
                return Let(PVar(k2), cont, self.cps(c, k2), pos=e.pos)
            case Error():
                return e
        raise TypeError(f"not an ANF expression: {e!r}")

    def direct(self, e):
        match e:
            case Var() | Lit() | Record() | Error():
                return e
            case Fun():
                return self._fun(e)
            case App(fn=fn, args=args):
                if self.verdict(e) == ALL_ATOMIC:
                    return e
                k = self.fresh("$k")
                return Let(PVar(k), self._identity(), App(fn, args + (Var(k),), pos=e.pos), pos=e.pos)
            case Match(branches=branches):
                return replace(e, branches=tuple((p, self.direct(b)) for p, b in branches))
            case Let(pattern=p, bound=c, body=body):
                if isinstance(c, App) and self.verdict(c) == NONE_ATOMIC:
                    k = self.fresh("$k")
                    call = App(c.fn, c.args + (Var(k),), pos=c.pos)
                    return Let(PVar(k), self._identity(),
                               Let(p, call, self.direct(body), pos=e.pos), pos=e.pos)
                return replace(e, bound=self.direct(c), body=self.direct(body))
        raise TypeError(f"not an ANF expression: {e!r}")

    def function(self, fd):
        if fd.name == "main" or fd.annotations.atomic:
            return replace(fd, body=self.direct(fd.body))
        k = self.fresh("$k")
        return replace(fd, params=fd.params + (Param(k),), body=self.cps(fd.body, k))


def cps_program(program: Program, analysis: Analysis) -> Program:
    """Selectively CPS-transform an ANF program analysed by ``analysis``."""
    t = _Cps(program, analysis)
    return relabel(replace(program, functions=tuple(t.function(fd) for fd in program.functions)))


def cps_term(e, k: str, program: Program, analysis: Analysis):
    return _Cps(program, analysis).cps(e, k)


def direct_term(e, program: Program, analysis: Analysis):
    return _Cps(program, analysis).direct(e)


def trivial(c, program: Program, analysis: Analysis) -> bool:
    return _Cps(program, analysis).trivial(c)
