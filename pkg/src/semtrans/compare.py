"""Structural comparison of programs up to renaming.

Two programs are equivalent when a bijection between their top-level
function names, one between their structure labels, and one between bound
variables make them equal.  Annotations are ignored, structures are compared
by arity only, and the branches of a match whose patterns are all distinct
record patterns may appear in any order.  Names defined in both programs
(``main`` in particular) must correspond to themselves.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Iterator

from .syntax import (
    PRIMITIVES, App, Error, Fun, Let, Lit, Match, PLit, PRecord, PType, PVar, PWild, Program,
    Record, Var,
)


@dataclass(frozen=True)
class _State:
    funs: tuple = ()      # ((name1, name2), ...)
    structs: tuple = ()
    pending: tuple = ()   # function pairs still to compare

    def lookup(self, table, a, b):
        """Extend a bijection with a↦b; None if that contradicts it."""
        pairs = getattr(self, table)
        for x, y in pairs:
            if x == a or y == b:
                return self if (x == a and y == b) else None
        new = replace(self, **{table: pairs + ((a, b),)})
        if table == "funs":
            new = replace(new, pending=new.pending + ((a, b),))
        return new


class _Comparer:
    def __init__(self, p1: Program, p2: Program):
        self.p1, self.p2 = p1, p2
        self.defs1 = {fd.name: fd for fd in p1.functions}
        self.defs2 = {fd.name: fd for fd in p2.functions}
        self.ar1, self.ar2 = p1.struct_arities(), p2.struct_arities()

    # -- names

    def struct(self, r1, r2, st):
        if self.ar1.get(r1) != self.ar2.get(r2):
            return None
        return st.lookup("structs", r1, r2)

    def var(self, x1, x2, env, st):
        fwd, rev = env
        if x1 in fwd or x2 in rev:
            return st if fwd.get(x1) == x2 and rev.get(x2) == x1 else None
        if x1 in self.defs1 and x2 in self.defs2:
            return st.lookup("funs", x1, x2)
        if x1 in PRIMITIVES and x1 == x2:
            return st
        if x1 not in self.defs1 and x2 not in self.defs2 and x1 == x2:
            return st  # free in both, e.g. an unbound variable
        return None

    # -- patterns

    def pattern(self, a, b, fwd, rev, st):
        """Compare patterns, extending ``fwd``/``rev`` in place."""
        match a:
            case PVar(x) | PType(_, x):
                if type(a) is not type(b) or (isinstance(a, PType) and a.tp != b.tp):
                    return None
                fwd[x] = b.name
                rev[b.name] = x
                return st
            case PWild():
                return st if isinstance(b, PWild) else None
            case PLit():
                return st if a == b else None
            case PRecord(struct=r, items=items):
                if not isinstance(b, PRecord) or len(items) != len(b.items):
                    return None
                st = self.struct(r, b.struct, st)
                for i, j in zip(items, b.items):
                    if st is None:
                        return None
                    st = self.pattern(i, j, fwd, rev, st)
                return st
        return None

    def bind(self, pats1, pats2, env, st):
        fwd, rev = dict(env[0]), dict(env[1])
        for a, b in zip(pats1, pats2):
            st = self.pattern(a, b, fwd, rev, st)
            if st is None:
                return None, None
        return st, (fwd, rev)

    # -- terms

    def all(self, pairs, env, st) -> Iterator[_State]:
        if not pairs:
            yield st
            return
        (a, b), rest = pairs[0], pairs[1:]
        for st1 in self.term(a, b, env, st):
            yield from self.all(rest, env, st1)

    def term(self, a, b, env, st) -> Iterator[_State]:
        if type(a) is not type(b):
            return
        match a:
            case Var(x):
                st = self.var(x, b.name, env, st)
                if st is not None:
                    yield st
            case Lit() | Error():
                if a == b:
                    yield st
            case Fun(params=params, body=body):
                if len(params) != len(b.params):
                    return
                st, env2 = self.bind([PVar(x) for x in params], [PVar(y) for y in b.params], env, st)
                yield from self.term(body, b.body, env2, st)
            case App(fn=fn, args=args):
                if len(args) == len(b.args):
                    yield from self.all(list(zip((fn, *args), (b.fn, *b.args))), env, st)
            case Record(struct=r, fields=fields):
                if len(fields) == len(b.fields):
                    st = self.struct(r, b.struct, st)
                    if st is not None:
                        yield from self.all(list(zip(fields, b.fields)), env, st)
            case Let(pattern=p, bound=c, body=body):
                for st1 in self.term(c, b.bound, env, st):
                    st2, env2 = self.bind([p], [b.pattern], env, st1)
                    if st2 is not None:
                        yield from self.term(body, b.body, env2, st2)
            case Match(scrutinee=s, branches=branches):
                if len(branches) != len(b.branches):
                    return
                movable = _disjoint(branches) and _disjoint(b.branches)
                for st1 in self.term(s, b.scrutinee, env, st):
                    yield from self.branches(list(branches), list(b.branches), movable, env, st1)

    def branches(self, bs1, bs2, movable, env, st):
        if not bs1:
            yield st
            return
        candidates = range(len(bs2)) if movable else [0]
        p1, e1 = bs1[0]
        for j in candidates:
            p2, e2 = bs2[j]
            st1, env2 = self.bind([p1], [p2], env, st)
            if st1 is None:
                continue
            for st2 in self.term(e1, e2, env2, st1):
                yield from self.branches(bs1[1:], bs2[:j] + bs2[j + 1:], movable, env, st2)

    # -- programs

    def functions(self, st) -> Iterator[_State]:
        if not st.pending:
            yield st
            return
        (f1, f2), rest = st.pending[0], st.pending[1:]
        st = replace(st, pending=rest)
        d1, d2 = self.defs1[f1], self.defs2[f2]
        if len(d1.params) != len(d2.params):
            return
        if f1 == "main" and [p.type for p in d1.params] != [p.type for p in d2.params]:
            return
        st1, env = self.bind([PVar(x) for x in d1.param_names], [PVar(y) for y in d2.param_names],
                             ({}, {}), st)
        for st2 in self.term(d1.body, d2.body, env, st1):
            yield from self.functions(st2)

    def run(self) -> bool:
        if len(self.defs1) != len(self.defs2) or len(self.ar1) != len(self.ar2):
            return False
        st = _State()
        for name in sorted(set(self.defs1) & set(self.defs2)):
            st = st.lookup("funs", name, name)
        for r in sorted(set(self.ar1) & set(self.ar2)):
            st = st.lookup("structs", r, r)
            if st is None or self.ar1[r] != self.ar2[r]:
                return False
        if "main" not in self.defs1 or "main" not in self.defs2:
            return False
        for final in self.functions(st):
            if self._complete(final):
                return True
        return False

    def _complete(self, st) -> bool:
        rest1 = set(self.defs1) - {a for a, _ in st.funs}
        rest2 = set(self.defs2) - {b for _, b in st.funs}
        if rest1 or rest2:
            # unreachable functions: try every pairing
            for perm in itertools.permutations(sorted(rest2)):
                trial = st
                for a, b in zip(sorted(rest1), perm):
                    trial = trial.lookup("funs", a, b)
                if trial is not None and any(self._structs_ok(s) for s in self.functions(trial)):
                    return True
            return False
        return self._structs_ok(st)

    def _structs_ok(self, st) -> bool:
        used1 = {a for a, _ in st.structs}
        used2 = {b for _, b in st.structs}
        left1 = sorted(self.ar1[r] for r in self.ar1 if r not in used1)
        left2 = sorted(self.ar2[r] for r in self.ar2 if r not in used2)
        return left1 == left2


def _disjoint(branches) -> bool:
    """Branches with record patterns of pairwise distinct labels match disjoint values."""
    labels = [p.struct if isinstance(p, PRecord) else None for p, _ in branches]
    return None not in labels and len(set(labels)) == len(labels)


def alpha_equivalent(p1: Program, p2: Program) -> bool:
    return _Comparer(p1, p2).run()
