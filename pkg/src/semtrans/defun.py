"""Selective defunctionalization.

Function spaces whose members may all be defunctionalized become records:
every ``fun`` turns into a record of its free variables, and calls through
such values go to a generated ``apply`` function that dispatches on the
record's label.  Functions marked ``#:no-defun`` stay higher-order.
"""
from __future__ import annotations

from dataclasses import replace

from .cfa import Analysis
from .errors import ArityConflict, DuplicateConstructor, MixedDefun
from .syntax import (
    PRIMITIVES, App, Error, FreshNames, Fun, FunDef, FunId, Let, Lit, Match, Param, PRecord,
    Program, PVar, Record, StructDef, Var, all_names, label_table, pattern_vars,
    program_terms as walk_program, relabel, substitute, walk,
)


def ordered_free(term) -> list[str]:
    """Free identifiers (globals included) in order of first occurrence."""
    seen: dict[str, None] = {}

    def go(t, bound):
        match t:
            case Var(name):
                if name not in bound:
                    seen.setdefault(name)
            case Fun(params=params, body=body):
                go(body, bound | set(params))
            case Let(pattern=p, bound=c, body=body):
                go(c, bound)
                go(body, bound | set(pattern_vars(p)))
            case Match(scrutinee=s, branches=branches):
                go(s, bound)
                for p, b in branches:
                    go(b, bound | set(pattern_vars(p)))
            case App(fn=fn, args=args):
                for sub in (fn, *args):
                    go(sub, bound)
            case Record(fields=fields):
                for sub in fields:
                    go(sub, bound)

    go(term, frozenset())
    return list(seen)


def field_order(name: str):
    # generated names sort among user names as if the "$" were absent
    return (name.lstrip("$"), name)


class _Defun:
    def __init__(self, program: Program, analysis: Analysis):
        self.program = program
        self.analysis = analysis
        self.table = label_table(program)
        self.defs = {fd.name: fd for fd in program.functions}
        self.fresh = FreshNames(all_names(program))
        self.taken = set(program.struct_arities()) | set(self.defs) | {
            dd.name for dd in program.datatypes}
        self.ctor_names: dict[FunId, str] = {}
        self.ctor_fields: dict[FunId, tuple[str, ...]] = {}
        self.structs: list[StructDef] = []
        self.applies: dict[frozenset, str] = {}
        self.apply_arity: dict[frozenset, int] = {}
        self.pending: list[frozenset] = []
        self.ordinals = self._fun_ordinals()
        self.scope: dict[int, frozenset] = {}
        self._record_scopes()
        self.group_of = self._apply_groups()

    def _fun_ordinals(self) -> dict[int, tuple[str, int]]:
        out = {}
        for fd in self.program.functions:
            n = 0
            for t in walk(fd.body):
                if isinstance(t, Fun):
                    n += 1
                    out[t.label] = (fd.name, n)
        return out

    def _record_scopes(self):
        # local variables in scope at every fun and call, for telling
        # captured variables apart from references to globals
        def go(t, bound):
            match t:
                case Fun(params=params, body=body):
                    self.scope[t.label] = bound
                    go(body, bound | set(params))
                case Let(pattern=p, bound=c, body=body):
                    go(c, bound)
                    go(body, bound | set(pattern_vars(p)))
                case Match(scrutinee=s, branches=branches):
                    go(s, bound)
                    for p, b in branches:
                        go(b, bound | set(pattern_vars(p)))
                case App(fn=fn, args=args):
                    self.scope[t.label] = bound
                    for sub in (fn, *args):
                        go(sub, bound)
                case Record(fields=fields):
                    for sub in fields:
                        go(sub, bound)

        for fd in self.program.functions:
            go(fd.body, frozenset(fd.param_names))

    def _apply_groups(self) -> dict[FunId, frozenset]:
        # Call sites whose callee sets overlap share one apply function, so
        # every function space gets a single dispatcher.
        groups: list[set] = []
        for t in walk_program(self.program):
            if not (isinstance(t, App) and isinstance(t.fn, Var)):
                continue
            bound = self.scope[t.label]
            if self.top_level(t.fn.name, bound) or self.prim_op(t.fn.name, bound):
                continue
            callees = self.analysis.callees.get(t.fn.label, frozenset())
            if not callees or not all(self.defun(f) for f in callees):
                continue
            merged = set(callees)
            rest = []
            for g in groups:
                if g & merged:
                    merged |= g
                else:
                    rest.append(g)
            groups = rest + [merged]
        return {f: frozenset(g) for g in groups for f in g}

    # -- predicates

    def defun(self, fid: FunId) -> bool:
        match fid.kind:
            case "fun":
                return not self.table[fid.key].annotations.no_defun
            case "top":
                return not self.defs[fid.key].annotations.no_defun
        return True

    def top_level(self, name, bound) -> bool:
        return name in self.defs and name not in bound

    def prim_op(self, name, bound) -> bool:
        return name in PRIMITIVES and name not in bound and name not in self.defs

    # -- constructors

    def fvs(self, label: int) -> tuple[str, ...]:
        fun = self.table[label]
        scope = self.scope[label]
        return tuple(sorted((x for x in ordered_free(fun) if x in scope), key=field_order))

    def constructor(self, fid: FunId) -> str:
        name = self.ctor_names.get(fid)
        if name is not None:
            return name
        match fid.kind:
            case "fun":
                ann = self.table[fid.key].annotations.name
                if ann is not None:
                    name = ann
                else:
                    enclosing, n = self.ordinals[fid.key]
                    name = f"Fun-{enclosing}-{n}"
                fields = self.fvs(fid.key)
            case "top":
                name, fields = f"Top-{fid.key}", ()
            case _:
                name, fields = f"Prim-{fid.key}", ()
        if name in self.taken:
            raise DuplicateConstructor(f"constructor name {name} is already in use")
        self.taken.add(name)
        self.ctor_names[fid] = name
        self.ctor_fields[fid] = fields
        self.structs.append(StructDef(name, fields))
        return name

    # -- the translation

    def var(self, x: Var, bound):
        if self.prim_op(x.name, bound):
            return Record(self.constructor(FunId("prim", x.name)), (), pos=x.pos)
        if self.top_level(x.name, bound) and self.defun(FunId("top", x.name)):
            return Record(self.constructor(FunId("top", x.name)), (), pos=x.pos)
        return x

    def term(self, t, bound):
        match t:
            case Var():
                return self.var(t, bound)
            case Lit() | Error():
                return t
            case Record(fields=fields):
                return replace(t, fields=tuple(self.term(f, bound) for f in fields))
            case Fun(params=params, body=body):
                fid = FunId("fun", t.label)
                if self.defun(fid):
                    name = self.constructor(fid)
                    return Record(name, tuple(Var(x) for x in self.ctor_fields[fid]), pos=t.pos)
                return replace(t, body=self.term(body, bound | set(params)))
            case App(fn=fn, args=args):
                new_args = tuple(self.term(a, bound) for a in args)
                if isinstance(fn, Var) and (self.top_level(fn.name, bound) or self.prim_op(fn.name, bound)):
                    return replace(t, args=new_args)
                callees = self.analysis.callees.get(fn.label, frozenset()) if isinstance(fn, Var) else frozenset()
                flags = [self.defun(f) for f in callees]
                if callees and all(flags):
                    name = self.apply_for(callees, len(args), t)
                    return App(Var(name), (self.term(fn, bound),) + new_args, pos=t.pos)
                if any(flags):
                    raise MixedDefun(fn.label, sorted(callees), t.pos)
                return replace(t, fn=self.term(fn, bound), args=new_args)
            case Let(pattern=p, bound=c, body=body):
                return replace(t, bound=self.term(c, bound),
                               body=self.term(body, bound | set(pattern_vars(p))))
            case Match(scrutinee=s, branches=branches):
                return replace(t, scrutinee=self.term(s, bound), branches=tuple(
                    (p, self.term(b, bound | set(pattern_vars(p)))) for p, b in branches))
        raise TypeError(f"not a term: {t!r}")

    # -- apply functions

    def arity(self, fid: FunId) -> int:
        match fid.kind:
            case "fun":
                return len(self.table[fid.key].params)
            case "top":
                return len(self.defs[fid.key].params)
        return PRIMITIVES[fid.key]

    def apply_for(self, callees: frozenset, nargs: int, site: App) -> str:
        callees = self.group_of.get(next(iter(callees)), callees)
        name = self.applies.get(callees)
        if name is not None:
            return name
        arities = {self.arity(f) for f in callees}
        if len(arities) != 1 or nargs not in arities:
            raise ArityConflict(site.fn.label, sorted(callees), site.pos)
        names = {self.table[f.key].annotations.name for f in callees if f.kind == "fun"}
        if len(callees) == 1 and len(names) == 1 and None not in names:
            base = f"apply-{names.pop()}"
            name = base if base not in self.taken else self.fresh(base + "-")
        else:
            name = self.fresh("apply-")
            while name in self.taken:
                name = self.fresh("apply-")
        self.taken.add(name)
        self.applies[callees] = name
        self.apply_arity[callees] = nargs
        self.pending.append(callees)
        return name

    def branch(self, fid: FunId, xs: tuple[str, ...]):
        ctor = self.constructor(fid)
        fields = self.ctor_fields[fid]
        pattern = PRecord(ctor, tuple(PVar(f) for f in fields))
        match fid.kind:
            case "fun":
                fun = self.table[fid.key]
                body = self.term(fun.body, frozenset(fields) | set(fun.params))
                for y, x in zip(fun.params, xs):
                    body = substitute(body, y, Var(x))
                return pattern, body
            case "top":
                return pattern, App(Var(fid.key), tuple(Var(x) for x in xs))
        return pattern, App(Var(fid.key), tuple(Var(x) for x in xs))

    def make_apply(self, callees: frozenset) -> FunDef:
        f = self.fresh("$f")
        xs = tuple(self.fresh("$x") for _ in range(self.apply_arity[callees]))
        order = sorted(callees, key=lambda fid: ({"fun": 0, "top": 1, "prim": 2}[fid.kind], fid.key))
        branches = tuple(self.branch(fid, xs) for fid in order)
        if len(branches) == 1:
            p, b = branches[0]
            body = Let(p, Var(f), b)
        else:
            body = Match(Var(f), branches)
        return FunDef(self.applies[callees], (Param(f),) + tuple(Param(x) for x in xs), body)

    def run(self) -> Program:
        functions = [replace(fd, body=self.term(fd.body, frozenset(fd.param_names)))
                     for fd in self.program.functions]
        i = 0
        while i < len(self.pending):
            functions.append(self.make_apply(self.pending[i]))
            i += 1
        return relabel(replace(self.program, structs=self.program.structs + tuple(self.structs),
                               functions=tuple(functions)))


def defun_program(program: Program, analysis: Analysis) -> Program:
    """Defunctionalize every function space whose callees all allow it."""
    return _Defun(program, analysis).run()


def constructor_name(program: Program, fid: FunId, analysis: Analysis | None = None) -> str:
    d = _Defun(program, analysis or Analysis(program, {}, None, 0, 0, 0))
    return d.constructor(fid)
