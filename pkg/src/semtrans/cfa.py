"""Monovariant control-flow analysis by abstract interpretation.

The machine template is instantiated with a store whose addresses are term
labels, so every address holds a set of abstract values (or continuation
frames) and the state space is finite.  All partial configurations share one
global store; the analysis is the least fixed point of one synchronous step
over every configuration.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Union

from .anf import is_anf
from .errors import AnalysisError
from .syntax import (
    ANY, BASE_TYPES, PRIMITIVES, App, Error, Fun, FunId, Let, Lit, Match, PLit, PRecord, PType,
    PVar, PWild, Program, Record, RecordType, Var, enclosing_functions, free_names, label_table,
    pattern_vars, program_terms,
)

log = logging.getLogger(__name__)

Address = Union[int, str]
AbsEnv = tuple  # sorted ((name, address), ...)


@dataclass(frozen=True)
class BaseTp:
    tp: str


@dataclass(frozen=True)
class AnyTok:
    pass


@dataclass(frozen=True)
class PrimTok:
    op: str


@dataclass(frozen=True)
class ARecord:
    struct: str
    fields: tuple


@dataclass(frozen=True)
class AClosure:
    fun: int  # label of the fun term
    env: AbsEnv


@dataclass(frozen=True)
class ATopFun:
    name: str


@dataclass(frozen=True)
class AFrame:
    env: AbsEnv
    let: int  # label of the let whose body resumes
    next: Address


@dataclass(frozen=True)
class Halt:
    pass


HALT = Halt()


@dataclass(frozen=True)
class EvalC:
    env: AbsEnv
    expr: int  # label of the expression
    kont: Address


@dataclass(frozen=True)
class ContC:
    value: Address
    kont: Address


PRIM_RESULT = {"+": "Integer", "-": "Integer", "*": "Integer",
               "<": "Boolean", "<=": "Boolean", "eq?": "Boolean", "not": "Boolean"}
_LIT_TYPE = {str: "String", int: "Integer", bool: "Boolean"}


def _env(d: dict) -> AbsEnv:
    return tuple(sorted(d.items(), key=lambda kv: kv[0]))


def abstract_fun_id(v) -> FunId | None:
    match v:
        case AClosure(fun=label):
            return FunId("fun", label)
        case ATopFun(name):
            return FunId("top", name)
        case PrimTok(op):
            return FunId("prim", op)
    return None


@dataclass
class Store:
    values: dict = field(default_factory=dict)
    konts: dict = field(default_factory=dict)

    def copy(self) -> "Store":
        return Store({a: set(s) for a, s in self.values.items()},
                     {a: set(s) for a, s in self.konts.items()})

    def join(self, key, items) -> bool:
        kind, addr = key
        table = self.values if kind == "v" else self.konts
        cur = table.setdefault(addr, set())
        before = len(cur)
        cur |= items
        return len(cur) != before

    def get(self, key) -> set:
        kind, addr = key
        table = self.values if kind == "v" else self.konts
        return table.get(addr, set())

    def freeze(self):
        return ({a: frozenset(s) for a, s in self.values.items() if s},
                {a: frozenset(s) for a, s in self.konts.items() if s})

    def __eq__(self, other):
        return isinstance(other, Store) and self.freeze() == other.freeze()


@dataclass
class AbstractConfig:
    store: Store
    configs: set


@dataclass
class Analysis:
    program: Program
    callees: dict  # operator label -> frozenset[FunId]
    store: Store
    rounds: int
    transitions: int
    configs: int

    def sites(self):
        return sorted(self.callees)


# ---------------------------------------------------------------------------
# The abstract machine


class _Machine:
    def __init__(self, program: Program):
        if not is_anf(program):
            raise AnalysisError("the analysis needs a program in A-normal form")
        self.program = program
        self.table = label_table(program)
        self.defs = {fd.name: fd for fd in program.functions}
        self._needed: dict[int, frozenset] = {}

    def needed(self, label: int) -> frozenset:
        names = self._needed.get(label)
        if names is None:
            names = frozenset(free_names(self.table[label]))
            self._needed[label] = names
        return names

    def restrict(self, env: dict, label: int) -> AbsEnv:
        keep = self.needed(label)
        return _env({x: a for x, a in env.items() if x in keep})

    def addr(self, env: dict, name: str) -> Address | None:
        if name in env:
            return env[name]
        if name in self.defs:
            return f"top:{name}"
        if name in PRIMITIVES:
            return f"prim:{name}"
        return None

    # -- initial configuration

    def init_config(self) -> AbstractConfig:
        store = Store()
        for name in self.defs:
            store.join(("v", f"top:{name}"), {ATopFun(name)})
        for op in PRIMITIVES:
            store.join(("v", f"prim:{op}"), {PrimTok(op)})
        for key, vals in self.type_seeds().items():
            store.join(("v", key), vals)
        main = self.program.main
        env = {}
        for p in main.params:
            if f"type:{p.type}" not in store.values:
                raise AnalysisError(f"main parameter {p.name} has undeclared type {p.type}")
            env[p.name] = f"type:{p.type}"
        body = main.body.label
        store.join(("k", body), {HALT})
        return AbstractConfig(store, {EvalC(self.restrict(env, body), body, body)})

    def type_seeds(self) -> dict:
        seeds: dict[str, set] = {f"type:{tp}": {BaseTp(tp)} for tp in BASE_TYPES}
        seeds[f"type:{ANY}"] = {AnyTok()}
        record_types = {}
        for sd in self.program.structs:
            record_types[sd.name] = RecordType(sd.name, (ANY,) * len(sd.fields))
        for dd in self.program.datatypes:
            for v in dd.variants:
                if isinstance(v, RecordType):
                    record_types[v.struct] = v
        for r, rt in record_types.items():
            seeds[f"type:{r}"] = {ARecord(r, tuple(f"type:{f}" for f in rt.fields))}
        for dd in self.program.datatypes:
            seeds[f"type:{dd.name}"] = set()
        # a datatype listed as a variant contributes all of its values
        changed = True
        while changed:
            changed = False
            for dd in self.program.datatypes:
                cur = seeds[f"type:{dd.name}"]
                before = len(cur)
                for v in dd.variants:
                    if isinstance(v, RecordType):
                        cur.add(ARecord(v.struct, tuple(f"type:{f}" for f in v.fields)))
                    else:
                        cur |= seeds.get(f"type:{v}", set())
                changed |= len(cur) != before
        return seeds

    # -- pattern matching

    def match_addr(self, p, a: Address, store: Store, reads: set):
        """Ways ``p`` may match some value stored at ``a``: (bindings, definite)."""
        match p:
            case PVar(name):
                return [({name: a}, True)]
            case PWild():
                return [({}, True)]
        reads.add(("v", a))
        out = []
        for v in store.get(("v", a)):
            out.extend(self.match_value(p, v, a, store, reads))
        return out

    def match_value(self, p, v, a: Address, store: Store, reads: set):
        match p:
            case PVar(name):
                return [({name: a}, True)]
            case PWild():
                return [({}, True)]
            case PLit(value):
                if isinstance(v, BaseTp) and v.tp == _LIT_TYPE[type(value)]:
                    return [({}, False)]
                self._any_warning(v, p)
                return []
            case PType(tp, name):
                if isinstance(v, BaseTp) and v.tp == tp:
                    return [({name: a}, True)]
                self._any_warning(v, p)
                return []
            case PRecord(struct=r, items=items):
                if not (isinstance(v, ARecord) and v.struct == r and len(v.fields) == len(items)):
                    self._any_warning(v, p)
                    return []
                parts = [self.match_addr(i, fa, store, reads) for i, fa in zip(items, v.fields)]
                definite = all(isinstance(i, (PVar, PWild)) for i in items)
                out = []
                for combo in itertools.product(*parts):
                    binds = {}
                    for b, _ in combo:
                        binds.update(b)
                    out.append((binds, definite))
                return out
        raise TypeError(p)

    @staticmethod
    def _any_warning(v, p):
        if isinstance(v, AnyTok):
            log.warning("a value of type Any cannot be matched against %s; branch ignored", p)

    # -- transitions

    def step(self, config, store: Store):
        """One transition from ``config`` against ``store``.

        Returns the store keys read, the successor configurations and the
        store joins ``[(key, values)]``.
        """
        reads: set = set()
        succs: list = []
        writes: list = []
        if isinstance(config, ContC):
            reads.add(("k", config.kont))
            for frame in store.get(("k", config.kont)):
                if isinstance(frame, Halt):
                    continue
                let = self.table[frame.let]
                base = dict(frame.env)
                for binds, _ in self.match_addr(let.pattern, config.value, store, reads):
                    env = {**base, **binds}
                    succs.append(EvalC(self.restrict(env, let.body.label), let.body.label, frame.next))
            return reads, succs, writes

        env = dict(config.env)
        t = self.table[config.expr]
        k = config.kont
        match t:
            case Var(name):
                a = self.addr(env, name)
                if a is not None:
                    reads.add(("v", a))
                    writes.append((("v", t.label), set(store.get(("v", a)))))
                    succs.append(ContC(a, k))
            case Lit(value):
                writes.append((("v", t.label), {BaseTp(_LIT_TYPE[type(value)])}))
                succs.append(ContC(t.label, k))
            case Record(struct=r, fields=fields):
                addrs = tuple(self.addr(env, f.name) for f in fields)
                if None not in addrs:
                    writes.append((("v", t.label), {ARecord(r, addrs)}))
                    succs.append(ContC(t.label, k))
            case Fun():
                writes.append((("v", t.label), {AClosure(t.label, self.restrict(env, t.label))}))
                succs.append(ContC(t.label, k))
            case Let(bound=c):
                keep = self.needed(t.body.label) - set(pattern_vars(t.pattern))
                frame = AFrame(_env({x: a for x, a in env.items() if x in keep}), t.label, k)
                writes.append((("k", c.label), {frame}))
                succs.append(EvalC(self.restrict(env, c.label), c.label, c.label))
            case App(fn=fn, args=args):
                fa = self.addr(env, fn.name)
                arg_addrs = [self.addr(env, a.name) for a in args]
                if fa is None or None in arg_addrs:
                    return reads, succs, writes
                reads.add(("v", fa))
                fvals = store.get(("v", fa))
                writes.append((("v", fn.label), set(fvals)))
                for v in fvals:
                    self.apply(v, arg_addrs, k, t.label, succs, writes)
            case Match(scrutinee=s, branches=branches):
                a = self.addr(env, s.name)
                if a is None:
                    return reads, succs, writes
                reads.add(("v", a))
                for v in store.get(("v", a)):
                    for p, body in branches:
                        found = self.match_value(p, v, a, store, reads)
                        for binds, _ in found:
                            new = {**env, **binds}
                            succs.append(EvalC(self.restrict(new, body.label), body.label, k))
                        if any(definite for _, definite in found):
                            break
            case Error():
                pass
        return reads, succs, writes

    def apply(self, v, arg_addrs, k, label, succs, writes):
        match v:
            case AClosure(fun=fl, env=cenv):
                fun = self.table[fl]
                if len(fun.params) == len(arg_addrs):
                    env = {**dict(cenv), **dict(zip(fun.params, arg_addrs))}
                    succs.append(EvalC(self.restrict(env, fun.body.label), fun.body.label, k))
            case ATopFun(name):
                fd = self.defs[name]
                if len(fd.params) == len(arg_addrs):
                    env = dict(zip(fd.param_names, arg_addrs))
                    succs.append(EvalC(self.restrict(env, fd.body.label), fd.body.label, k))
            case PrimTok(op):
                if PRIMITIVES[op] == len(arg_addrs):
                    writes.append((("v", label), {BaseTp(PRIM_RESULT[op])}))
                    succs.append(ContC(label, k))


# ---------------------------------------------------------------------------
# Fixed point


def init_config(program: Program) -> AbstractConfig:
    return _Machine(program).init_config()


def abstract_step(program: Program, config: AbstractConfig) -> AbstractConfig:
    """One synchronous step of every partial configuration against the shared store."""
    m = _Machine(program)
    new_store = config.store.copy()
    new_configs = set(config.configs)
    for gamma in config.configs:
        _, succs, writes = m.step(gamma, config.store)
        for key, vals in writes:
            new_store.join(key, vals)
        new_configs.update(succs)
    return AbstractConfig(new_store, new_configs)


def analyze(program: Program, naive: bool = False) -> Analysis:
    """Least fixed point of :func:`abstract_step`, and the callees of every call site.

    The default strategy performs the same synchronous rounds but re-runs a
    configuration only when it is new or a store entry it read has grown;
    ``naive=True`` recomputes every configuration each round.
    """
    m = _Machine(program)
    state = m.init_config()
    store = state.store
    configs: dict = {c: None for c in state.configs}  # config -> store keys it read
    changed: set = set()
    rounds = transitions = 0
    while True:
        todo = [c for c, reads in configs.items()
                if naive or reads is None or not reads.isdisjoint(changed)]
        if not todo:
            break
        pending: list = []
        fresh: list = []
        for c in todo:
            reads, succs, writes = m.step(c, store)
            transitions += 1
            configs[c] = frozenset(reads)
            pending.extend(writes)
            fresh.extend(s for s in succs if s not in configs)
        # joins become visible only at the end of the round
        changed = set()
        for key, vals in pending:
            if store.join(key, vals):
                changed.add(key)
        for s in fresh:
            configs.setdefault(s, None)
        rounds += 1
        if naive and not changed and not fresh:
            break
    return Analysis(program, _callees(program, store), store, rounds, transitions, len(configs))


def _callees(program: Program, store: Store) -> dict:
    out = {}
    for t in program_terms(program):
        if isinstance(t, App) and isinstance(t.fn, Var):
            vals = store.get(("v", t.fn.label))
            out[t.fn.label] = frozenset(f for f in map(abstract_fun_id, vals) if f is not None)
    return out


# ---------------------------------------------------------------------------
# Reporting


def describe(fid: FunId, enclosing: dict) -> str:
    match fid.kind:
        case "fun":
            return f"(fun {fid.key} {enclosing.get(fid.key, '?')})"
        case "top":
            return f"(def {fid.key})"
    return f"(prim {fid.key})"


def dump_analysis(analysis: Analysis) -> str:
    program = analysis.program
    enclosing = enclosing_functions(program)
    sites = {t.fn.label: t for t in program_terms(program) if isinstance(t, App)}
    lines = []
    for label in analysis.sites():
        pos = sites[label].pos
        where = f"{pos[0]}:{pos[1]}" if pos else "?"
        names = " ".join(describe(f, enclosing) for f in sorted(analysis.callees[label]))
        lines.append(f'((site {label} "{where}") (callees{" " if names else ""}{names}))')
    return "\n".join(lines) + ("\n" if lines else "")
