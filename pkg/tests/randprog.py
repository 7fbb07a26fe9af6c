"""Seeded generator of random well-formed programs for property tests."""
from __future__ import annotations

import random

from semtrans.syntax import (
    App, DataDef, Error, Fun, FunDef, Let, Lit, Match, Param, PLit, PRecord, Program, PType, PVar,
    PWild, Record, RecordType, Var, relabel,
)

STRUCTS = {"P": 2, "Q": 1, "N": 0}
NAMES = ["a", "b", "c", "x", "y"]
PRIMS = {"+": 2, "-": 2, "<": 2, "eq?": 2, "not": 1}


class Generator:
    def __init__(self, seed: int, max_depth: int = 6, annotate: bool = False):
        self.rng = random.Random(seed)
        self.max_depth = max_depth
        self.annotate = annotate
        self.funs: dict[str, int] = {}

    def program(self) -> Program:
        rng = self.rng
        self.funs = {f"f{i}": rng.randint(1, 2) for i in range(rng.randint(0, 2))}
        functions = []
        for name, arity in self.funs.items():
            params = NAMES[:arity] if rng.random() < 0.5 else rng.sample(NAMES, arity)
            body = self.term(rng.randint(1, self.max_depth), list(params))
            functions.append(FunDef(name, tuple(Param(p) for p in params), body))
        main_body = self.term(rng.randint(1, self.max_depth), ["n"])
        functions.append(FunDef("main", (Param("n", "Integer"),), main_body))
        datatypes = (DataDef("T", tuple(RecordType(r, ("Any",) * k) for r, k in STRUCTS.items())),)
        return relabel(Program(datatypes, (), tuple(functions)))

    # -- terms

    def leaf(self, scope):
        rng = self.rng
        roll = rng.random()
        if scope and roll < 0.55:
            return Var(rng.choice(scope))
        if roll < 0.65 and self.funs:
            return Var(rng.choice(sorted(self.funs)))
        if roll < 0.7:
            return Var(rng.choice(sorted(PRIMS)))
        return Lit(rng.choice([0, 1, 2, -1, True, False, "s"]))

    def term(self, depth: int, scope: list[str]):
        rng = self.rng
        if depth <= 1:
            return self.leaf(scope)
        d = depth - 1
        kind = rng.choices(
            ["leaf", "app", "call", "prim", "fun", "record", "let", "letrec", "match", "if", "error"],
            [2, 2, 2, 2, 2, 1, 3, 1, 2, 1, 0.3])[0]
        match kind:
            case "leaf":
                return self.leaf(scope)
            case "app":
                n = rng.randint(0, 2)
                return App(self.term(d, scope), tuple(self.term(d, scope) for _ in range(n)))
            case "call" if self.funs:
                f = rng.choice(sorted(self.funs))
                return App(Var(f), tuple(self.term(d, scope) for _ in range(self.funs[f])))
            case "prim" | "call":
                op = rng.choice(sorted(PRIMS))
                return App(Var(op), tuple(self.term(d, scope) for _ in range(PRIMS[op])))
            case "fun":
                params = tuple(rng.sample(NAMES, rng.randint(0, 2)))
                return Fun(params, self.term(d, scope + list(params)), self.annotations())
            case "record":
                r = rng.choice(sorted(STRUCTS))
                return Record(r, tuple(self.term(d, scope) for _ in range(STRUCTS[r])))
            case "let":
                x = rng.choice(NAMES)
                return Let(PVar(x), self.term(d, scope), self.term(d, scope + [x]))
            case "letrec":
                x, y = rng.sample(NAMES, 2)
                return Let(PRecord("P", (PVar(x), PVar(y))), self.term(d, scope),
                           self.term(d, scope + [x, y]))
            case "match":
                return Match(self.term(d, scope), self.branches(d, scope))
            case "if":
                return Match(self.term(d, scope), ((PLit(True), self.term(d, scope)),
                                                   (PLit(False), self.term(d, scope))))
            case "error":
                return Error(rng.choice(["boom", "oops"]))
        raise AssertionError(kind)

    def branches(self, d, scope):
        rng = self.rng
        out = []
        for _ in range(rng.randint(1, 3)):
            roll = rng.random()
            if roll < 0.25:
                p, bound = PLit(rng.choice([0, 1, True, "s"])), []
            elif roll < 0.45:
                x = rng.choice(NAMES)
                p, bound = PType(rng.choice(["Integer", "Boolean", "String"]), x), [x]
            elif roll < 0.75:
                x = rng.choice(NAMES)
                p, bound = PRecord("P", (PVar(x), PWild())), [x]
            else:
                p, bound = PRecord("Q", (PWild(),)), []
            out.append((p, self.term(d, scope + bound)))
        if rng.random() < 0.6:
            x = rng.choice(NAMES)
            out.append((PVar(x), self.term(d, scope + [x])))
        return tuple(out)

    def annotations(self):
        from semtrans.syntax import NO_ANNOTATIONS, Annotations
        if not self.annotate:
            return NO_ANNOTATIONS
        return Annotations(atomic=self.rng.random() < 0.3, no_defun=self.rng.random() < 0.2)


def random_program(seed: int, max_depth: int = 6, annotate: bool = False) -> Program:
    return Generator(seed, max_depth, annotate).program()


def depth(t) -> int:
    from semtrans.syntax import subterms
    subs = subterms(t)
    return 1 + max((depth(s) for s in subs), default=0)
