"""Abstract syntax of the interpreter definition language, its parser and printer.

Terms are immutable dataclasses.  Every term node carries a ``label`` (dense
integers in preorder, see :func:`relabel`) and a source ``pos``; neither takes
part in equality, so two programs compare equal when they agree structurally.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator, Union

from . import sexpr
from .errors import DuplicateName, MissingMain, SourceSyntaxError, UnannotatedMain
from .sexpr import Atom, SList, Str

PRIMITIVES = {"+": 2, "-": 2, "*": 2, "<": 2, "<=": 2, "eq?": 2, "not": 1}
BASE_TYPES = ("String", "Integer", "Boolean")
ANY = "Any"
KEYWORDS = {"def", "def-data", "def-struct", "fun", "let", "match", "error", "if", "_"}
SKIPPED_FORMS = {"require", "provide", "module+"}


# ---------------------------------------------------------------------------
# Abstract syntax


@dataclass(frozen=True)
class Annotations:
    atomic: bool = False
    no_defun: bool = False
    name: str | None = None


NO_ANNOTATIONS = Annotations()


@dataclass(frozen=True)
class Node:
    label: int = field(default=-1, compare=False, repr=False, kw_only=True)
    pos: tuple[int, int] | None = field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Var(Node):
    name: str


@dataclass(frozen=True, eq=False)
class Lit(Node):
    value: Union[int, bool, str]

    def __eq__(self, other):
        return (
            isinstance(other, Lit)
            and type(self.value) is type(other.value)
            and self.value == other.value
        )

    def __hash__(self):
        return hash((type(self.value), self.value))


@dataclass(frozen=True)
class Fun(Node):
    params: tuple[str, ...]
    body: "Term"
    annotations: Annotations = NO_ANNOTATIONS


@dataclass(frozen=True)
class App(Node):
    fn: "Term"
    args: tuple["Term", ...]


@dataclass(frozen=True)
class Record(Node):
    struct: str
    fields: tuple["Term", ...]


@dataclass(frozen=True)
class Let(Node):
    pattern: "Pattern"
    bound: "Term"
    body: "Term"


@dataclass(frozen=True)
class Match(Node):
    scrutinee: "Term"
    branches: tuple[tuple["Pattern", "Term"], ...]


@dataclass(frozen=True)
class Error(Node):
    message: str


Term = Union[Var, Lit, Fun, App, Record, Let, Match, Error]


@dataclass(frozen=True)
class PVar:
    name: str


@dataclass(frozen=True, eq=False)
class PLit:
    value: Union[int, bool, str]

    def __eq__(self, other):
        return (
            isinstance(other, PLit)
            and type(self.value) is type(other.value)
            and self.value == other.value
        )

    def __hash__(self):
        return hash((type(self.value), self.value))


@dataclass(frozen=True)
class PWild:
    pass


@dataclass(frozen=True)
class PRecord:
    struct: str
    items: tuple["Pattern", ...]


@dataclass(frozen=True)
class PType:
    tp: str
    name: str


Pattern = Union[PVar, PLit, PWild, PRecord, PType]


@dataclass(frozen=True)
class RecordType:
    struct: str
    fields: tuple[str, ...]


TypeRef = Union[str, RecordType]


@dataclass(frozen=True)
class DataDef:
    name: str
    variants: tuple[TypeRef, ...]


@dataclass(frozen=True)
class StructDef:
    name: str
    fields: tuple[str, ...]


@dataclass(frozen=True)
class Param:
    name: str
    type: str | None = None


@dataclass(frozen=True)
class FunDef:
    name: str
    params: tuple[Param, ...]
    body: Term
    annotations: Annotations = NO_ANNOTATIONS
    pos: tuple[int, int] | None = field(default=None, compare=False, repr=False)

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)


@dataclass(frozen=True)
class Program:
    datatypes: tuple[DataDef, ...]
    structs: tuple[StructDef, ...]
    functions: tuple[FunDef, ...]

    def function(self, name: str) -> FunDef:
        for fd in self.functions:
            if fd.name == name:
                return fd
        raise KeyError(name)

    @property
    def main(self) -> FunDef:
        return self.function("main")

    @property
    def function_names(self) -> frozenset[str]:
        return frozenset(fd.name for fd in self.functions)

    def struct_arities(self) -> dict[str, int]:
        arities = {}
        for dd in self.datatypes:
            for v in dd.variants:
                if isinstance(v, RecordType):
                    arities[v.struct] = len(v.fields)
        for sd in self.structs:
            arities[sd.name] = len(sd.fields)
        return arities

    def datatype(self, name: str) -> DataDef | None:
        for dd in self.datatypes:
            if dd.name == name:
                return dd
        return None


@dataclass(frozen=True, order=True)
class FunId:
    """A function that may be applied: a ``fun`` creation site, a definition or a primitive."""

    kind: str  # "fun" (key: label), "top" or "prim" (key: name)
    key: Union[int, str]

    def __str__(self):
        return f"{self.kind}:{self.key}"


# ---------------------------------------------------------------------------
# Generic traversal


def subterms(t: Term) -> tuple[Term, ...]:
    match t:
        case Fun(body=body):
            return (body,)
        case App(fn=fn, args=args):
            return (fn, *args)
        case Record(fields=fields):
            return fields
        case Let(bound=bound, body=body):
            return (bound, body)
        case Match(scrutinee=s, branches=branches):
            return (s, *(b for _, b in branches))
    return ()


def walk(t: Term) -> Iterator[Term]:
    """Preorder iteration over every term node."""
    stack = [t]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(subterms(node)))


def program_terms(program: Program) -> Iterator[Term]:
    for fd in program.functions:
        yield from walk(fd.body)


def pattern_vars(p: Pattern) -> list[str]:
    match p:
        case PVar(name) | PType(_, name):
            return [name]
        case PRecord(items=items):
            return [v for item in items for v in pattern_vars(item)]
    return []


def pattern_structs(p: Pattern) -> Iterator[PRecord]:
    if isinstance(p, PRecord):
        yield p
        for item in p.items:
            yield from pattern_structs(item)


def term_size(t: Term) -> int:
    return sum(1 for _ in walk(t))


def program_size(program: Program) -> int:
    return sum(term_size(fd.body) for fd in program.functions)


def all_names(program: Program) -> set[str]:
    """Every identifier mentioned anywhere, for fresh-name generation."""
    names = set(program.function_names)
    for fd in program.functions:
        names.update(fd.param_names)
        for t in walk(fd.body):
            match t:
                case Var(name):
                    names.add(name)
                case Fun(params=params):
                    names.update(params)
                case Let(pattern=p):
                    names.update(pattern_vars(p))
                case Match(branches=branches):
                    for p, _ in branches:
                        names.update(pattern_vars(p))
    for sd in program.structs:
        names.add(sd.name)
    names.update(program.struct_arities())
    return names


class FreshNames:
    """Supplies ``<prefix><n>`` names that avoid a set of taken identifiers."""

    def __init__(self, taken=()):
        self.taken = set(taken)
        self.counters: dict[str, int] = {}

    def __call__(self, prefix: str = "$") -> str:
        n = self.counters.get(prefix, 0)
        while True:
            n += 1
            name = f"{prefix}{n}"
            if name not in self.taken:
                self.counters[prefix] = n
                self.taken.add(name)
                return name


# ---------------------------------------------------------------------------
# Free variables


def free_vars(term: Term, globals_=frozenset()) -> list[str]:
    """Free variables in order of first occurrence.

    Names in ``globals_`` (top-level functions) and primitive operations are
    not considered free unless they are shadowed by a local binding.
    """
    seen: dict[str, None] = {}

    def go(t, bound):
        match t:
            case Var(name):
                if name not in bound and name not in globals_ and name not in PRIMITIVES:
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
            case _:
                for sub in subterms(t):
                    go(sub, bound)

    go(term, frozenset())
    return list(seen)


def count_free(term: Term, name: str) -> int:
    """Number of free occurrences of ``name``."""
    match term:
        case Var(n):
            return int(n == name)
        case Fun(params=params, body=body):
            return 0 if name in params else count_free(body, name)
        case Let(pattern=p, bound=c, body=body):
            inner = 0 if name in pattern_vars(p) else count_free(body, name)
            return count_free(c, name) + inner
        case Match(scrutinee=s, branches=branches):
            total = count_free(s, name)
            for p, b in branches:
                if name not in pattern_vars(p):
                    total += count_free(b, name)
            return total
    return sum(count_free(sub, name) for sub in subterms(term))


def free_names(term: Term) -> set[str]:
    """Every identifier occurring free, globals and primitives included."""
    out: set[str] = set()

    def go(t, bound):
        match t:
            case Var(name):
                if name not in bound:
                    out.add(name)
            case Fun(params=params, body=body):
                go(body, bound | set(params))
            case Let(pattern=p, bound=c, body=body):
                go(c, bound)
                go(body, bound | set(pattern_vars(p)))
            case Match(scrutinee=s, branches=branches):
                go(s, bound)
                for p, b in branches:
                    go(b, bound | set(pattern_vars(p)))
            case _:
                for sub in subterms(t):
                    go(sub, bound)

    go(term, frozenset())
    return out


class Capture(Exception):
    """Substitution would capture a free variable of the replacement."""


def substitute(term: Term, name: str, replacement: Term) -> Term:
    """Replace free occurrences of ``name``; raises :class:`Capture` instead of capturing."""
    fv = free_names(replacement)

    def go(t, shadow):
        match t:
            case Var(n):
                if n != name:
                    return t
                if fv & shadow:
                    raise Capture(name)
                return replacement
            case Lit() | Error():
                return t
            case Fun(params=params, body=body):
                if name in params:
                    return t
                return replace(t, body=go(body, shadow | set(params)))
            case App(fn=fn, args=args):
                return replace(t, fn=go(fn, shadow), args=tuple(go(a, shadow) for a in args))
            case Record(fields=fields):
                return replace(t, fields=tuple(go(f, shadow) for f in fields))
            case Let(pattern=p, bound=c, body=body):
                pv = set(pattern_vars(p))
                new_body = body if name in pv else go(body, shadow | pv)
                return replace(t, bound=go(c, shadow), body=new_body)
            case Match(scrutinee=s, branches=branches):
                new_branches = []
                for p, b in branches:
                    pv = set(pattern_vars(p))
                    new_branches.append((p, b if name in pv else go(b, shadow | pv)))
                return replace(t, scrutinee=go(s, shadow), branches=tuple(new_branches))
        raise TypeError(f"not a term: {t!r}")

    return go(term, frozenset())


# ---------------------------------------------------------------------------
# Labeling


def relabel(program: Program) -> Program:
    """Assign dense preorder labels to every term node of ``program``."""
    counter = iter(range(10**9))

    def lab(t):
        label = next(counter)
        match t:
            case Var(name):
                return Var(name, label=label, pos=t.pos)
            case Lit(value):
                return Lit(value, label=label, pos=t.pos)
            case Error(message):
                return Error(message, label=label, pos=t.pos)
            case Fun(params=params, body=body, annotations=ann):
                return Fun(params, lab(body), ann, label=label, pos=t.pos)
            case App(fn=fn, args=args):
                new_fn = lab(fn)
                return App(new_fn, tuple(lab(a) for a in args), label=label, pos=t.pos)
            case Record(struct=r, fields=fields):
                return Record(r, tuple(lab(f) for f in fields), label=label, pos=t.pos)
            case Let(pattern=p, bound=c, body=body):
                new_c = lab(c)
                return Let(p, new_c, lab(body), label=label, pos=t.pos)
            case Match(scrutinee=s, branches=branches):
                new_s = lab(s)
                new_branches = tuple((p, lab(b)) for p, b in branches)
                return Match(new_s, new_branches, label=label, pos=t.pos)
        raise TypeError(f"not a term: {t!r}")

    functions = tuple(replace(fd, body=lab(fd.body)) for fd in program.functions)
    return replace(program, functions=functions)


def label_table(program: Program) -> dict[int, Term]:
    return {t.label: t for t in program_terms(program)}


def enclosing_functions(program: Program) -> dict[int, str]:
    """Map each term label to the name of the top-level function containing it."""
    return {t.label: fd.name for fd in program.functions for t in walk(fd.body)}


# ---------------------------------------------------------------------------
# Parsing


def _is_ident(text: str) -> bool:
    if not text or text[0].isdigit() or text[0] in '#"{}[]()':
        return False
    return not sexpr._INT.match(text)


def _ident(d, what="identifier") -> str:
    if isinstance(d, Atom) and _is_ident(d.text) and d.text not in KEYWORDS:
        return d.text
    raise SourceSyntaxError(f"expected {what}", d.pos)


def _literal(d):
    if isinstance(d, Str):
        return d.value
    if isinstance(d, Atom):
        if d.is_int:
            return int(d.text)
        if d.text == "#t":
            return True
        if d.text == "#f":
            return False
    return None


def _annotations(items, i):
    atomic = no_defun = False
    name = None
    while i < len(items) and isinstance(items[i], Atom) and items[i].text.startswith("#:"):
        kw = items[i]
        if kw.text == "#:atomic":
            atomic = True
        elif kw.text == "#:no-defun":
            no_defun = True
        elif kw.text == "#:name":
            if name is not None:
                raise SourceSyntaxError("more than one #:name annotation", kw.pos)
            if i + 1 >= len(items):
                raise SourceSyntaxError("#:name needs an identifier", kw.pos)
            i += 1
            name = _ident(items[i], "constructor name")
        else:
            raise SourceSyntaxError(f"unknown annotation {kw.text}", kw.pos)
        i += 1
    return Annotations(atomic, no_defun, name), i


def _distinct(names, pos, what):
    seen = set()
    for n in names:
        if n in seen:
            raise SourceSyntaxError(f"duplicate {what} {n}", pos)
        seen.add(n)


def parse_pattern(d) -> Pattern:
    lit = _literal(d)
    if lit is not None:
        return PLit(lit)
    if isinstance(d, Atom):
        if d.text == "_":
            return PWild()
        return PVar(_ident(d, "pattern variable"))
    if isinstance(d, SList) and d.bracket == "{":
        if not d.items:
            raise SourceSyntaxError("record pattern needs a label", d.pos)
        return PRecord(_ident(d.items[0], "structure label"),
                       tuple(parse_pattern(x) for x in d.items[1:]))
    if isinstance(d, SList) and d.bracket == "[":
        if len(d.items) != 2 or not isinstance(d.items[0], Atom):
            raise SourceSyntaxError("type pattern has the form [Type x]", d.pos)
        tp = d.items[0].text
        if tp not in BASE_TYPES:
            raise SourceSyntaxError(f"unknown base type {tp}", d.items[0].pos)
        return PType(tp, _ident(d.items[1]))
    raise SourceSyntaxError("malformed pattern", d.pos)


def _check_pattern(p: Pattern, pos):
    _distinct(pattern_vars(p), pos, "pattern variable")
    return p


def parse_term(d) -> Term:
    """Parse one datum (or source text) as a term, without labeling."""
    if isinstance(d, str):
        d = sexpr.read_one(d)
    pos = d.pos
    lit = _literal(d)
    if lit is not None:
        return Lit(lit, pos=pos)
    if isinstance(d, Atom):
        return Var(_ident(d, "variable"), pos=pos)
    if d.bracket == "{":
        if not d.items:
            raise SourceSyntaxError("record needs a label", pos)
        return Record(_ident(d.items[0], "structure label"),
                      tuple(parse_term(x) for x in d.items[1:]), pos=pos)
    if d.bracket == "[":
        raise SourceSyntaxError("brackets are only allowed in patterns and parameters", pos)
    items = d.items
    if not items:
        raise SourceSyntaxError("empty application", pos)
    head = items[0].text if isinstance(items[0], Atom) else None
    if head == "fun":
        ann, i = _annotations(items, 1)
        if len(items) != i + 2:
            raise SourceSyntaxError("fun has the form (fun (x ...) body)", pos)
        plist = items[i]
        if not isinstance(plist, SList) or plist.bracket != "(":
            raise SourceSyntaxError("fun parameters must be a list", plist.pos)
        params = tuple(_ident(x, "parameter") for x in plist.items)
        _distinct(params, plist.pos, "parameter")
        return Fun(params, parse_term(items[i + 1]), ann, pos=pos)
    if head == "let":
        if len(items) != 4:
            raise SourceSyntaxError("let has the form (let p t t)", pos)
        p = _check_pattern(parse_pattern(items[1]), pos)
        return Let(p, parse_term(items[2]), parse_term(items[3]), pos=pos)
    if head == "match":
        if len(items) < 3:
            raise SourceSyntaxError("match needs at least one branch", pos)
        branches = []
        for b in items[2:]:
            if not isinstance(b, SList) or b.bracket == "{" or len(b.items) != 2:
                raise SourceSyntaxError("match branch has the form (p t)", b.pos)
            p = _check_pattern(parse_pattern(b.items[0]), b.pos)
            branches.append((p, parse_term(b.items[1])))
        return Match(parse_term(items[1]), tuple(branches), pos=pos)
    if head == "if":
        if len(items) != 4:
            raise SourceSyntaxError("if has the form (if t t t)", pos)
        return Match(parse_term(items[1]),
                     ((PLit(True), parse_term(items[2])), (PLit(False), parse_term(items[3]))),
                     pos=pos)
    if head == "error":
        if len(items) != 2 or not isinstance(items[1], Str):
            raise SourceSyntaxError('error has the form (error "message")', pos)
        return Error(items[1].value, pos=pos)
    if head in KEYWORDS:
        raise SourceSyntaxError(f"misplaced keyword {head}", pos)
    return App(parse_term(items[0]), tuple(parse_term(x) for x in items[1:]), pos=pos)


def _parse_typeref(d) -> TypeRef:
    if isinstance(d, Atom):
        return _ident(d, "type name")
    if isinstance(d, SList) and d.bracket == "{" and d.items:
        fields = []
        for f in d.items[1:]:
            if not isinstance(f, Atom):
                raise SourceSyntaxError("record field types must be type names", f.pos)
            fields.append(_ident(f, "type name"))
        return RecordType(_ident(d.items[0], "structure label"), tuple(fields))
    raise SourceSyntaxError("malformed type", d.pos)


def _parse_param(d) -> Param:
    if isinstance(d, SList) and d.bracket == "[":
        if len(d.items) != 2:
            raise SourceSyntaxError("annotated parameter has the form [Type x]", d.pos)
        return Param(_ident(d.items[1], "parameter"), _ident(d.items[0], "type name"))
    return Param(_ident(d, "parameter"))


def parse_program(text: str) -> Program:
    """Parse, validate and label a whole program."""
    datatypes, structs, functions = [], [], []
    for d in sexpr.read_all(text):
        if not (isinstance(d, SList) and d.bracket == "(" and d.items and isinstance(d.items[0], Atom)):
            raise SourceSyntaxError("expected a top-level definition", d.pos)
        head = d.items[0].text
        items = d.items
        if head in SKIPPED_FORMS:
            continue
        if head == "def":
            if len(items) < 4:
                raise SourceSyntaxError("def has the form (def f (x ...) body)", d.pos)
            name = _ident(items[1], "function name")
            ann, i = _annotations(items, 2)
            if len(items) != i + 2 or not (isinstance(items[i], SList) and items[i].bracket == "("):
                raise SourceSyntaxError("def has the form (def f (x ...) body)", d.pos)
            params = tuple(_parse_param(x) for x in items[i].items)
            _distinct([p.name for p in params], items[i].pos, "parameter")
            functions.append(FunDef(name, params, parse_term(items[i + 1]), ann, pos=d.pos))
        elif head == "def-data":
            if len(items) < 3:
                raise SourceSyntaxError("def-data needs a name and variants", d.pos)
            name = _ident(items[1], "datatype name")
            datatypes.append(DataDef(name, tuple(_parse_typeref(v) for v in items[2:])))
        elif head == "def-struct":
            if len(items) != 2 or not (isinstance(items[1], SList) and items[1].bracket == "{") \
                    or not items[1].items:
                raise SourceSyntaxError("def-struct has the form (def-struct {Name field ...})", d.pos)
            sig = items[1]
            fields = tuple(_ident(f, "field name") for f in sig.items[1:])
            _distinct(fields, sig.pos, "field")
            structs.append(StructDef(_ident(sig.items[0], "structure label"), fields))
        else:
            raise SourceSyntaxError(f"unknown top-level form {head}", d.pos)
    program = Program(tuple(datatypes), tuple(structs), tuple(functions))
    validate(program)
    return relabel(program)


def validate(program: Program) -> None:
    """Structural checks shared by parsing and by stage outputs."""
    mains = [fd for fd in program.functions if fd.name == "main"]
    if not mains:
        raise MissingMain("program has no main function")
    main = mains[0]
    for p in main.params:
        if p.type is None:
            raise UnannotatedMain(f"main parameter {p.name} needs a type annotation", main.pos)

    seen: dict[str, str] = {}

    def declare(name, what):
        if name in seen or name in PRIMITIVES:
            raise DuplicateName(f"{what} {name} is already defined as {seen.get(name, 'primitive')}")
        seen[name] = what

    for fd in program.functions:
        declare(fd.name, "function")
    for dd in program.datatypes:
        declare(dd.name, "datatype")
    for sd in program.structs:
        declare(sd.name, "structure")
    for dd in program.datatypes:
        for v in dd.variants:
            if isinstance(v, RecordType):
                declare(v.struct, "structure")

    arities = program.struct_arities()
    type_names = set(BASE_TYPES) | {ANY} | {dd.name for dd in program.datatypes} | set(arities)

    def check_type(name):
        if name not in type_names:
            raise SourceSyntaxError(f"undeclared type {name}")

    for dd in program.datatypes:
        for v in dd.variants:
            if isinstance(v, RecordType):
                for f in v.fields:
                    check_type(f)
            else:
                check_type(v)
    for fd in program.functions:
        for p in fd.params:
            if p.type is not None:
                check_type(p.type)

    def check_struct(name, n, pos):
        if name not in arities:
            raise SourceSyntaxError(f"undeclared structure {name}", pos)
        if arities[name] != n:
            raise SourceSyntaxError(f"structure {name} has {arities[name]} fields, not {n}", pos)

    for fd in program.functions:
        for t in walk(fd.body):
            match t:
                case Record(struct=r, fields=fields):
                    check_struct(r, len(fields), t.pos)
                case Let(pattern=p):
                    for pr in pattern_structs(p):
                        check_struct(pr.struct, len(pr.items), t.pos)
                case Match(branches=branches):
                    for p, _ in branches:
                        for pr in pattern_structs(p):
                            check_struct(pr.struct, len(pr.items), t.pos)


def parse_value_datum(d):
    """Literal or record datum as a plain Python structure (see :mod:`semtrans.interp`)."""
    lit = _literal(d)
    if lit is not None:
        return lit
    if isinstance(d, SList) and d.bracket == "{" and d.items:
        return (_ident(d.items[0], "structure label"), tuple(parse_value_datum(x) for x in d.items[1:]))
    if isinstance(d, Atom) and d.text == "#<function>":
        return FUNCTION_PLACEHOLDER
    raise SourceSyntaxError("expected a literal or record value", d.pos)


FUNCTION_PLACEHOLDER = "#<function>"


# ---------------------------------------------------------------------------
# Printing

WIDTH = 80


@dataclass
class _Group:
    open: str
    items: list
    head: int

    @property
    def close(self):
        return sexpr.OPENERS[self.open]


def _flat(doc) -> str:
    if isinstance(doc, str):
        return doc
    return doc.open + " ".join(_flat(i) for i in doc.items) + doc.close


def _render(doc, col: int) -> str:
    flat = _flat(doc)
    if isinstance(doc, str) or col + len(flat) <= WIDTH:
        return flat
    out = doc.open
    cur = col + 1
    n = doc.head if 0 < doc.head < len(doc.items) else 1
    head = doc.items[:n]
    for i, item in enumerate(head):
        if i:
            out += " "
            cur += 1
        piece = _render(item, cur)
        out += piece
        cur = len(piece) - piece.rfind("\n") - 1 if "\n" in piece else cur + len(piece)
    indent = col + 2
    for item in doc.items[len(head):]:
        out += "\n" + " " * indent + _render(item, indent)
    return out + doc.close


def _lit_text(v) -> str:
    if isinstance(v, bool):
        return "#t" if v else "#f"
    if isinstance(v, int):
        return str(v)
    return sexpr.quote_string(v)


def pretty_pattern(p: Pattern) -> str:
    match p:
        case PVar(name):
            return name
        case PLit(value):
            return _lit_text(value)
        case PWild():
            return "_"
        case PRecord(struct=r, items=items):
            return "{" + " ".join([r, *(pretty_pattern(i) for i in items)]) + "}"
        case PType(tp, name):
            return f"[{tp} {name}]"
    raise TypeError(p)


def _ann_items(ann: Annotations) -> list[str]:
    out = []
    if ann.atomic:
        out.append("#:atomic")
    if ann.no_defun:
        out.append("#:no-defun")
    if ann.name is not None:
        out += ["#:name", ann.name]
    return out


def _leading_atoms(items) -> int:
    n = 0
    for item in items:
        if not isinstance(item, str):
            break
        n += 1
    return n


def _is_if(t: Match) -> bool:
    return (len(t.branches) == 2 and t.branches[0][0] == PLit(True)
            and t.branches[1][0] == PLit(False))


def _doc(t: Term):
    match t:
        case Var(name):
            return name
        case Lit(value):
            return _lit_text(value)
        case Error(message):
            return _Group("(", ["error", sexpr.quote_string(message)], 2)
        case Fun(params=params, body=body, annotations=ann):
            head = ["fun", *_ann_items(ann), "(" + " ".join(params) + ")"]
            return _Group("(", head + [_doc(body)], len(head))
        case App(fn=fn, args=args):
            items = [_doc(fn), *(_doc(a) for a in args)]
            return _Group("(", items, _leading_atoms(items))
        case Record(struct=r, fields=fields):
            items = [r, *(_doc(f) for f in fields)]
            return _Group("{", items, _leading_atoms(items))
        case Let(pattern=p, bound=c, body=body):
            return _Group("(", ["let", pretty_pattern(p), _doc(c), _doc(body)], 3)
        case Match(scrutinee=s, branches=branches):
            if _is_if(t):
                return _Group("(", ["if", _doc(s), _doc(branches[0][1]), _doc(branches[1][1])], 2)
            items = ["match", _doc(s)]
            items += [_Group("(", [pretty_pattern(p), _doc(b)], 1) for p, b in branches]
            return _Group("(", items, 2)
    raise TypeError(f"not a term: {t!r}")


def pretty_term(t: Term, col: int = 0) -> str:
    return _render(_doc(t), col)


def _typeref_text(v: TypeRef) -> str:
    if isinstance(v, RecordType):
        return "{" + " ".join([v.struct, *v.fields]) + "}"
    return v


def pretty_fundef(fd: FunDef) -> str:
    params = " ".join(p.name if p.type is None else f"[{p.type} {p.name}]" for p in fd.params)
    head = ["def", fd.name, *_ann_items(fd.annotations), f"({params})"]
    return _render(_Group("(", head + [_doc(fd.body)], len(head)), 0)


def pretty(program: Program) -> str:
    chunks = []
    for dd in program.datatypes:
        items = ["def-data", dd.name, *(_typeref_text(v) for v in dd.variants)]
        chunks.append(_render(_Group("(", items, 2), 0))
    if program.structs:
        chunks.append("\n".join(
            "(def-struct {" + " ".join([sd.name, *sd.fields]) + "})" for sd in program.structs))
    chunks.extend(pretty_fundef(fd) for fd in program.functions)
    return "\n\n".join(chunks) + "\n"
