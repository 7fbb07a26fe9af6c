"""Reader for the fully parenthesized surface syntax.

Produces plain nodes that remember their source position; the IDL parser in
:mod:`semtrans.syntax` gives them meaning.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import SourceSyntaxError

OPENERS = {"(": ")", "[": "]", "{": "}"}
CLOSERS = set(OPENERS.values())
DELIMITERS = set("()[]{}\";") | set(" \t\r\n\f\v")

_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"'}
_INT = re.compile(r"[+-]?\d+\Z")


@dataclass(frozen=True)
class Atom:
    text: str
    pos: tuple[int, int]

    @property
    def is_int(self) -> bool:
        return bool(_INT.match(self.text))


@dataclass(frozen=True)
class Str:
    value: str
    pos: tuple[int, int]


@dataclass(frozen=True)
class SList:
    bracket: str  # "(", "[" or "{"
    items: tuple
    pos: tuple[int, int]


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.i = 0
        self.line = 1
        self.col = 1

    def pos(self):
        return (self.line, self.col)

    def peek(self):
        return self.text[self.i] if self.i < len(self.text) else ""

    def advance(self):
        ch = self.text[self.i]
        self.i += 1
        if ch == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return ch

    def skip_space(self):
        while self.i < len(self.text):
            ch = self.peek()
            if ch in " \t\r\n\f\v":
                self.advance()
            elif ch == ";":
                while self.i < len(self.text) and self.peek() != "\n":
                    self.advance()
            elif ch == "#" and self.col == 1 and self.text.startswith("#lang", self.i):
                while self.i < len(self.text) and self.peek() != "\n":
                    self.advance()
            elif self.text.startswith("#|", self.i):
                start = self.pos()
                end = self.text.find("|#", self.i + 2)
                if end < 0:
                    raise SourceSyntaxError("unterminated block comment", start)
                while self.i < end + 2:
                    self.advance()
            else:
                return

    def read(self):
        self.skip_space()
        start = self.pos()
        ch = self.peek()
        if ch == "":
            raise SourceSyntaxError("unexpected end of input", start)
        if ch in OPENERS:
            self.advance()
            close = OPENERS[ch]
            items = []
            while True:
                self.skip_space()
                nxt = self.peek()
                if nxt == "":
                    raise SourceSyntaxError(f"unclosed {ch!r}", start)
                if nxt == close:
                    self.advance()
                    return SList(ch, tuple(items), start)
                if nxt in CLOSERS:
                    raise SourceSyntaxError(f"mismatched {nxt!r} for {ch!r}", self.pos())
                items.append(self.read())
        if ch in CLOSERS:
            raise SourceSyntaxError(f"unexpected {ch!r}", start)
        if ch == '"':
            return self.read_string(start)
        buf = []
        while self.peek() and self.peek() not in DELIMITERS:
            buf.append(self.advance())
        return Atom("".join(buf), start)

    def read_string(self, start):
        self.advance()
        buf = []
        while True:
            ch = self.peek()
            if ch == "":
                raise SourceSyntaxError("unterminated string", start)
            self.advance()
            if ch == '"':
                return Str("".join(buf), start)
            if ch == "\\":
                esc = self.peek()
                if esc not in _ESCAPES:
                    raise SourceSyntaxError(f"unknown escape \\{esc}", self.pos())
                self.advance()
                buf.append(_ESCAPES[esc])
            else:
                buf.append(ch)


def read_all(text: str) -> list:
    """Read every top-level datum in ``text``."""
    reader = _Reader(text)
    out = []
    while True:
        reader.skip_space()
        if reader.i >= len(text):
            return out
        out.append(reader.read())


def read_one(text: str):
    data = read_all(text)
    if len(data) != 1:
        raise SourceSyntaxError(f"expected exactly one datum, found {len(data)}", (1, 1))
    return data[0]


def quote_string(s: str) -> str:
    out = s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{out}"'
