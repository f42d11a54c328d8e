"""Tokenizer for XC source text."""
from __future__ import annotations

import re
from dataclasses import dataclass

from .ast import Span

KEYWORDS = frozenset(
    {"def", "val", "fun", "if", "else", "retsend", "return", "send", "True", "False", "Infinity", "and", "or"}
)

# Longest operators first.
OPERATORS = ("=>", "->", "==", "<=", ">=", "<", ">", "=", "+", "-", "*", "/", "(", ")", "{", "}", "[", "]", ",", ";")

# A hyphen continues an identifier only when a letter follows it (``ping-pong``),
# so ``a - b`` and ``n-1`` stay subtractions.
_IDENT = r"[A-Za-z_][A-Za-z0-9_]*(?:-[A-Za-z][A-Za-z0-9_]*)*"
_NUMBER = r"\d+(?:\.\d+)?(?:[eE][+-]?\d+)?"

_TOKEN_RE = re.compile(
    rf"(?P<ws>[ \t\r\n]+)|(?P<comment>//[^\n]*)|(?P<num>{_NUMBER})|(?P<ident>{_IDENT})|(?P<op>"
    + "|".join(re.escape(op) for op in OPERATORS)
    + ")"
)


class LexError(Exception):
    def __init__(self, message: str, span: Span):
        super().__init__(f"{span}: lex error: {message}")
        self.message = message
        self.span = span


@dataclass(frozen=True)
class Token:
    kind: str  # "num" | "ident" | "kw" | "op" | "eof"
    text: str
    span: Span

    def is_op(self, *ops: str) -> bool:
        return self.kind == "op" and self.text in ops

    def is_kw(self, *kws: str) -> bool:
        return self.kind == "kw" and self.text in kws


def tokenize(source: str, filename: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line, line_start = 1, 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        span = Span(line, pos - line_start + 1, filename)
        if m is None:
            raise LexError(f"unexpected character {source[pos]!r}", span)
        kind = m.lastgroup
        text = m.group()
        if kind == "ident":
            tokens.append(Token("kw" if text in KEYWORDS else "ident", text, span))
        elif kind in ("num", "op"):
            tokens.append(Token(kind, text, span))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", Span(line, pos - line_start + 1, filename)))
    return tokens
