"""Recursive-descent parser for XC surface syntax.

Precedence, loosest first: ``or``, ``and``, comparisons, ``+ -``, ``* /``,
calls. All binary operators are left-associative. Operators and ``and``/``or``
may also appear alone in expression position, denoting the builtin function
(``nfold(+, w, 0)``).
"""
from __future__ import annotations

from ..literals import Builtin, Closure, Con
from ..nvalue import NValue
from .ast import App, Def, Expr, If, Lambda, Lit, ReturnSend, RetSend, SourceProgram, Span, Val, Fun, Var
from .lexer import Token, tokenize

BINARY_LEVELS = (
    ("or",),
    ("and",),
    ("==", "<=", ">=", "<", ">"),
    ("+", "-"),
    ("*", "/"),
)
OPERATOR_VALUES = frozenset(op for level in BINARY_LEVELS for op in level)


class ParseError(Exception):
    def __init__(self, message: str, span: Span):
        super().__init__(f"{span}: parse error: {message}")
        self.message = message
        self.span = span


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, expected: str) -> ParseError:
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        return ParseError(f"expected {expected}, found {found}", t.span)

    def expect_op(self, op: str) -> Token:
        if not self.tok.is_op(op):
            raise self.error(repr(op))
        return self.advance()

    def expect_kw(self, kw: str) -> Token:
        if not self.tok.is_kw(kw):
            raise self.error(repr(kw))
        return self.advance()

    def expect_ident(self) -> Token:
        if self.tok.kind != "ident":
            raise self.error("identifier")
        return self.advance()

    # program structure

    def program(self) -> SourceProgram:
        items = []
        while self.tok.is_kw("def"):
            items.append(self.definition())
        main = None
        if self.tok.kind != "eof":
            main = self.expr()
        if self.tok.kind != "eof":
            raise self.error("end of input")
        return SourceProgram(tuple(items), main)

    def definition(self) -> Def:
        start = self.expect_kw("def").span
        name = self.expect_ident().text
        params = self.params()
        body = self.block()
        if self.tok.is_op(";"):
            self.advance()
        return Def(name, params, body, start)

    def params(self) -> tuple[str, ...]:
        self.expect_op("(")
        names = []
        if not self.tok.is_op(")"):
            names.append(self.expect_ident().text)
            while self.tok.is_op(","):
                self.advance()
                names.append(self.expect_ident().text)
        self.expect_op(")")
        return tuple(names)

    def block(self) -> Expr:
        self.expect_op("{")
        e = self.expr()
        self.expect_op("}")
        return e

    # expressions

    def expr(self) -> Expr:
        t = self.tok
        if t.is_kw("val"):
            self.advance()
            name = self.expect_ident().text
            self.expect_op("=")
            bound = self.expr()
            self.expect_op(";")
            return Val(name, bound, self.expr(), t.span)
        if t.is_kw("retsend"):
            self.advance()
            return RetSend(self.expr(), t.span)
        if t.is_kw("return"):
            self.advance()
            ret = self.expr()
            self.expect_kw("send")
            return ReturnSend(ret, self.expr(), t.span)
        return self.binary(0)

    def binary(self, level: int) -> Expr:
        if level == len(BINARY_LEVELS):
            return self.postfix()
        ops = BINARY_LEVELS[level]
        left = self.binary(level + 1)
        while (self.tok.kind in ("op", "kw")) and self.tok.text in ops:
            op = self.advance()
            right = self.binary(level + 1)
            left = App(Var(op.text, op.span), (left, right), op.span)
        return left

    def postfix(self) -> Expr:
        e = self.primary()
        while self.tok.is_op("("):
            span = self.tok.span
            e = App(e, self.arguments(), span)
        return e

    def arguments(self) -> tuple[Expr, ...]:
        self.expect_op("(")
        args = []
        if not self.tok.is_op(")"):
            args.append(self.expr())
            while self.tok.is_op(","):
                self.advance()
                args.append(self.expr())
        self.expect_op(")")
        return tuple(args)

    def _at_lambda(self) -> bool:
        # '(' [ident {',' ident}] ')' '=>'
        k = 1
        if self.peek(k).is_op(")"):
            return self.peek(k + 1).is_op("=>")
        while True:
            if self.peek(k).kind != "ident":
                return False
            k += 1
            if self.peek(k).is_op(","):
                k += 1
                continue
            return self.peek(k).is_op(")") and self.peek(k + 1).is_op("=>")

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Lit(float(t.text), t.span)
        if t.is_kw("True", "False"):
            self.advance()
            return Lit(t.text == "True", t.span)
        if t.is_kw("Infinity"):
            self.advance()
            return Lit(float("inf"), t.span)
        if t.is_op("-") and (self.peek().kind == "num" or self.peek().is_kw("Infinity")):
            self.advance()
            num = self.advance()
            value = float("inf") if num.kind == "kw" else float(num.text)
            return Lit(-value, t.span)
        if t.kind == "ident":
            self.advance()
            return Var(t.text, t.span)
        if (t.kind == "op" and t.text in OPERATOR_VALUES) or t.is_kw("and", "or"):
            self.advance()
            return Var(t.text, t.span)
        if t.is_kw("fun"):
            self.advance()
            name = self.expect_ident().text
            params = self.params()
            return Fun(name, params, self.block(), None, t.span)
        if t.is_kw("if"):
            return self.conditional()
        if t.is_op("("):
            if self._at_lambda():
                params = self.params()
                self.expect_op("=>")
                body = self.block() if self.tok.is_op("{") else self.expr()
                return Lambda(params, body, t.span)
            self.advance()
            e = self.expr()
            self.expect_op(")")
            return e
        raise self.error("expression")

    def conditional(self) -> Expr:
        start = self.expect_kw("if").span
        self.expect_op("(")
        cond = self.expr()
        self.expect_op(")")
        then = self.block()
        self.expect_kw("else")
        orelse = self.conditional() if self.tok.is_kw("if") else self.block()
        return If(cond, then, orelse, start)

    # literal reader (shared with nvalue text, sensor flags and trace files)

    def literal(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return float(t.text)
        if t.is_op("-") and (self.peek().kind == "num" or self.peek().is_kw("Infinity")):
            self.advance()
            num = self.advance()
            return -(float("inf") if num.kind == "kw" else float(num.text))
        if t.is_kw("True", "False"):
            self.advance()
            return t.text == "True"
        if t.is_kw("Infinity"):
            self.advance()
            return float("inf")
        if t.kind == "ident" and t.text == "NaN":
            self.advance()
            return float("nan")
        if t.is_kw("fun") and self.peek().is_op("<"):
            self.advance()
            self.advance()
            tau = self.expect_ident().text
            self.expect_op(">")
            return Closure(tau)
        if t.kind == "ident" and self.peek().is_op("("):
            self.advance()
            self.expect_op("(")
            args = []
            if not self.tok.is_op(")"):
                args.append(self.literal())
                while self.tok.is_op(","):
                    self.advance()
                    args.append(self.literal())
            self.expect_op(")")
            return Con(t.text, tuple(args))
        if t.kind == "ident" or (t.kind == "op" and t.text in OPERATOR_VALUES) or t.is_kw("and", "or"):
            self.advance()
            return Builtin(t.text)
        raise self.error("literal")

    def nvalue(self) -> NValue:
        default = self.literal()
        self.expect_op("[")
        entries = {}
        if not self.tok.is_op("]"):
            while True:
                dev = self.tok
                if dev.kind != "num" or not dev.text.isdigit():
                    raise self.error("device id")
                self.advance()
                self.expect_op("->")
                entries[int(dev.text)] = self.literal()
                if not self.tok.is_op(","):
                    break
                self.advance()
        self.expect_op("]")
        return NValue(default, entries)


def parse(source: str, filename: str = "<input>") -> SourceProgram:
    """Parse source text into a surface program (sugar intact)."""
    return Parser(tokenize(source, filename)).program()


def parse_expr(source: str, filename: str = "<input>") -> Expr:
    p = Parser(tokenize(source, filename))
    e = p.expr()
    if p.tok.kind != "eof":
        raise p.error("end of input")
    return e


def _read(source: str, what: str):
    p = Parser(tokenize(source))
    value = getattr(p, what)()
    if p.tok.kind != "eof":
        raise p.error("end of input")
    return value


def parse_literal(text: str):
    """Read a literal such as ``3``, ``True`` or ``Pair(1, -Infinity)``.

    Lower-case ``true``/``false`` are accepted for command-line convenience.
    """
    stripped = text.strip()
    if stripped in ("true", "false"):
        return stripped == "true"
    return _read(stripped, "literal")


def parse_nvalue(text: str) -> NValue:
    """Read the canonical text form ``default[d1->v1, ...]``."""
    return _read(text, "nvalue")
