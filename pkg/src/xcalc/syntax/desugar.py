"""Rewrite surface sugar into the five core forms and label functions."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from ..literals import Builtin
from ..stdlib.registry import BUILTIN_NAMES
from .ast import (
    App,
    Def,
    Expr,
    Fun,
    If,
    Lambda,
    Lit,
    ReturnSend,
    RetSend,
    SourceProgram,
    Span,
    Val,
    Var,
)
from .parser import parse

FRESH_PREFIX = "%"


class DesugarError(Exception):
    def __init__(self, message: str, span: Optional[Span]):
        where = f"{span}: " if span else ""
        super().__init__(f"{where}error: {message}")
        self.message = message
        self.span = span


class _Fresh:
    def __init__(self):
        self.counter = 0

    def __call__(self, stem: str) -> str:
        self.counter += 1
        return f"{FRESH_PREFIX}{stem}{self.counter}"


def _check_params(params, span):
    seen = set()
    for p in params:
        if p in seen:
            raise DesugarError(f"duplicate parameter {p!r}", span)
        seen.add(p)


def _builtin(name: str, span) -> Lit:
    return Lit(Builtin(name), span)


def _expr(e: Expr, bound: frozenset, fresh: _Fresh) -> Expr:
    if isinstance(e, Var):
        if e.name in bound or e.name not in BUILTIN_NAMES:
            return e
        return _builtin(e.name, e.span)
    if isinstance(e, Lit):
        return e
    if isinstance(e, Fun):
        _check_params(e.params, e.span)
        inner = bound | {e.name, *e.params}
        return Fun(e.name, e.params, _expr(e.body, inner, fresh), None, e.span)
    if isinstance(e, Lambda):
        _check_params(e.params, e.span)
        return Fun(fresh("f"), e.params, _expr(e.body, bound | set(e.params), fresh), None, e.span)
    if isinstance(e, Val):
        return Val(e.name, _expr(e.bound, bound, fresh), _expr(e.body, bound | {e.name}, fresh), e.span)
    if isinstance(e, If):
        cond = _expr(e.cond, bound, fresh)
        then = Fun(fresh("f"), (), _expr(e.then, bound, fresh), None, e.span)
        orelse = Fun(fresh("f"), (), _expr(e.orelse, bound, fresh), None, e.span)
        return App(App(_builtin("mux", e.span), (cond, then, orelse), e.span), (), e.span)
    if isinstance(e, RetSend):
        v = _expr(e.value, bound, fresh)
        return App(_builtin("Pair", e.span), (v, v), e.span)
    if isinstance(e, ReturnSend):
        return App(_builtin("Pair", e.span), (_expr(e.ret, bound, fresh), _expr(e.send, bound, fresh)), e.span)
    if isinstance(e, App):
        fn = _expr(e.fn, bound, fresh)
        args = e.args
        # single-parameter exchange handler: add an unused old binder
        if (
            isinstance(fn, Lit)
            and fn.value == Builtin("exchange")
            and len(args) == 2
            and isinstance(args[1], Lambda)
            and len(args[1].params) == 1
        ):
            h = args[1]
            args = (args[0], Lambda((fresh("o"), *h.params), h.body, h.span))
        return App(fn, tuple(_expr(a, bound, fresh) for a in args), e.span)
    raise TypeError(f"unexpected node {type(e).__name__}")


def desugar(program: SourceProgram) -> Expr:
    """Core expression for a whole program: ``def`` items become a ``val`` chain.

    Without a main expression the program evaluates to its last definition.
    """
    fresh = _Fresh()
    names = set()
    for d in program.items:
        if d.name in names:
            raise DesugarError(f"duplicate definition {d.name!r}", d.span)
        names.add(d.name)
    main = program.main
    if main is None:
        if not program.items:
            raise DesugarError("empty program", None)
        last = program.items[-1]
        main = Var(last.name, last.span)

    bound: frozenset = frozenset()
    funs = []
    for d in program.items:
        _check_params(d.params, d.span)
        body = _expr(d.body, bound | {d.name, *d.params}, fresh)
        funs.append((d, Fun(d.name, d.params, body, None, d.span)))
        bound = bound | {d.name}
    out = _expr(main, bound, fresh)
    for d, f in reversed(funs):
        out = Val(d.name, f, out, d.span)
    return out


def desugar_expr(e: Expr) -> Expr:
    return _expr(e, frozenset(), _Fresh())


def annotate_names(e: Expr) -> Expr:
    """Label every function ``t0, t1, ...`` and every node with an id, both in pre-order."""
    counters = {"tau": 0, "nid": 0}

    def go(x: Expr) -> Expr:
        nid = counters["nid"]
        counters["nid"] += 1
        if isinstance(x, Var) or isinstance(x, Lit):
            return replace(x, nid=nid)
        if isinstance(x, Fun):
            tau = f"t{counters['tau']}"
            counters["tau"] += 1
            return replace(x, tau=tau, body=go(x.body), nid=nid)
        if isinstance(x, App):
            fn = go(x.fn)
            return replace(x, fn=fn, args=tuple(go(a) for a in x.args), nid=nid)
        if isinstance(x, Val):
            b = go(x.bound)
            return replace(x, bound=b, body=go(x.body), nid=nid)
        raise TypeError(f"not a core expression: {type(x).__name__}")

    return go(e)


@dataclass(frozen=True)
class CompiledProgram:
    source: SourceProgram
    expr: Expr
    definitions: tuple[str, ...]


def compile_source(text: str, filename: str = "<input>") -> CompiledProgram:
    """Parse, desugar and name-annotate source text."""
    prog = parse(text, filename)
    core = annotate_names(desugar(prog))
    return CompiledProgram(prog, core, tuple(d.name for d in prog.items))
