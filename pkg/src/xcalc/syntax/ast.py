"""Surface and core abstract syntax.

The core forms are :class:`Var`, :class:`Fun`, :class:`App`, :class:`Val` and
:class:`Lit`. :class:`Lambda`, :class:`If`, :class:`RetSend` and
:class:`ReturnSend` only exist before desugaring.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..literals import Builtin, literal_key


@dataclass(frozen=True)
class Span:
    line: int
    column: int
    file: str = "<input>"

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


class Expr:
    __slots__ = ()


@dataclass(frozen=True, eq=True)
class Var(Expr):
    name: str
    span: Optional[Span] = field(default=None, compare=False, repr=False)
    nid: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True, eq=False)
class Lit(Expr):
    value: Union[float, bool, Builtin]
    span: Optional[Span] = field(default=None, compare=False, repr=False)
    nid: int = field(default=-1, compare=False, repr=False)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Lit) and literal_key(self.value) == literal_key(other.value)

    def __hash__(self) -> int:
        return hash(literal_key(self.value))


@dataclass(frozen=True)
class Fun(Expr):
    name: str
    params: tuple[str, ...]
    body: Expr
    tau: Optional[str] = None
    span: Optional[Span] = field(default=None, compare=False, repr=False)
    nid: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class App(Expr):
    fn: Expr
    args: tuple[Expr, ...]
    span: Optional[Span] = field(default=None, compare=False, repr=False)
    nid: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Val(Expr):
    name: str
    bound: Expr
    body: Expr
    span: Optional[Span] = field(default=None, compare=False, repr=False)
    nid: int = field(default=-1, compare=False, repr=False)


# surface-only sugar


@dataclass(frozen=True)
class Lambda(Expr):
    params: tuple[str, ...]
    body: Expr
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class If(Expr):
    cond: Expr
    then: Expr
    orelse: Expr
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class RetSend(Expr):
    value: Expr
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ReturnSend(Expr):
    ret: Expr
    send: Expr
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Def:
    name: str
    params: tuple[str, ...]
    body: Expr
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class SourceProgram:
    items: tuple[Def, ...]
    main: Optional[Expr]


CORE_TYPES = (Var, Fun, App, Val, Lit)


def free_vars(e: Expr) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Lit):
        return frozenset()
    if isinstance(e, Fun):
        return free_vars(e.body) - {e.name, *e.params}
    if isinstance(e, App):
        out = free_vars(e.fn)
        for a in e.args:
            out |= free_vars(a)
        return out
    if isinstance(e, Val):
        return free_vars(e.bound) | (free_vars(e.body) - {e.name})
    raise TypeError(f"not a core expression: {type(e).__name__}")


def iter_nodes(e: Expr):
    """Pre-order traversal of a core expression."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Fun):
            stack.append(node.body)
        elif isinstance(node, App):
            stack.extend(reversed((node.fn, *node.args)))
        elif isinstance(node, Val):
            stack.extend((node.body, node.bound))


def alpha_equal(a: Expr, b: Expr) -> bool:
    """Structural equality modulo bound-variable names and alignment names."""

    def go(x, y, env_x: dict, env_y: dict, depth: int) -> bool:
        if type(x) is not type(y):
            return False
        if isinstance(x, Lit):
            return x == y
        if isinstance(x, Var):
            bx, by = env_x.get(x.name), env_y.get(y.name)
            if bx is None and by is None:
                return x.name == y.name
            return bx == by
        if isinstance(x, Fun):
            if len(x.params) != len(y.params):
                return False
            ex, ey = dict(env_x), dict(env_y)
            ex[x.name] = ey[y.name] = (depth, -1)
            for i, (p, q) in enumerate(zip(x.params, y.params)):
                ex[p] = ey[q] = (depth, i)
            return go(x.body, y.body, ex, ey, depth + 1)
        if isinstance(x, App):
            if len(x.args) != len(y.args):
                return False
            return go(x.fn, y.fn, env_x, env_y, depth) and all(
                go(p, q, env_x, env_y, depth) for p, q in zip(x.args, y.args)
            )
        if isinstance(x, Val):
            if not go(x.bound, y.bound, env_x, env_y, depth):
                return False
            ex, ey = dict(env_x), dict(env_y)
            ex[x.name] = ey[y.name] = (depth, -2)
            return go(x.body, y.body, ex, ey, depth + 1)
        return x == y

    return go(a, b, {}, {}, 0)
