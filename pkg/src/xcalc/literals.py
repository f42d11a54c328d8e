"""Runtime literal values.

Numbers are Python floats and booleans are Python bools. Everything else is
one of the small classes below. Literal identity (used for canonical nvalue
form and alignment) goes through :func:`literal_key`, never through ``==``,
because ``True == 1.0`` in Python.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any


@dataclass(frozen=True)
class Builtin:
    name: str

    def __repr__(self) -> str:
        return f"Builtin({self.name!r})"


@dataclass(frozen=True)
class Con:
    """Data constructor applied to literals, e.g. ``Pair(1, 2)``."""

    name: str
    args: tuple = ()


class Closure:
    """A function value ``fun^tau name(params) { body }`` with its captured env.

    Equality and hashing use the alignment name ``tau`` only. A closure read
    back from a serialized value-tree has ``body=None`` and cannot be applied.
    """

    __slots__ = ("tau", "name", "params", "body", "env")

    def __init__(self, tau: str, name: str = "", params: tuple = (), body: Any = None, env: dict | None = None):
        self.tau = tau
        self.name = name
        self.params = params
        self.body = body
        self.env = env if env is not None else {}

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Closure) and other.tau == self.tau

    def __hash__(self) -> int:
        return hash(("fun", self.tau))

    def __repr__(self) -> str:
        return f"Closure({self.tau})"


Literal = Any  # float | bool | Builtin | Con | Closure

NAN_KEY = ("n", "nan")


def literal_key(v: Literal) -> tuple:
    """Hashable structural identity of a literal (NaN is identical to NaN)."""
    t = type(v)
    if t is float:
        return NAN_KEY if v != v else ("n", v)
    if t is bool:
        return ("b", v)
    if t is Con:
        return ("c", v.name, tuple(literal_key(a) for a in v.args))
    if t is Builtin:
        return ("B", v.name)
    if t is Closure:
        return ("f", v.tau)
    if t is int:
        return ("n", float(v))
    raise TypeError(f"not a literal: {v!r}")


def function_name(v: Literal) -> tuple | None:
    """Alignment name of a function literal, ``None`` for data."""
    if type(v) is Builtin:
        return ("b", v.name)
    if type(v) is Closure:
        return ("f", v.tau)
    return None


def is_function(v: Literal) -> bool:
    return type(v) is Builtin or type(v) is Closure


def format_number(x: float) -> str:
    if x != x:
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def render_literal(v: Literal) -> str:
    t = type(v)
    if t is bool:
        return "True" if v else "False"
    if t is float or t is int:
        return format_number(float(v))
    if t is Con:
        return f"{v.name}({', '.join(render_literal(a) for a in v.args)})"
    if t is Builtin:
        return v.name
    if t is Closure:
        return f"fun<{v.tau}>"
    raise TypeError(f"not a literal: {v!r}")
