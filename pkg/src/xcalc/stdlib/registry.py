"""Builtin functions, data constructors and sensors with their type schemes.

Environment-dependent builtins (``exchange``, ``nfold``, ``self``, ``uid``,
``updateSelf``, ``updateDef`` and the sensors) carry no literal
implementation here: the device evaluator interprets them. Every other
builtin is a literal-level function applied pointwise over nvalues.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

from ..errors import RuntimeTypeError
from ..literals import Builtin, Closure, Con, literal_key
from ..types import BOOL, NUM, Arrow, Field, Scheme, TVar, pair_of

A, B, T = TVar(-1), TVar(-2), TVar(-3)
INF = float("inf")


@dataclass(frozen=True)
class BuiltinEntry:
    name: str
    scheme: Scheme
    impl: Optional[Callable]
    liftable: bool
    env_dependent: bool
    description: str

    @property
    def arity(self) -> int:
        body = self.scheme.body
        return len(body.params) if isinstance(body, Arrow) else 0


def _num(x, op):
    if type(x) is not float:
        raise RuntimeTypeError(f"{op}: expected num, got {x!r}")
    return x


def _bool(x, op):
    if type(x) is not bool:
        raise RuntimeTypeError(f"{op}: expected bool, got {x!r}")
    return x


def _pair(x, op):
    if type(x) is not Con or x.name != "Pair" or len(x.args) != 2:
        raise RuntimeTypeError(f"{op}: expected a pair, got {x!r}")
    return x


def _add(a, b):
    return _num(a, "+") + _num(b, "+")


def _sub(a, b):
    return _num(a, "-") - _num(b, "-")


def _mul(a, b):
    return _num(a, "*") * _num(b, "*")


def _div(a, b):
    a, b = _num(a, "/"), _num(b, "/")
    if b == 0.0:
        if a == 0.0 or a != a:
            return math.nan
        return math.copysign(INF, a) * math.copysign(1.0, b)
    return a / b


def _and(a, b):
    return _bool(a, "and") and _bool(b, "and")


def _or(a, b):
    return _bool(a, "or") or _bool(b, "or")


def _check_comparable(x, op):
    if type(x) is Builtin or type(x) is Closure:
        raise RuntimeTypeError(f"{op}: functions are not comparable")


def _equal(a, b) -> bool:
    ta = type(a)
    if ta is not type(b):
        raise RuntimeTypeError(f"==: operands of different types {a!r}, {b!r}")
    if ta is Con:
        return a.name == b.name and len(a.args) == len(b.args) and all(_equal(x, y) for x, y in zip(a.args, b.args))
    return a == b


def _order(a, b):
    """-1, 0, 1, or None when unordered (NaN)."""
    ta = type(a)
    if ta is not type(b):
        raise RuntimeTypeError(f"comparison of different types {a!r}, {b!r}")
    if ta is Con:
        for x, y in zip(a.args, b.args):
            c = _order(x, y)
            if c != 0:
                return c
        return (len(a.args) > len(b.args)) - (len(a.args) < len(b.args))
    if a < b:
        return -1
    if a > b:
        return 1
    if a == b:
        return 0
    return None


def _eq(a, b):
    _check_comparable(a, "==")
    _check_comparable(b, "==")
    return _equal(a, b)


def _le(a, b):
    _check_comparable(a, "<=")
    return _order(a, b) in (-1, 0)


def _ge(a, b):
    _check_comparable(a, ">=")
    return _order(a, b) in (0, 1)


def _lt(a, b):
    _check_comparable(a, "<")
    return _order(a, b) == -1


def _gt(a, b):
    _check_comparable(a, ">")
    return _order(a, b) == 1


def _mux(c, x, y):
    return x if _bool(c, "mux") else y


def _make_pair(a, b):
    return Con("Pair", (a, b))


def _fst(p):
    return _pair(p, "fst").args[0]


def _snd(p):
    return _pair(p, "snd").args[1]


def _min(a, b):
    a, b = _num(a, "min"), _num(b, "min")
    return a if a <= b or b != b else b


def _max(a, b):
    a, b = _num(a, "max"), _num(b, "max")
    return a if a >= b or b != b else b


def _entry(name, body, impl=None, *, vars=(), comparable=(), liftable=False, env=False, desc=""):
    scheme = Scheme(tuple(v.id for v in vars), body, frozenset(v.id for v in comparable))
    return BuiltinEntry(name, scheme, impl, liftable, env, desc)


_NUM2 = Arrow((NUM, NUM), NUM)
_BOOL2 = Arrow((BOOL, BOOL), BOOL)
_REL = Arrow((A, A), BOOL)

_ENTRIES = [
    _entry("mux", Arrow((BOOL, A, A), A), _mux, vars=(A,), liftable=True, desc="Multiplexer operator"),
    _entry("+", _NUM2, _add, liftable=True, desc="Arithmetic operators"),
    _entry("-", _NUM2, _sub, liftable=True, desc="Arithmetic operators"),
    _entry("*", _NUM2, _mul, liftable=True, desc="Arithmetic operators"),
    _entry("/", _NUM2, _div, liftable=True, desc="Arithmetic operators"),
    _entry("and", _BOOL2, _and, liftable=True, desc="Boolean operators"),
    _entry("or", _BOOL2, _or, liftable=True, desc="Boolean operators"),
    _entry("==", _REL, _eq, vars=(A,), comparable=(A,), liftable=True, desc="Relational operators"),
    _entry("<=", _REL, _le, vars=(A,), comparable=(A,), liftable=True, desc="Relational operators"),
    _entry(">=", _REL, _ge, vars=(A,), comparable=(A,), liftable=True, desc="Relational operators"),
    _entry("<", _REL, _lt, vars=(A,), comparable=(A,), liftable=True, desc="Relational operators"),
    _entry(">", _REL, _gt, vars=(A,), comparable=(A,), liftable=True, desc="Relational operators"),
    _entry("pair", Arrow((A, B), pair_of(A, B)), _make_pair, vars=(A, B), liftable=True, desc="Pair creation"),
    _entry("fst", Arrow((pair_of(A, B),), A), _fst, vars=(A, B), liftable=True, desc="First element of a pair"),
    _entry("snd", Arrow((pair_of(A, B),), B), _snd, vars=(A, B), liftable=True, desc="Second element of a pair"),
    _entry("Pair", Arrow((A, B), pair_of(A, B)), _make_pair, vars=(A, B), liftable=True, desc="Pair constructor"),
    _entry("min", _NUM2, _min, liftable=True, desc="Minimum of two numbers"),
    _entry("max", _NUM2, _max, liftable=True, desc="Maximum of two numbers"),
    _entry(
        "exchange",
        Arrow((A, Arrow((Field(A), Field(A)), pair_of(T, Field(A)))), T),
        vars=(A, T),
        env=True,
        desc="Exchanges messages",
    ),
    _entry(
        "nfold",
        Arrow((Arrow((A, B), A), Field(B), A), A),
        vars=(A, B),
        env=True,
        desc="Folding of a neighbouring value",
    ),
    _entry("self", Arrow((Field(A),), A), vars=(A,), env=True, desc="Extract the self-message"),
    _entry("updateSelf", Arrow((Field(A), A), Field(A)), vars=(A,), env=True, desc="Update the self-message"),
    _entry("updateDef", Arrow((Field(A), A), Field(A)), vars=(A,), env=True, desc="Update the default-message"),
    _entry("uid", Arrow((), NUM), env=True, desc="Unique device identifier"),
    _entry("gps", Arrow((), pair_of(NUM, NUM)), env=True, desc="GPS latitude and longitude"),
    _entry("time", Arrow((), NUM), env=True, desc="Epoch timestamp"),
    _entry("temperature", Arrow((), NUM), env=True, desc="Temperature sensed by the device"),
]

REGISTRY: dict[str, BuiltinEntry] = {e.name: e for e in _ENTRIES}
BUILTIN_NAMES = frozenset(REGISTRY)
SENSOR_BUILTINS = frozenset({"gps", "time", "temperature"})

# Ambient neighbour-dependent sensors read as variables rather than called.
AMBIENT_SENSORS: dict[str, Scheme] = {"senseDist": Scheme((), Field(NUM))}


def registry() -> list[BuiltinEntry]:
    return list(_ENTRIES)


def lookup(name: str) -> BuiltinEntry:
    return REGISTRY[name]


def lifted_scheme(entry: BuiltinEntry) -> Scheme:
    """The pointwise-lifted scheme ``(field[A1], ...) -> field[B]``."""
    body = entry.scheme.body
    return Scheme(
        entry.scheme.vars,
        Arrow(tuple(Field(p) for p in body.params), Field(body.ret)),
        entry.scheme.comparable,
    )


def literal_equal(a, b) -> bool:
    return literal_key(a) == literal_key(b)
