from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union


@dataclass(frozen=True)
class TVar:
    id: int


@dataclass(frozen=True)
class Data:
    name: str
    args: tuple = ()


@dataclass(frozen=True)
class Field:
    """Type of a neighbouring value whose entries have type ``elem``."""

    elem: "Type"


@dataclass(frozen=True)
class Arrow:
    params: tuple
    ret: "Type"


Type = Union[TVar, Data, Field, Arrow]

NUM = Data("num")
BOOL = Data("bool")
DATA_NAMES = frozenset({"num", "bool", "PAIR", "LIST"})


def pair_of(a: Type, b: Type) -> Data:
    return Data("PAIR", (a, b))


@dataclass(frozen=True)
class Scheme:
    """``forall vars. body``; ``comparable`` lists the vars barred from function/field types."""

    vars: tuple = ()
    body: Type = NUM
    comparable: frozenset = field(default_factory=frozenset)


def mono(t: Type) -> Scheme:
    return Scheme((), t)


def ftv(t: Type) -> set[int]:
    out: set[int] = set()
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, TVar):
            out.add(x.id)
        elif isinstance(x, Data):
            stack.extend(x.args)
        elif isinstance(x, Field):
            stack.append(x.elem)
        elif isinstance(x, Arrow):
            stack.extend(x.params)
            stack.append(x.ret)
    return out


def contains(t: Type, kinds: tuple) -> bool:
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, kinds):
            return True
        if isinstance(x, Data):
            stack.extend(x.args)
        elif isinstance(x, Field):
            stack.append(x.elem)
        elif isinstance(x, Arrow):
            stack.extend(x.params)
            stack.append(x.ret)
    return False


def _var_names():
    letters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    i = 0
    while True:
        yield letters[i % 26] + (str(i // 26) if i >= 26 else "")
        i += 1


def render_type(t: Type, names: dict | None = None) -> str:
    """Render with type variables named A, B, ... in order of appearance."""
    if names is None:
        names = {}
    gen = _var_names()
    for _ in range(len(names)):
        next(gen)

    def go(x: Type) -> str:
        if isinstance(x, TVar):
            if x.id not in names:
                names[x.id] = next(gen)
            return names[x.id]
        if isinstance(x, Data):
            if not x.args:
                return x.name
            return f"{x.name}[{', '.join(go(a) for a in x.args)}]"
        if isinstance(x, Field):
            return f"field[{go(x.elem)}]"
        if isinstance(x, Arrow):
            return f"({', '.join(go(p) for p in x.params)}) -> {go(x.ret)}"
        raise TypeError(x)

    return go(t)


def render_scheme(s: Scheme) -> str:
    return render_type(s.body)


def normalize(t: Type) -> Type:
    """Rename type variables to 0, 1, ... in order of appearance (for alpha-equivalence)."""
    mapping: dict[int, int] = {}

    def go(x: Type) -> Type:
        if isinstance(x, TVar):
            if x.id not in mapping:
                mapping[x.id] = len(mapping)
            return TVar(mapping[x.id])
        if isinstance(x, Data):
            return Data(x.name, tuple(go(a) for a in x.args))
        if isinstance(x, Field):
            return Field(go(x.elem))
        if isinstance(x, Arrow):
            return Arrow(tuple(go(p) for p in x.params), go(x.ret))
        raise TypeError(x)

    return go(t)
