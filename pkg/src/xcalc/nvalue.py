"""Neighbouring values: a default literal plus per-device exceptions."""
from __future__ import annotations

from typing import Callable, Iterable, Mapping, Sequence

from .literals import Literal, literal_key, render_literal


class NValue:
    """Immutable defaulted map ``default[d1 -> v1, ...]``.

    Exceptions are kept in ascending device order and entries equal to the
    default are pruned, so two nvalues are equal iff they are structurally
    identical.
    """

    __slots__ = ("default", "_ex")

    def __init__(self, default: Literal, exceptions: Mapping[int, Literal] | Iterable[tuple[int, Literal]] = ()):
        self.default = default
        if not exceptions:
            self._ex = {}
            return
        items = exceptions.items() if isinstance(exceptions, Mapping) else exceptions
        dk = literal_key(default)
        ex = {}
        for d, v in sorted(items, key=lambda kv: kv[0]):
            if literal_key(v) != dk:
                ex[d] = v
        self._ex = ex

    @classmethod
    def _raw(cls, default, ex: dict) -> "NValue":
        # ex must already be canonical
        w = object.__new__(cls)
        w.default = default
        w._ex = ex
        return w

    def lookup(self, d: int) -> Literal:
        return self._ex.get(d, self.default)

    __call__ = lookup

    @property
    def exceptions(self) -> dict[int, Literal]:
        return dict(self._ex)

    def keys(self) -> list[int]:
        return list(self._ex)

    def is_uniform(self) -> bool:
        return not self._ex

    def items(self):
        return self._ex.items()

    def key(self) -> tuple:
        return (literal_key(self.default), tuple((d, literal_key(v)) for d, v in self._ex.items()))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, NValue) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def render(self) -> str:
        body = ", ".join(f"{d}->{render_literal(v)}" for d, v in self._ex.items())
        return f"{render_literal(self.default)}[{body}]"

    __str__ = render

    def __repr__(self) -> str:
        return f"NValue({self.render()})"


def lift(value: Literal) -> NValue:
    return NValue._raw(value, {})


def lookup(w: NValue, d: int) -> Literal:
    return w.lookup(d)


def update_self(w: NValue, d: int, value: Literal) -> NValue:
    ex = dict(w._ex)
    ex[d] = value
    return NValue(w.default, ex)


def update_def(w: NValue, value: Literal) -> NValue:
    return NValue(value, w._ex)


def materialize(w: NValue, devices: Iterable[int]) -> NValue:
    """Make every device in ``devices`` an explicit entry (before a default swap)."""
    ex = dict(w._ex)
    for d in devices:
        ex.setdefault(d, w.default)
    return NValue._raw(w.default, dict(sorted(ex.items())))


def restrict(w: NValue, devices: Iterable[int]) -> NValue:
    keep = set(devices)
    return NValue._raw(w.default, {d: v for d, v in w._ex.items() if d in keep})


def pointwise_apply(f: Callable[..., Literal], ws: Sequence[NValue]) -> NValue:
    default = f(*(w.default for w in ws))
    keys: set[int] = set()
    for w in ws:
        keys.update(w._ex)
    if not keys:
        return NValue._raw(default, {})
    return NValue(default, {d: f(*(w.lookup(d) for w in ws)) for d in keys})


def nfold_local(
    f: Callable[[Literal, Literal], Literal],
    w: NValue,
    init: Literal,
    neighbours: Iterable[int],
    self_id: int,
) -> Literal:
    """Left fold of ``f`` over ``w`` at each neighbour except ``self_id``."""
    acc = init
    for d in neighbours:
        if d != self_id:
            acc = f(acc, w.lookup(d))
    return acc
