"""Hindley-Milner inference with field types and local-to-field promotion.

Unification is directional: ``unify(expected, actual, promote)``. When
promotion is allowed, an actual local type may meet an expected ``field[T]``
(the value is lifted at run time, which costs nothing because every runtime
value is already an nvalue). An unknown actual type meeting ``field[T]``
records a pending constraint "var <= field[T]" instead of committing either
way; it is re-checked when the variable gets bound and defaults to
``field[T]`` at generalisation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

from ..literals import Builtin, Closure, Con
from ..stdlib.registry import AMBIENT_SENSORS, REGISTRY, lifted_scheme
from ..syntax.ast import App, Expr, Fun, Lit, Span, Val, Var
from ..types import BOOL, NUM, Arrow, Data, Field, Scheme, TVar, Type, ftv, mono, render_type


class XCTypeError(Exception):
    def __init__(self, message: str, span: Optional[Span] = None):
        where = f"{span}: " if span else ""
        super().__init__(f"{where}type error: {message}")
        self.message = message
        self.span = span


class UnboundError(XCTypeError):
    pass


class OccursCheckError(XCTypeError):
    pass


class MismatchError(XCTypeError):
    pass


class ComparableError(XCTypeError):
    pass


class NestedFieldError(XCTypeError):
    pass


@dataclass
class TypingEnv:
    """Assumptions for variables, builtins and constructors."""

    schemes: dict = field(default_factory=dict)

    def lookup(self, name: str) -> Scheme:
        return self.schemes[name]

    def extend(self, name: str, scheme: Scheme) -> "TypingEnv":
        out = dict(self.schemes)
        out[name] = scheme
        return TypingEnv(out)

    def __contains__(self, name: str) -> bool:
        return name in self.schemes


def builtin_signatures() -> TypingEnv:
    out = {name: entry.scheme for name, entry in REGISTRY.items()}
    out.update(AMBIENT_SENSORS)
    return TypingEnv(out)


@dataclass
class Substitution:
    mapping: dict
    lifts: int = 0

    def apply(self, t: Type) -> Type:
        return _subst(t, self.mapping)


def _subst(t: Type, m: Mapping[int, Type]) -> Type:
    if isinstance(t, TVar):
        r = m.get(t.id)
        return t if r is None else r
    if isinstance(t, Data):
        return Data(t.name, tuple(_subst(a, m) for a in t.args)) if t.args else t
    if isinstance(t, Field):
        return Field(_subst(t.elem, m))
    if isinstance(t, Arrow):
        return Arrow(tuple(_subst(p, m) for p in t.params), _subst(t.ret, m))
    raise TypeError(t)


class _Store:
    """Mutable substitution with an undo trail, so failed attempts roll back."""

    def __init__(self, start: int = 0):
        self.next_id = start
        self.binding: dict[int, Type] = {}
        self.deferred: dict[int, list] = {}
        self.comparable: set[int] = set()
        self.lifts = 0
        self.trail: list = []

    def fresh(self) -> TVar:
        self.next_id += 1
        return TVar(self.next_id)

    def mark(self) -> int:
        return len(self.trail)

    def rollback(self, mark: int) -> None:
        while len(self.trail) > mark:
            kind, key, old = self.trail.pop()
            if kind == "bind":
                del self.binding[key]
            elif kind == "defer":
                if old is None:
                    self.deferred.pop(key, None)
                else:
                    self.deferred[key] = old
            elif kind == "cmp":
                self.comparable.discard(key)
            elif kind == "lift":
                self.lifts -= 1

    def resolve(self, t: Type) -> Type:
        while isinstance(t, TVar):
            nxt = self.binding.get(t.id)
            if nxt is None:
                return t
            t = nxt
        return t

    def zonk(self, t: Type) -> Type:
        t = self.resolve(t)
        if isinstance(t, TVar):
            return t
        if isinstance(t, Data):
            return Data(t.name, tuple(self.zonk(a) for a in t.args)) if t.args else t
        if isinstance(t, Field):
            return Field(self.zonk(t.elem))
        if isinstance(t, Arrow):
            return Arrow(tuple(self.zonk(p) for p in t.params), self.zonk(t.ret))
        raise TypeError(t)

    def set_deferred(self, vid: int, value) -> None:
        self.trail.append(("defer", vid, self.deferred.get(vid)))
        if value is None:
            self.deferred.pop(vid, None)
        else:
            self.deferred[vid] = value

    def mark_comparable(self, vid: int) -> None:
        if vid not in self.comparable:
            self.comparable.add(vid)
            self.trail.append(("cmp", vid, None))

    def add_lift(self) -> None:
        self.lifts += 1
        self.trail.append(("lift", None, None))


class Inference:
    def __init__(self, open_world: bool = False, start: int = 0):
        self.store = _Store(start)
        self.open_world = open_world
        self.free: dict[str, TVar] = {}
        self.val_schemes: dict[int, Scheme] = {}

    # errors

    def show(self, *types: Type) -> list[str]:
        names: dict = {}
        return [render_type(self.store.zonk(t), names) for t in types]

    def mismatch(self, exp: Type, act: Type, span) -> MismatchError:
        e, a = self.show(exp, act)
        return MismatchError(f"expected {e}, found {a}", span)

    # unification

    def occurs(self, vid: int, t: Type) -> bool:
        t = self.store.resolve(t)
        if isinstance(t, TVar):
            return t.id == vid
        if isinstance(t, Data):
            return any(self.occurs(vid, a) for a in t.args)
        if isinstance(t, Field):
            return self.occurs(vid, t.elem)
        if isinstance(t, Arrow):
            return any(self.occurs(vid, p) for p in t.params) or self.occurs(vid, t.ret)
        return False

    def require_comparable(self, t: Type, span) -> None:
        t = self.store.resolve(t)
        if isinstance(t, TVar):
            self.store.mark_comparable(t.id)
        elif isinstance(t, (Arrow, Field)):
            what = "function" if isinstance(t, Arrow) else "field"
            raise ComparableError(f"{what} type {self.show(t)[0]} is not comparable", span)
        elif isinstance(t, Data):
            for a in t.args:
                self.require_comparable(a, span)

    def bind(self, v: TVar, t: Type, span) -> None:
        t = self.store.resolve(t)
        if isinstance(t, TVar) and t.id == v.id:
            return
        if self.occurs(v.id, t):
            a, b = self.show(v, t)
            raise OccursCheckError(f"cannot construct infinite type {a} = {b}", span)
        if v.id in self.store.comparable:
            self.require_comparable(t, span)
        self.store.binding[v.id] = t
        self.store.trail.append(("bind", v.id, None))
        pending = self.store.deferred.get(v.id)
        if pending:
            self.store.set_deferred(v.id, None)
            for bound in pending:
                if isinstance(t, TVar):
                    self.defer(t, bound)
                else:
                    self.unify(bound, t, True, span)

    def defer(self, v: TVar, bound: Field) -> None:
        old = self.store.deferred.get(v.id, [])
        self.store.set_deferred(v.id, old + [bound])

    def unify(self, exp: Type, act: Type, promote: bool, span=None) -> None:
        s = self.store
        exp, act = s.resolve(exp), s.resolve(act)
        if isinstance(act, TVar):
            if isinstance(exp, TVar) and exp.id == act.id:
                return
            if promote and isinstance(exp, Field):
                self.defer(act, exp)
                return
            self.bind(act, exp, span)
            return
        if isinstance(exp, TVar):
            self.bind(exp, act, span)
            return
        if isinstance(exp, Field):
            if isinstance(act, Field):
                self.unify(exp.elem, act.elem, False, span)
                if isinstance(s.resolve(exp.elem), Field):
                    raise NestedFieldError(f"nested field type field[{self.show(exp.elem)[0]}]", span)
                return
            if promote:
                self.unify(exp.elem, act, False, span)
                s.add_lift()
                return
            raise self.mismatch(exp, act, span)
        if isinstance(exp, Data) and isinstance(act, Data):
            if exp.name != act.name or len(exp.args) != len(act.args):
                raise self.mismatch(exp, act, span)
            for a, b in zip(exp.args, act.args):
                self.unify(a, b, promote, span)
            return
        if isinstance(exp, Arrow) and isinstance(act, Arrow):
            if len(exp.params) != len(act.params):
                raise self.mismatch(exp, act, span)
            for a, b in zip(exp.params, act.params):
                self.unify(a, b, False, span)
            self.unify(exp.ret, act.ret, promote, span)
            return
        raise self.mismatch(exp, act, span)

    def check_nested(self, t: Type, span) -> None:
        t = self.store.zonk(t)
        stack = [t]
        while stack:
            x = stack.pop()
            if isinstance(x, Field):
                if isinstance(x.elem, Field):
                    raise NestedFieldError(f"nested field type {render_type(x)}", span)
                stack.append(x.elem)
            elif isinstance(x, Data):
                stack.extend(x.args)
            elif isinstance(x, Arrow):
                stack.extend(x.params)
                stack.append(x.ret)

    # schemes

    def instantiate(self, s: Scheme) -> Type:
        if not s.vars:
            return s.body
        m = {}
        for v in s.vars:
            fv = self.store.fresh()
            m[v] = fv
            if v in s.comparable:
                self.store.mark_comparable(fv.id)
        return _subst(s.body, m)

    def env_ftv(self, env: Mapping[str, Scheme]) -> set[int]:
        out: set[int] = set()
        for s in env.values():
            if s.vars or ftv(s.body):
                out |= ftv(self.store.zonk(s.body)) - set(s.vars)
        for v in self.free.values():
            out |= ftv(self.store.zonk(v))
        # variables reachable through pending constraints stay monomorphic too
        changed = True
        while changed:
            changed = False
            for vid, bounds in list(self.store.deferred.items()):
                if vid in out:
                    for b in bounds:
                        extra = ftv(self.store.zonk(b)) - out
                        if extra:
                            out |= extra
                            changed = True
        return out

    def default_deferred(self, keep: set[int], span=None) -> None:
        while True:
            todo = [vid for vid in self.store.deferred if vid not in keep and self.store.deferred[vid]]
            if not todo:
                return
            vid = todo[0]
            bounds = self.store.deferred[vid]
            self.store.set_deferred(vid, None)
            v = TVar(vid)
            if isinstance(self.store.resolve(v), TVar):
                self.bind(v, bounds[0], span)
                for b in bounds[1:]:
                    self.unify(b, v, True, span)
            else:
                for b in bounds:
                    self.unify(b, v, True, span)

    def generalize(self, t: Type, env: Mapping[str, Scheme], span) -> Scheme:
        keep = self.env_ftv(env)
        self.default_deferred(keep, span)
        t = self.store.zonk(t)
        self.check_nested(t, span)
        vs = tuple(sorted(ftv(t) - keep))
        comparable = frozenset(v for v in vs if v in self.store.comparable)
        return Scheme(vs, t, comparable)

    # expressions

    def infer(self, e: Expr, env: Mapping[str, Scheme]) -> Type:
        if isinstance(e, Var):
            s = env.get(e.name)
            if s is not None:
                return self.instantiate(s)
            if e.name in self.free:
                return self.free[e.name]
            if self.open_world:
                v = self.store.fresh()
                self.free[e.name] = v
                return v
            raise UnboundError(f"unbound variable {e.name!r}", e.span)
        if isinstance(e, Lit):
            return self.literal_type(e.value, e.span)
        if isinstance(e, Fun):
            return self.infer_fun(e, env, None)
        if isinstance(e, App):
            return self.infer_app(e, env)
        if isinstance(e, Val):
            t1 = self.infer(e.bound, env)
            scheme = self.generalize(t1, env, e.span)
            self.val_schemes[id(e)] = scheme
            inner = dict(env)
            inner[e.name] = scheme
            return self.infer(e.body, inner)
        raise TypeError(f"not a core expression: {type(e).__name__}")

    def literal_type(self, v, span) -> Type:
        if type(v) is bool:
            return BOOL
        if type(v) is float or type(v) is int:
            return NUM
        if type(v) is Builtin:
            entry = REGISTRY.get(v.name)
            if entry is None:
                raise UnboundError(f"unknown builtin {v.name!r}", span)
            return self.instantiate(entry.scheme)
        if type(v) is Con:
            if v.name == "Pair" and len(v.args) == 2:
                return Data("PAIR", tuple(self.literal_type(a, span) for a in v.args))
            raise UnboundError(f"unknown constructor {v.name!r}", span)
        if type(v) is Closure:
            raise XCTypeError("function literal without source", span)
        raise TypeError(v)

    def infer_fun(self, f: Fun, env: Mapping[str, Scheme], expected: Optional[Type]) -> Type:
        exp = self.store.resolve(expected) if expected is not None else None
        if isinstance(exp, Arrow) and len(exp.params) == len(f.params):
            params = list(exp.params)
        else:
            params = [self.store.fresh() for _ in f.params]
        ret = self.store.fresh()
        fty = Arrow(tuple(params), ret)
        inner = dict(env)
        inner[f.name] = mono(fty)
        for p, t in zip(f.params, params):
            inner[p] = mono(t)
        body = self.infer(f.body, inner)
        self.unify(ret, body, False, f.body.span or f.span)
        return fty

    def infer_args(self, e: App, env) -> list:
        return [None if isinstance(a, Fun) else self.infer(a, env) for a in e.args]

    def apply_signature(self, sig: Type, e: App, env, arg_types: list, callee: str) -> Type:
        sig = self.store.resolve(sig)
        if isinstance(sig, Field) and isinstance(self.store.resolve(sig.elem), Arrow):
            sig = self.store.resolve(sig.elem)
        if isinstance(sig, TVar):
            arrow = Arrow(tuple(self.store.fresh() for _ in e.args), self.store.fresh())
            self.bind(sig, arrow, e.span)
            sig = arrow
        if not isinstance(sig, Arrow):
            raise MismatchError(f"{callee} is not a function: {self.show(sig)[0]}", e.span)
        if len(sig.params) != len(e.args):
            raise MismatchError(f"{callee} expects {len(sig.params)} argument(s), got {len(e.args)}", e.span)
        # comparability is checked per argument first, so the error names the real cause
        for a, t, p in zip(e.args, arg_types, sig.params):
            rp = self.store.resolve(p)
            if isinstance(rp, TVar) and rp.id in self.store.comparable:
                if t is None:
                    raise ComparableError("function type is not comparable", a.span or e.span)
                self.require_comparable(t, a.span or e.span)
        for a, t, p in zip(e.args, arg_types, sig.params):
            if t is not None:
                self.unify(p, t, True, a.span or e.span)
        for a, t, p in zip(e.args, arg_types, sig.params):
            if t is None:
                ft = self.infer_fun(a, env, p)
                self.unify(p, ft, True, a.span or e.span)
        return sig.ret

    def infer_app(self, e: App, env) -> Type:
        fn = e.fn
        if isinstance(fn, Lit) and type(fn.value) is Builtin:
            entry = REGISTRY.get(fn.value.name)
            if entry is None:
                raise UnboundError(f"unknown builtin {fn.value.name!r}", fn.span)
            arg_types = self.infer_args(e, env)
            schemes = [entry.scheme] + ([lifted_scheme(entry)] if entry.liftable else [])
            first_error = None
            for s in schemes:
                mark = self.store.mark()
                try:
                    sig = self.instantiate(s)
                    ret = self.apply_signature(sig, e, env, arg_types, entry.name)
                    self.check_nested(sig, e.span)
                    return ret
                except XCTypeError as err:
                    self.store.rollback(mark)
                    if first_error is None:
                        first_error = err
            raise first_error
        tf = self.infer(fn, env)
        arg_types = self.infer_args(e, env)
        return self.apply_signature(tf, e, env, arg_types, "callee")

    def finish(self, t: Type, span=None) -> Type:
        self.default_deferred(set(), span)
        t = self.store.zonk(t)
        self.check_nested(t, span)
        return t


def _env_dict(env) -> dict:
    if env is None:
        return {}
    if isinstance(env, TypingEnv):
        return {k: v for k, v in env.schemes.items() if k in AMBIENT_SENSORS or k not in REGISTRY}
    return dict(env)


def infer(env, e: Expr, open_world: bool = False) -> Type:
    """Principal type of ``e``. Builtins are always in scope; ``env`` adds variables."""
    scope = dict(AMBIENT_SENSORS)
    scope.update(_env_dict(env))
    inf = Inference(open_world=open_world)
    return inf.finish(inf.infer(e, scope), getattr(e, "span", None))


def unify(a: Type, b: Type) -> Substitution:
    """Most general unifier of ``a`` (expected) and ``b`` (actual), promotion allowed."""
    start = max(ftv(a) | ftv(b) | {0})
    inf = Inference(start=start)
    inf.unify(a, b, True)
    inf.default_deferred(set())
    inf.check_nested(a, None)
    inf.check_nested(b, None)
    ids = ftv(a) | ftv(b)
    mapping = {}
    for vid in ids:
        t = inf.store.zonk(TVar(vid))
        if t != TVar(vid):
            mapping[vid] = t
    return Substitution(mapping, inf.store.lifts)


@dataclass
class ProgramTypes:
    definitions: list  # (name, Type)
    main: Type
    sensors: dict  # free variable name -> Type

    def lines(self) -> list[str]:
        out = [f"{name} : {render_type(t)}" for name, t in self.definitions]
        out.append(f"main : {render_type(self.main)}")
        for name, t in sorted(self.sensors.items()):
            out.append(f"sensor {name} : {render_type(t)}")
        return out


def check_program(core: Expr, open_world: bool = True) -> ProgramTypes:
    """Type a desugared program, reporting each top-level definition and main."""
    inf = Inference(open_world=open_world)
    scope = dict(AMBIENT_SENSORS)
    t = inf.finish(inf.infer(core, scope), core.span)
    defs = []
    node = core
    while isinstance(node, Val) and isinstance(node.bound, Fun) and node.bound.name == node.name:
        s = inf.val_schemes[id(node)]
        defs.append((node.name, inf.store.zonk(s.body)))
        node = node.body
    sensors = {name: inf.store.zonk(v) for name, v in inf.free.items()}
    return ProgramTypes(defs, t, sensors)
