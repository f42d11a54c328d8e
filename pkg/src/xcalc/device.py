"""Big-step evaluation of a single device round.

``Round(device, sensors).run(expr, theta)`` returns the round's result nvalue
and its value-tree. ``theta`` maps device ids to the value-trees they last
produced (possibly including this device's own previous tree); every
sub-evaluation only sees the matching subtrees, and function applications
only see trees whose recorded function has the same alignment name.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

from .errors import AlignmentError, RuntimeTypeError, SensorError, StepBudgetExceeded
from .literals import Builtin, Closure, Con, function_name, render_literal
from .nvalue import NValue, lift, materialize, nfold_local, pointwise_apply, restrict, update_def, update_self
from .stdlib.registry import REGISTRY
from .syntax.ast import App, Expr, Fun, Lit, Val, Var, iter_nodes

DEFAULT_STEP_BUDGET = 10**6
DEFAULT_MAX_DEPTH = 400

if sys.getrecursionlimit() < 20000:
    sys.setrecursionlimit(20000)


@dataclass(frozen=True)
class Branch:
    children: tuple = ()
    tag: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Payload:
    value: NValue
    children: tuple = ()
    tag: object = field(default=None, compare=False, repr=False)


ValueTree = "Branch | Payload"
EMPTY = Branch(())


def project_env(theta: Mapping[int, object], i: int) -> dict:
    """The ``i``-th child (1-based) of every tree; trees without one drop out."""
    out = {}
    for d, t in theta.items():
        ch = t.children
        if len(ch) >= i:
            out[d] = ch[i - 1]
    return out


def filter_env(theta: Mapping[int, object], f) -> dict:
    """Keep the trees whose root records a function with the same name as ``f``."""
    name = function_name(f)
    return {
        d: t
        for d, t in theta.items()
        if type(t) is Payload and function_name(t.value.lookup(d)) == name
    }


def _projected_filter(theta: Mapping[int, object], f, i: int) -> dict:
    name = function_name(f)
    out = {}
    for d, t in theta.items():
        if type(t) is Payload and len(t.children) >= i and function_name(t.value.lookup(d)) == name:
            out[d] = t.children[i - 1]
    return out


def _split_pair(w: NValue, which: int) -> NValue:
    def pick(p):
        if type(p) is not Con or p.name != "Pair" or len(p.args) != 2:
            raise RuntimeTypeError(f"exchange update must return a pair, got {render_literal(p)}")
        return p.args[which]

    return pointwise_apply(pick, (w,))


Tracer = Callable[[int, App, object, tuple, NValue, tuple], None]


class Round:
    """Evaluator state for one firing of one device."""

    def __init__(
        self,
        device: int,
        sensors: Optional[Mapping[str, NValue]] = None,
        *,
        budget: int = DEFAULT_STEP_BUDGET,
        max_depth: int = DEFAULT_MAX_DEPTH,
        tracer: Optional[Tracer] = None,
        check_alignment: bool = False,
    ):
        self.device = device
        self.sensors = sensors or {}
        self.budget = budget
        self.max_depth = max_depth
        self.tracer = tracer
        self.check_alignment = check_alignment
        self.steps = 0
        self.depth = 0

    def run(self, e: Expr, theta: Optional[Mapping[int, object]] = None):
        try:
            return self.eval(e, {}, dict(theta or {}))
        except RecursionError:
            raise StepBudgetExceeded("evaluation nested too deeply") from None

    # expressions

    def tick(self) -> None:
        self.steps += 1
        if self.steps > self.budget:
            raise StepBudgetExceeded(f"step budget of {self.budget} exhausted")

    def _check(self, theta: Mapping, tag) -> None:
        for d, t in theta.items():
            if t.tag is not None and t.tag != tag:
                raise AlignmentError(f"tree from device {d} tagged {t.tag!r} reached {tag!r}")

    def eval(self, e: Expr, env: dict, theta: dict):
        self.tick()
        if self.check_alignment and theta:
            self._check(theta, e.nid)
        t = type(e)
        if t is App:
            return self.eval_app(e, env, theta)
        if t is Var:
            w = env.get(e.name)
            if w is None:
                w = self.sensors.get(e.name)
                if w is None:
                    raise SensorError(f"no value for {e.name!r} on device {self.device}")
            return w, EMPTY
        if t is Lit:
            return lift(e.value), EMPTY
        if t is Fun:
            if e.tau is None:
                raise ValueError("function without alignment name; annotate the program first")
            return lift(Closure(e.tau, e.name, e.params, e.body, env)), EMPTY
        if t is Val:
            w1, t1 = self.eval(e.bound, env, project_env(theta, 1) if theta else {})
            inner = dict(env)
            inner[e.name] = w1
            w2, t2 = self.eval(e.body, inner, project_env(theta, 2) if theta else {})
            return w2, Branch((t1, t2), e.nid)
        raise TypeError(f"not a core expression: {t.__name__}")

    def eval_app(self, e: App, env: dict, theta: dict):
        ws = []
        ts = []
        for i, sub in enumerate((e.fn, *e.args)):
            st = type(sub)
            if st is App or st is Val:
                w, t = self.eval(sub, env, project_env(theta, i + 1) if theta else {})
            else:
                w, t = self.eval(sub, env, {})
            ws.append(w)
            ts.append(t)
        f = ws[0].lookup(self.device)
        args = tuple(ws[1:])
        sub_theta = _projected_filter(theta, f, len(ws) + 1) if theta else {}
        w, t = self.apply(f, args, sub_theta)
        if self.tracer is not None:
            self.tracer(self.device, e, f, args, w, tuple(sub_theta))
        ts.append(t)
        return w, Payload(lift(f), tuple(ts), e.nid)

    # function application

    def apply(self, f, args: Sequence[NValue], theta: dict):
        tf = type(f)
        if tf is Closure:
            if f.body is None:
                raise RuntimeTypeError(f"function {render_literal(f)} has no body on this device")
            if len(args) != len(f.params):
                raise RuntimeTypeError(f"{f.name} expects {len(f.params)} argument(s), got {len(args)}")
            env = dict(f.env)
            env[f.name] = lift(f)
            for p, w in zip(f.params, args):
                env[p] = w
            self.depth += 1
            if self.depth > self.max_depth:
                raise StepBudgetExceeded(f"call depth limit of {self.max_depth} exceeded")
            try:
                return self.eval(f.body, env, theta)
            finally:
                self.depth -= 1
        if tf is Builtin:
            entry = REGISTRY.get(f.name)
            if entry is None:
                raise RuntimeTypeError(f"unknown builtin {f.name!r}")
            if len(args) != entry.arity:
                raise RuntimeTypeError(f"{f.name} expects {entry.arity} argument(s), got {len(args)}")
            if self.check_alignment and theta:
                self._check(theta, ("aux", f.name))
            if entry.impl is not None:
                self.tick()
                if all(not w._ex for w in args):
                    return lift(entry.impl(*(w.default for w in args))), EMPTY
                return pointwise_apply(entry.impl, args), EMPTY
            return getattr(self, "_b_" + f.name)(args, theta)
        raise RuntimeTypeError(f"cannot apply non-function value {render_literal(f)}")

    def call_literal(self, f, a, b):
        """Apply a binary function to two literals and read the result here."""
        if type(f) is Builtin:
            entry = REGISTRY.get(f.name)
            if entry is not None and entry.impl is not None and entry.arity == 2:
                self.tick()
                return entry.impl(a, b)
        w, _ = self.apply(f, (lift(a), lift(b)), {})
        return w.lookup(self.device)

    # environment-dependent builtins

    def _b_exchange(self, args, theta):
        w_init, w_fun = args
        d = self.device
        ex = dict(w_init.items())
        for k, t in theta.items():
            if type(t) is Payload:
                ex[k] = t.value.lookup(d)
        w_nbr = NValue(w_init.default, ex)
        own = theta.get(d)
        if type(own) is Payload:
            w_old = restrict(own.value, theta.keys())
        else:
            w_old = w_init
        inner_theta = project_env(theta, 1) if theta else {}
        if self.check_alignment and inner_theta:
            self._check(inner_theta, ("xapp",))
        f = w_fun.lookup(d)
        body_theta = _projected_filter(inner_theta, f, 4) if inner_theta else {}
        w, t_body = self.apply(f, (w_old, w_nbr), body_theta)
        app_tree = Payload(lift(f), (EMPTY, EMPTY, EMPTY, t_body), ("xapp",))
        w_ret = _split_pair(w, 0)
        w_send = _split_pair(w, 1)
        return w_ret, Payload(w_send, (app_tree,), ("aux", "exchange"))

    def _b_nfold(self, args, theta):
        w1, w2, w3 = args
        d = self.device
        f = w1.lookup(d)
        acc = w3.lookup(d)
        for k in sorted(theta):
            if k != d:
                acc = self.call_literal(f, acc, w2.lookup(k))
        return lift(acc), EMPTY

    def _b_self(self, args, theta):
        return lift(args[0].lookup(self.device)), EMPTY

    def _b_uid(self, args, theta):
        return lift(float(self.device)), EMPTY

    def _b_updateSelf(self, args, theta):
        w, v = args
        return update_self(w, self.device, v.lookup(self.device)), EMPTY

    def _b_updateDef(self, args, theta):
        # the value is made explicit for every aligned neighbour before the default changes
        w, v = args
        nbrs = [k for k in theta if k != self.device]
        return update_def(materialize(w, nbrs), v.lookup(self.device)), EMPTY

    def _sensor(self, name):
        w = self.sensors.get(name)
        if w is None:
            raise SensorError(f"sensor {name!r} not available on device {self.device}")
        return w, EMPTY

    def _b_gps(self, args, theta):
        return self._sensor("gps")

    def _b_time(self, args, theta):
        return self._sensor("time")

    def _b_temperature(self, args, theta):
        return self._sensor("temperature")


def ensure_annotated(e: Expr) -> Expr:
    if any(isinstance(n, Fun) and n.tau is None for n in iter_nodes(e)):
        from .syntax.desugar import annotate_names

        return annotate_names(e)
    return e


def evaluate(device: int, theta: Optional[Mapping[int, object]], sensors: Optional[Mapping[str, NValue]], e: Expr, **options):
    """Evaluate ``e`` on ``device``; returns ``(nvalue, value_tree)``."""
    return Round(device, sensors, **options).run(ensure_annotated(e), theta)


def apply_function(device: int, theta, sensors, f, args: Sequence[NValue], **options):
    r = Round(device, sensors, **options)
    return r.apply(f, tuple(args), dict(theta or {}))


def eval_exchange(device: int, theta, sensors, w_init: NValue, w_fun: NValue, **options):
    r = Round(device, sensors, **options)
    return r._b_exchange((w_init, w_fun), dict(theta or {}))


# serialization


def serialize_tree(tree) -> str:
    """Pre-order text: ``B<n>;`` for branches, ``P<len>:<nvalue><n>;`` for payloads."""
    parts = []
    stack = [tree]
    while stack:
        node = stack.pop()
        if type(node) is Branch:
            parts.append(f"B{len(node.children)};")
        else:
            text = node.value.render()
            parts.append(f"P{len(text.encode())}:{text}{len(node.children)};")
        stack.extend(reversed(node.children))
    return "".join(parts)


class TreeFormatError(ValueError):
    pass


def deserialize_tree(text: str):
    from .syntax.parser import parse_nvalue

    data = text.strip().encode()
    pos = 0

    def read_int(end_char: bytes) -> int:
        nonlocal pos
        end = data.find(end_char, pos)
        if end < 0:
            raise TreeFormatError(f"truncated tree at byte {pos}")
        raw = data[pos:end]
        if not raw.isdigit():
            raise TreeFormatError(f"bad count at byte {pos}")
        pos = end + 1
        return int(raw)

    def header():
        nonlocal pos
        if pos >= len(data):
            raise TreeFormatError("truncated tree")
        kind = data[pos:pos + 1]
        pos += 1
        if kind == b"B":
            return None, read_int(b";")
        if kind == b"P":
            size = read_int(b":")
            body = data[pos:pos + size].decode()
            if len(body.encode()) != size:
                raise TreeFormatError("truncated payload")
            pos += size
            return parse_nvalue(body), read_int(b";")
        raise TreeFormatError(f"unknown node tag {kind!r} at byte {pos - 1}")

    value, count = header()
    root = [value, count, []]
    stack = [root]
    while stack:
        top = stack[-1]
        if len(top[2]) == top[1]:
            stack.pop()
            node = Branch(tuple(top[2])) if top[0] is None else Payload(top[0], tuple(top[2]))
            if stack:
                stack[-1][2].append(node)
            else:
                result = node
            continue
        value, count = header()
        stack.append([value, count, []])
    if pos != len(data):
        raise TreeFormatError("trailing data after tree")
    return result


def render_tree(tree, indent: int = 0) -> str:
    pad = "  " * indent
    if type(tree) is Branch:
        head = f"{pad}<>"
    else:
        head = f"{pad}{tree.value.render()}"
    return "\n".join([head] + [render_tree(c, indent + 1) for c in tree.children])
