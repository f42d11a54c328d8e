"""Render core expressions back to parseable surface text.

Desugared patterns are folded back into their sugar where it is recognisable
(``if``, lambdas, ``retsend``, ``return .. send``, top-level ``def``), so the
output reads like hand-written code. Generated ``%`` names are replaced by
identifiers that do not clash with anything in scope.
"""
from __future__ import annotations

from ..literals import Builtin, Con, format_number, render_literal
from ..stdlib.registry import BUILTIN_NAMES
from .ast import App, Expr, Fun, Lit, Val, Var, alpha_equal, free_vars, iter_nodes
from .parser import BINARY_LEVELS

_PRECEDENCE = {op: i for i, level in enumerate(BINARY_LEVELS) for op in level}
_INDENT = "  "


def _uses_builtin(e: Expr, name: str) -> bool:
    return any(isinstance(n, Lit) and n.value == Builtin(name) for n in iter_nodes(e))


class _Printer:
    def __init__(self, root: Expr):
        self.taken = {n.name for n in iter_nodes(root) if isinstance(n, Var)}
        for n in iter_nodes(root):
            if isinstance(n, Fun):
                self.taken.update(n.params)
                self.taken.add(n.name)
            elif isinstance(n, Val):
                self.taken.add(n.name)
        self.taken |= BUILTIN_NAMES

    def fresh(self, stem: str) -> str:
        stem = stem.lstrip("%").rstrip("0123456789") or "x"
        i = 0
        while True:
            name = stem if i == 0 else f"{stem}{i}"
            if name not in self.taken:
                self.taken.add(name)
                return name
            i += 1

    def bind(self, name: str, body: Expr, ren: dict) -> tuple[str, dict]:
        """Surface name for a binder, renaming generated or builtin-shadowing names."""
        if name.startswith("%") or (name in BUILTIN_NAMES and _uses_builtin(body, name)):
            new = self.fresh(name)
        else:
            new = name
        ren = dict(ren)
        ren[name] = new
        return new, ren

    # expressions

    def expr(self, e: Expr, ren: dict, depth: int) -> str:
        if isinstance(e, Val):
            name, inner = self.bind(e.name, e.body, ren)
            bound = self.expr(e.bound, ren, depth)
            return f"val {name} = {bound};\n{_INDENT * depth}{self.expr(e.body, inner, depth)}"
        return self.operand(e, ren, depth)

    def operand(self, e: Expr, ren: dict, depth: int) -> str:
        if isinstance(e, App):
            op = e.fn.value.name if isinstance(e.fn, Lit) and isinstance(e.fn.value, Builtin) else None
            if op in _PRECEDENCE and len(e.args) == 2:
                level = _PRECEDENCE[op]
                left = self.infix_side(e.args[0], level, ren, depth, right=False)
                right = self.infix_side(e.args[1], level, ren, depth, right=True)
                return f"{left} {op} {right}"
        return self.postfix(e, ren, depth)

    def infix_side(self, e: Expr, level: int, ren: dict, depth: int, right: bool) -> str:
        text = self.operand(e, ren, depth)
        if isinstance(e, App) and isinstance(e.fn, Lit) and isinstance(e.fn.value, Builtin):
            inner = _PRECEDENCE.get(e.fn.value.name)
            if inner is not None and len(e.args) == 2:
                if inner < level or (right and inner == level):
                    return f"({text})"
                return text
        if isinstance(e, Fun) and self.lambda_like(e):
            return f"({text})"
        if self.is_conditional(e):
            return f"({text})"
        return text

    def postfix(self, e: Expr, ren: dict, depth: int) -> str:
        if isinstance(e, Var):
            return ren.get(e.name, e.name)
        if isinstance(e, Lit):
            return self.literal(e.value)
        if isinstance(e, Fun):
            return self.function(e, ren, depth)
        if isinstance(e, Val):
            return f"({self.expr(e, ren, depth)})"
        if isinstance(e, App):
            cond = self.conditional(e, ren, depth)
            if cond is not None:
                return cond
            exch = self.exchange(e, ren, depth)
            if exch is not None:
                return exch
            fn = self.operand(e.fn, ren, depth)
            if isinstance(e.fn, Fun) or (isinstance(e.fn, App) and (_is_infix(e.fn) or self.is_conditional(e.fn))):
                fn = f"({fn})"
            args = ", ".join(self.expr(a, ren, depth) for a in e.args)
            return f"{fn}({args})"
        raise TypeError(f"not a core expression: {type(e).__name__}")

    def literal(self, v) -> str:
        if isinstance(v, float):
            return format_number(v)
        if isinstance(v, Con):
            return f"{v.name}({', '.join(self.literal(a) for a in v.args)})"
        return render_literal(v)

    def lambda_like(self, f: Fun) -> bool:
        return f.name.startswith("%") and f.name not in free_vars(f.body)

    def function(self, f: Fun, ren: dict, depth: int, handler: bool = False) -> str:
        inner = dict(ren)
        params = []
        for p in f.params:
            new, inner = self.bind(p, f.body, inner)
            params.append(new)
        plist = ", ".join(params)
        if self.lambda_like(f):
            pair = self.pair_parts(f.body) if handler else None
            if pair is not None:
                ret, send = pair
                if alpha_equal(ret, send):
                    return f"({plist}) => retsend {self.expr(ret, inner, depth)}"
                return f"({plist}) => return {self.expr(ret, inner, depth)} send {self.expr(send, inner, depth)}"
            return f"({plist}) => {self.block(f.body, inner, depth)}"
        name, inner = self.bind(f.name, f.body, inner)
        # the function name is bound before its parameters
        for p, new in zip(f.params, params):
            inner[p] = new
        return f"fun {name}({plist}) {self.block(f.body, inner, depth)}"

    def block(self, body: Expr, ren: dict, depth: int) -> str:
        inner = self.expr(body, ren, depth + 1)
        if "\n" in inner:
            return f"{{\n{_INDENT * (depth + 1)}{inner}\n{_INDENT * depth}}}"
        return f"{{ {inner} }}"

    @staticmethod
    def pair_parts(e: Expr):
        if (
            isinstance(e, App)
            and isinstance(e.fn, Lit)
            and e.fn.value == Builtin("Pair")
            and len(e.args) == 2
        ):
            return e.args
        return None

    def exchange(self, e: App, ren: dict, depth: int):
        if not (isinstance(e.fn, Lit) and e.fn.value == Builtin("exchange") and len(e.args) == 2):
            return None
        h = e.args[1]
        if not (isinstance(h, Fun) and self.lambda_like(h) and len(h.params) == 2):
            return None
        init = self.expr(e.args[0], ren, depth)
        return f"exchange({init}, {self.function(h, ren, depth, handler=True)})"

    @staticmethod
    def is_conditional(e: Expr) -> bool:
        if not (isinstance(e, App) and not e.args and isinstance(e.fn, App)):
            return False
        m = e.fn
        return (
            isinstance(m.fn, Lit)
            and m.fn.value == Builtin("mux")
            and len(m.args) == 3
            and all(isinstance(t, Fun) and not t.params and t.name.startswith("%")
                    and t.name not in free_vars(t.body) for t in m.args[1:])
        )

    def conditional(self, e: Expr, ren: dict, depth: int):
        if not self.is_conditional(e):
            return None
        cond, then, orelse = e.fn.args
        text = f"if ({self.expr(cond, ren, depth)}) {self.block(then.body, ren, depth)} else "
        if self.is_conditional(orelse.body):
            return text + self.conditional(orelse.body, ren, depth)
        return text + self.block(orelse.body, ren, depth)

    # programs

    def program(self, e: Expr) -> str:
        parts = []
        ren: dict = {}
        while isinstance(e, Val) and isinstance(e.bound, Fun) and e.bound.name == e.name and not e.name.startswith("%"):
            f = e.bound
            inner = dict(ren)
            params = []
            for p in f.params:
                new, inner = self.bind(p, f.body, inner)
                params.append(new)
            parts.append(f"def {e.name}({', '.join(params)}) {self.block(f.body, inner, 0)}")
            e = e.body
        parts.append(self.expr(e, ren, 0))
        return "\n\n".join(parts) + "\n"


def _is_infix(e: App) -> bool:
    fn = e.fn
    return isinstance(fn, Lit) and isinstance(fn.value, Builtin) and fn.value.name in _PRECEDENCE and len(e.args) == 2


def pretty_print(e: Expr) -> str:
    """Surface text for a core expression; top-level function ``val``s print as ``def``."""
    return _Printer(e).program(e)


def pretty_expr(e: Expr) -> str:
    return _Printer(e).expr(e, {}, 0)
