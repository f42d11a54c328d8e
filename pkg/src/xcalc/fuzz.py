"""Random well-typed XC programs and a small lockstep harness to run them.

The generator is type-directed: it picks a target type and builds surface
text of that type, so most outputs type-check. Callers keep only those that
do (``generate_programs``) and then evaluate them on a fully connected
network, counting runtime type errors and budget aborts separately.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .device import Round
from .errors import RuntimeTypeError, StepBudgetExceeded
from .literals import Con
from .nvalue import NValue, lift
from .syntax.desugar import compile_source
from .typesys.infer import XCTypeError, check_program

NUM = ("num",)
BOOL = ("bool",)


def pair_t(a, b):
    return ("pair", a, b)


def field_t(t):
    return ("field", t)


def fn_t(params, ret):
    return ("fn", tuple(params), ret)


LOCAL_TYPES = (NUM, NUM, BOOL, pair_t(NUM, BOOL), pair_t(NUM, NUM))


def is_local(t) -> bool:
    return t[0] in ("num", "bool", "pair")


class Generator:
    def __init__(self, rng: random.Random, max_depth: int = 6):
        self.rng = rng
        self.max_depth = max_depth
        self.counter = 0

    def fresh(self, stem: str) -> str:
        self.counter += 1
        return f"{stem}{self.counter}"

    def choose(self, options):
        return self.rng.choice(options)

    # entry points

    def program(self) -> str:
        defs = []
        env: list = []
        for _ in range(self.rng.randint(0, 2)):
            name = self.fresh("f")
            params = [(self.fresh("p"), self.choose(LOCAL_TYPES + (field_t(NUM),))) for _ in range(self.rng.randint(0, 2))]
            ret = self.any_type()
            body = self.expr(ret, self.max_depth - 1, env + params)
            plist = ", ".join(p for p, _ in params)
            defs.append(f"def {name}({plist}) {{\n  {body}\n}}")
            env.append((name, fn_t([t for _, t in params], ret)))
        main = self.expr(self.any_type(), self.max_depth, env)
        return "\n\n".join(defs + [main]) + "\n"

    def any_type(self):
        t = self.choose(LOCAL_TYPES)
        return field_t(t) if self.rng.random() < 0.3 and t != pair_t(NUM, BOOL) else t

    # expressions

    def expr(self, t, depth: int, env: list) -> str:
        if depth <= 1 or self.rng.random() < 0.15:
            return self.leaf(t, env, depth)
        makers = self.makers(t)
        return self.choose(makers)(t, depth - 1, env)

    def leaf(self, t, env: list, depth: int = 1) -> str:
        vars_ = [n for n, vt in env if vt == t]
        if vars_ and self.rng.random() < 0.5:
            return self.choose(vars_)
        kind = t[0]
        if kind == "num":
            return self.choose(["0", "1", "2.5", "-3", "Infinity", "time()", "temperature()", "uid()", "10"])
        if kind == "bool":
            return self.choose(["True", "False"])
        if kind == "pair":
            if t == pair_t(NUM, NUM) and self.rng.random() < 0.3:
                return "gps()"
            return f"pair({self.leaf(t[1], env)}, {self.leaf(t[2], env)})"
        if kind == "field":
            if t[1] == NUM and self.rng.random() < 0.4:
                return "senseDist"
            return self.leaf(t[1], env)
        if kind == "fn":
            return self.lambda_(t, 1, env)
        raise ValueError(t)

    def makers(self, t):
        common = [self.val, self.conditional, self.mux, self.apply_lambda, self.apply_fun, self.apply_var]
        kind = t[0]
        if kind == "num":
            return common + [self.arith, self.arith, self.minmax, self.first, self.self_of, self.nfold, self.exchange_return]
        if kind == "bool":
            return common + [self.compare, self.logic, self.self_of, self.exchange_return]
        if kind == "pair":
            return common + [self.make_pair, self.self_of]
        if kind == "field":
            return [self.val, self.conditional, self.mux, self.apply_lambda, self.field_op, self.exchange_field,
                    self.exchange_field, self.update, self.promote]
        if kind == "fn":
            return [self.lambda_, self.lambda_, self.named_fun]
        raise ValueError(t)

    def val(self, t, depth, env):
        bt = self.any_type()
        name = self.fresh("v")
        bound = self.expr(bt, depth, env)
        return f"(val {name} = {bound}; {self.expr(t, depth, env + [(name, bt)])})"

    def conditional(self, t, depth, env):
        c = self.expr(BOOL, depth, env)
        return f"if ({c}) {{ {self.expr(t, depth, env)} }} else {{ {self.expr(t, depth, env)} }}"

    def mux(self, t, depth, env):
        c = self.expr(field_t(BOOL) if t[0] == "field" and self.rng.random() < 0.5 else BOOL, depth, env)
        return f"mux({c}, {self.expr(t, depth, env)}, {self.expr(t, depth, env)})"

    def arith(self, t, depth, env):
        op = self.choose(["+", "-", "*", "/"])
        return f"({self.expr(t, depth, env)} {op} {self.expr(t, depth, env)})"

    def minmax(self, t, depth, env):
        return f"{self.choose(['min', 'max'])}({self.expr(NUM, depth, env)}, {self.expr(NUM, depth, env)})"

    def compare(self, t, depth, env):
        op = self.choose(["==", "<=", ">=", "<", ">"])
        at = self.choose([NUM, NUM, BOOL, pair_t(NUM, BOOL)])
        if t[0] == "field":
            at = field_t(at)
        return f"({self.expr(at, depth, env)} {op} {self.expr(at, depth, env)})"

    def logic(self, t, depth, env):
        op = self.choose(["and", "or"])
        return f"({self.expr(t, depth, env)} {op} {self.expr(t, depth, env)})"

    def make_pair(self, t, depth, env):
        ctor = self.choose(["pair", "Pair"])
        return f"{ctor}({self.expr(t[1], depth, env)}, {self.expr(t[2], depth, env)})"

    def first(self, t, depth, env):
        other = self.choose([NUM, BOOL])
        if self.rng.random() < 0.5:
            return f"fst({self.expr(pair_t(t, other), depth, env)})"
        return f"snd({self.expr(pair_t(other, t), depth, env)})"

    def self_of(self, t, depth, env):
        return f"self({self.expr(field_t(t), depth, env)})"

    def nfold(self, t, depth, env):
        if self.rng.random() < 0.5:
            f = self.choose(["+", "min", "max", "*"])
        else:
            f = self.lambda_(fn_t([NUM, NUM], NUM), depth, env)
        return f"nfold({f}, {self.expr(field_t(NUM), depth, env)}, {self.expr(NUM, depth, env)})"

    def field_op(self, t, depth, env):
        base = t[1]
        if base == NUM:
            op = self.choose(["+", "-", "*", "/"])
            return f"({self.expr(t, depth, env)} {op} {self.expr(t, depth, env)})"
        if base == BOOL:
            return self.compare(t, depth, env)
        return f"pair({self.expr(field_t(base[1]), depth, env)}, {self.expr(field_t(base[2]), depth, env)})"

    def update(self, t, depth, env):
        which = self.choose(["updateSelf", "updateDef"])
        return f"{which}({self.expr(t, depth, env)}, {self.expr(t[1], depth, env)})"

    def promote(self, t, depth, env):
        return self.expr(t[1], depth, env)

    def handler_env(self, base, env):
        o, n = self.fresh("o"), self.fresh("n")
        return o, n, env + [(o, field_t(base)), (n, field_t(base))]

    def exchange_field(self, t, depth, env):
        base = t[1]
        init = self.expr(base, depth, env)
        o, n, inner = self.handler_env(base, env)
        if self.rng.random() < 0.2:
            return f"exchange({init}, ({n}) => retsend {self.expr(t, depth, env + [(n, t)])})"
        return f"exchange({init}, ({o}, {n}) => retsend {self.expr(t, depth, inner)})"

    def exchange_return(self, t, depth, env):
        base = self.choose([NUM, BOOL])
        init = self.expr(base, depth, env)
        o, n, inner = self.handler_env(base, env)
        ret = self.expr(t, depth, inner)
        send = self.expr(field_t(base), depth, inner)
        return f"exchange({init}, ({o}, {n}) => return {ret} send {send})"

    def lambda_(self, t, depth, env):
        params = [(self.fresh("x"), pt) for pt in t[1]]
        body = self.expr(t[2], max(depth, 1), env + params)
        return f"({', '.join(p for p, _ in params)}) => {{ {body} }}"

    def named_fun(self, t, depth, env):
        name = self.fresh("g")
        params = [(self.fresh("x"), pt) for pt in t[1]]
        inner = env + params
        if t[1] and t[1][0] == NUM and t[2] == NUM and self.rng.random() < 0.3:
            # bounded recursion on a numeric argument; may run out of budget
            x = params[0][0]
            rest = ", ".join(self.leaf(pt, inner) for _, pt in params[1:])
            call = f"{name}({x} - 1{', ' + rest if rest else ''})"
            body = f"if ({x} <= 0) {{ {self.expr(NUM, depth, inner)} }} else {{ 1 + {call} }}"
        else:
            body = self.expr(t[2], max(depth, 1), inner)
        return f"fun {name}({', '.join(p for p, _ in params)}) {{ {body} }}"

    def apply_lambda(self, t, depth, env):
        params = [self.choose(LOCAL_TYPES) for _ in range(self.rng.randint(0, 2))]
        fn = self.expr(fn_t(params, t), depth, env)
        args = ", ".join(self.expr(p, depth, env) for p in params)
        return f"({fn})({args})"

    def apply_fun(self, t, depth, env):
        params = [self.choose((NUM, BOOL)) for _ in range(self.rng.randint(1, 2))]
        fn = self.named_fun(fn_t(params, t), depth, env)
        args = ", ".join(self.expr(p, depth, env) for p in params)
        return f"({fn})({args})"

    def apply_var(self, t, depth, env):
        funcs = [(n, ft) for n, ft in env if ft[0] == "fn" and ft[2] == t]
        if not funcs:
            return self.expr(t, depth, env)
        name, ft = self.choose(funcs)
        args = ", ".join(self.expr(p, depth, env) for p in ft[1])
        return f"{name}({args})"


@dataclass
class FuzzProgram:
    source: str
    expr: object


def generate_programs(seed: int, count: int, max_depth: int = 6, max_attempts: Optional[int] = None) -> Iterator[FuzzProgram]:
    """Yield ``count`` generated programs that parse and type-check."""
    rng = random.Random(seed)
    made = attempts = 0
    limit = max_attempts if max_attempts is not None else count * 20
    while made < count and attempts < limit:
        attempts += 1
        text = Generator(rng, max_depth).program()
        try:
            prog = compile_source(text, "<fuzz>")
            check_program(prog.expr, open_world=False)
        except XCTypeError:
            continue
        made += 1
        yield FuzzProgram(text, prog.expr)


@dataclass
class FuzzOutcome:
    programs: int = 0
    rounds: int = 0
    aborts: int = 0
    type_errors: list = field(default_factory=list)


def fuzz_sensors(device: int, round_no: int, devices: int) -> dict:
    dist = {d: float(abs(d - device)) for d in range(devices)}
    return {
        "time": lift(float(round_no)),
        "temperature": lift(20.0 + device),
        "gps": lift(Con("Pair", (float(device), 0.0))),
        "senseDist": NValue(float("inf"), dist),
    }


def run_lockstep(expr, devices: int = 3, rounds: int = 5, budget: int = 20_000, outcome: Optional[FuzzOutcome] = None,
                 source: str = "") -> FuzzOutcome:
    """Every device fires once per round and sees all trees of the previous round."""
    outcome = outcome if outcome is not None else FuzzOutcome()
    trees: dict = {}
    for r in range(1, rounds + 1):
        new = {}
        for d in range(devices):
            try:
                _, tree = Round(d, fuzz_sensors(d, r, devices), budget=budget).run(expr, dict(trees))
            except StepBudgetExceeded:
                outcome.aborts += 1
                continue
            except RuntimeTypeError as exc:
                outcome.type_errors.append((source, str(exc)))
                continue
            new[d] = tree
            outcome.rounds += 1
        trees = new
    outcome.programs += 1
    return outcome


def fuzz(seed: int, count: int, **options) -> FuzzOutcome:
    outcome = FuzzOutcome()
    for prog in generate_programs(seed, count):
        run_lockstep(prog.expr, outcome=outcome, source=prog.source, **options)
    return outcome
