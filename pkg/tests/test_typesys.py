import pytest

from xcalc.stdlib.corpus import corpus, load
from xcalc.syntax import desugar, parse
from xcalc.types import render_scheme
from xcalc.typesys import (
    BOOL,
    NUM,
    Arrow,
    ComparableError,
    Field,
    MismatchError,
    NestedFieldError,
    OccursCheckError,
    TVar,
    UnboundError,
    XCTypeError,
    builtin_signatures,
    check_program,
    infer,
    normalize,
    pair_of,
    render_type,
    unify,
)


def type_of(text, open_world=False):
    return render_type(infer(None, desugar(parse(text)), open_world=open_world))


def def_types(text):
    return dict((n, render_type(t)) for n, t in check_program(desugar(parse(text))).definitions)


@pytest.mark.parametrize("prog", [p for p in corpus() if p.expected_type], ids=lambda p: p.name)
def test_corpus_types_match_listing(prog):
    types = check_program(prog.compile().expr)
    entry = prog.entry()
    got = dict((n, render_type(t)) for n, t in types.definitions).get(entry, render_type(types.main))
    assert got == prog.expected_type


def test_listing_types():
    tys = def_types(load("distanceTo").source)
    assert tys["distanceEstimate"] == "(field[num]) -> num"
    assert tys["distanceTo"] == "(bool) -> num"
    assert def_types(load("average").source)["average"] == "(num, num) -> num"
    assert def_types(load("closestFire").source)["closestFire"] == "(num, num) -> num"
    prelude = def_types(load("prelude").source)
    assert prelude["nbr"] == prelude["old"] == "(A, field[A]) -> field[A]"


def test_let_polymorphism():
    assert type_of("val id = fun id(x){x}; pair(id(1), id(True))") == "PAIR[num, bool]"


def test_recursion_name_is_monomorphic():
    with pytest.raises(MismatchError):
        type_of("fun f(x) { val a = f(1); f(True) }")


def test_comparable_rejects_functions():
    with pytest.raises(ComparableError):
        type_of("1 == (fun f(x){x})")
    with pytest.raises(ComparableError):
        type_of("(fun f(x){x}) <= (fun g(x){x})")
    with pytest.raises(ComparableError):
        type_of("val eq = (a, b) => { a == b }; eq((x) => { x }, (x) => { x })")


def test_comparable_accepts_data():
    assert type_of("pair(1, True) == pair(2, False)") == "bool"


def test_error_kinds():
    with pytest.raises(UnboundError):
        type_of("x + 1")
    with pytest.raises(OccursCheckError):
        type_of("fun f(x) { x(x) }")
    with pytest.raises(MismatchError) as exc:
        infer(None, desugar(parse("1 + True", "bad.xc")))
    assert str(exc.value).startswith("bad.xc:1:5: type error:")


def test_nested_fields_are_rejected():
    with pytest.raises(NestedFieldError):
        type_of("exchange(senseDist, (o, n) => retsend n)")


def test_promotion_and_lifting():
    assert type_of("senseDist + 1") == "field[num]"
    assert type_of("mux(senseDist <= 2, 1, senseDist)") == "field[num]"
    assert type_of("self(senseDist) + 1") == "num"
    assert type_of("nfold(+, 1, 2)") == "num"
    assert type_of("senseDist == senseDist") == "field[bool]"
    with pytest.raises(XCTypeError):
        type_of("self(1) + senseDist == True")


def test_user_functions_are_not_lifted():
    with pytest.raises(MismatchError):
        type_of("val inc = (x) => { x + 1 }; val y = inc(senseDist); self(y) + inc(senseDist)")
    assert type_of("val f = (x) => { self(x) }; f(senseDist)") == "num"


def test_exchange_may_return_a_field():
    assert type_of("exchange(0, (o, n) => retsend n + 1)") == "field[num]"
    assert type_of("exchange(0, (o, n) => return self(n) send n)") == "num"


def test_open_world_sensors():
    types = check_program(desugar(parse("mux(src, 0, 1)")))
    assert render_type(types.sensors["src"]) == "bool"
    assert types.lines() == ["main : num", "sensor src : bool"]


def test_unify_examples():
    a = TVar(1)
    s = unify(a, NUM)
    assert s.apply(a) == NUM and s.lifts == 0
    s = unify(Field(NUM), NUM)
    assert s.lifts == 1
    with pytest.raises(NestedFieldError):
        unify(Field(TVar(1)), Field(Field(TVar(2))))
    with pytest.raises(OccursCheckError):
        unify(TVar(1), Arrow((TVar(1),), NUM))
    with pytest.raises(MismatchError):
        unify(NUM, Field(NUM))


def test_unifier_makes_types_equal():
    a = Arrow((TVar(1), pair_of(TVar(2), BOOL)), TVar(3))
    b = Arrow((NUM, pair_of(BOOL, TVar(4))), Field(NUM))
    s = unify(a, b)
    assert s.apply(a) == s.apply(b)


@pytest.mark.parametrize(
    "name, scheme",
    [
        ("mux", "(bool, A, A) -> A"),
        ("pair", "(A, B) -> PAIR[A, B]"),
        ("senseDist", "field[num]"),
        ("exchange", "(A, (field[A], field[A]) -> PAIR[B, field[A]]) -> B"),
        ("nfold", "((A, B) -> A, field[B], A) -> A"),
        ("self", "(field[A]) -> A"),
        ("updateSelf", "(field[A], A) -> field[A]"),
        ("updateDef", "(field[A], A) -> field[A]"),
        ("uid", "() -> num"),
        ("gps", "() -> PAIR[num, num]"),
        ("time", "() -> num"),
        ("temperature", "() -> num"),
        ("min", "(num, num) -> num"),
    ],
)
def test_builtin_signatures(name, scheme):
    assert render_scheme(builtin_signatures().lookup(name)) == scheme


def test_principality():
    for prog in corpus():
        e = prog.compile().expr
        a = check_program(e).main
        b = check_program(e).main
        assert normalize(a) == normalize(b)


def test_type_errors_are_xc_type_errors():
    assert issubclass(ComparableError, XCTypeError)
