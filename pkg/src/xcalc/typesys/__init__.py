from .infer import (
    ComparableError,
    Inference,
    MismatchError,
    NestedFieldError,
    OccursCheckError,
    ProgramTypes,
    Substitution,
    TypingEnv,
    UnboundError,
    XCTypeError,
    builtin_signatures,
    check_program,
    infer,
    unify,
)
from ..types import BOOL, NUM, Arrow, Data, Field, Scheme, TVar, normalize, pair_of, render_type

__all__ = [
    "ComparableError", "Inference", "MismatchError", "NestedFieldError", "OccursCheckError",
    "ProgramTypes", "Substitution", "TypingEnv", "UnboundError", "XCTypeError",
    "builtin_signatures", "check_program", "infer", "unify",
    "BOOL", "NUM", "Arrow", "Data", "Field", "Scheme", "TVar", "normalize", "pair_of", "render_type",
]
