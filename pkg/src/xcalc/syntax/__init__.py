from .ast import App, Expr, Fun, Lit, SourceProgram, Span, Val, Var, alpha_equal, free_vars, iter_nodes
from .desugar import CompiledProgram, DesugarError, annotate_names, compile_source, desugar
from .lexer import LexError, tokenize
from .parser import ParseError, parse, parse_expr, parse_literal, parse_nvalue
from .pretty import pretty_print

__all__ = [
    "App", "Expr", "Fun", "Lit", "SourceProgram", "Span", "Val", "Var",
    "alpha_equal", "free_vars", "iter_nodes",
    "CompiledProgram", "DesugarError", "annotate_names", "compile_source", "desugar",
    "LexError", "tokenize", "ParseError", "parse", "parse_expr", "parse_literal", "parse_nvalue",
    "pretty_print",
]
