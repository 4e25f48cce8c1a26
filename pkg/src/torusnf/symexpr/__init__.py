from . import expr
from .expr import (
    Expr,
    EvaluationError,
    ONE,
    ZERO,
    add,
    as_expr,
    bump,
    const,
    diff_multi,
    differentiate,
    evaluate,
    evaluate_many,
    jap,
    linear,
    masked,
    mul,
    neg,
    norm,
    norm_pow,
    power,
    psi,
    sub,
    xi,
)
from .fourier import FourierSymbol, cosine_potential, sum_symbols
from .parser import ParseError, parse
from .printer import to_string

__all__ = [
    "Expr", "EvaluationError", "ONE", "ZERO", "add", "as_expr", "bump", "const",
    "diff_multi", "differentiate", "evaluate", "evaluate_many", "jap", "linear",
    "masked", "mul", "neg", "norm", "norm_pow", "power", "psi", "sub", "xi",
    "FourierSymbol", "cosine_potential", "sum_symbols", "ParseError", "parse",
    "to_string", "expr",
]
