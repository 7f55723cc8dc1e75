"""Continuous first-order logic: syntax, parsing, intervals and evaluation."""
from .parser import format_formula, format_term, parse_formula, parse_term
from .semantics import (
    DEFAULT_TOL,
    DegenerateIntervalWarning,
    QuantBudget,
    eval_formula,
    eval_formula_batch,
    eval_term,
    interval_of,
    lipschitz_of,
    rescale_to_unit,
    rescale_with_flag,
)
from .syntax import *  # noqa: F401,F403
