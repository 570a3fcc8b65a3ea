"""A call-by-value lambda calculus with joins, symbol thresholds, and
finite sets, equipped with a nondeterministic approximating rewrite system,
a deterministic fuel-indexed evaluator that agrees with it, and a formula
language for certifying partial observations.
"""

import sys as _sys

# Terms and derivations recurse on structure; give deep programs headroom.
_sys.setrecursionlimit(max(_sys.getrecursionlimit(), 20_000))

from .syntax import (
    BOT,
    BOTV,
    DISCRETE,
    TOP,
    App,
    BigJoin,
    Bot,
    BotV,
    Expr,
    Join,
    Lam,
    LetPair,
    LetSym,
    Pair,
    SetLit,
    StepChoice,
    Sym,
    SymbolTable,
    Top,
    Var,
    alpha_eq,
    canonical,
    free_vars,
    is_result,
    is_value,
    parse_sym_table,
    subst,
    term_to_text,
)
from .formulae import (
    BOT_F,
    BOTV_F,
    TOP_F,
    BotF,
    BotVF,
    Form,
    FunF,
    PairF,
    SetF,
    SymF,
    TopF,
    canonical_form,
    enumerate_forms,
    form_join,
    form_leq,
    form_lift_pair,
    form_lift_set,
    form_size,
    form_to_text,
    parse_formula,
)
from .reduction import (
    Exploration,
    converges,
    decompose,
    enumerate_steps,
    explore,
    replay,
    result_join,
    step,
)
from .stream import (
    Untraceable,
    change_points,
    obs_equiv,
    obs_leq,
    observations,
    render,
    stream_eval,
    stream_eval_traced,
)
from .surface import LVError, LVSyntaxError, desugar_program, parse_term
from .assignment import (
    Derivation,
    check_assign,
    log_leq_bounded,
    synthesize_forms,
    validate,
    value_witness,
)

__version__ = "0.1.0"

__all__ = [
    "App", "BigJoin", "Bot", "BotV", "Expr", "Join", "Lam", "LetPair",
    "LetSym", "Pair", "SetLit", "StepChoice", "Sym", "SymbolTable", "Top",
    "Var", "BOT", "BOTV", "TOP", "DISCRETE", "alpha_eq", "canonical",
    "free_vars", "is_result", "is_value", "parse_sym_table", "subst",
    "term_to_text",
    "BotF", "BotVF", "Form", "FunF", "PairF", "SetF", "SymF", "TopF",
    "BOT_F", "BOTV_F", "TOP_F", "canonical_form", "enumerate_forms",
    "form_join", "form_leq", "form_lift_pair", "form_lift_set", "form_size", "form_to_text", "parse_formula",
    "Exploration", "converges", "decompose", "enumerate_steps", "explore",
    "replay", "result_join", "step",
    "Untraceable", "change_points", "obs_equiv", "obs_leq", "observations",
    "render", "stream_eval", "stream_eval_traced",
    "LVError", "LVSyntaxError", "desugar_program", "parse_term",
    "Derivation", "check_assign", "log_leq_bounded", "synthesize_forms",
    "validate", "value_witness",
    "__version__",
]
