"""Deterministic fuel-indexed evaluation and the observation order.

`stream_eval(e, n)` computes one canonical approximation of e: the result of
running e while permitting at most n beta steps along every call chain. Only
beta consumes fuel; the function body runs with one unit less, and a beta
with no fuel left yields bot. All other constructs pass their fuel through
untouched, so the sequence of observations at fuel 0, 1, 2, ... is a
monotone stream that reveals more of the term's meaning as fuel grows.

Termination does not rest on fuel alone: every recursive call either spends
a fuel unit or moves to a term with strictly fewer non-value nodes (the two
lets and big-join substitute values into a proper subterm, which cannot add
non-value nodes), so evaluation is total even though substitution grows
terms.

With tracing on, evaluation also emits the reduction steps that realise its
result, making every evaluator outcome a checkable claim about the
nondeterministic semantics. One evaluator outcome has no realising
reduction: applying a non-function value yields top here (the evaluator
cannot tell values apart without inspecting them), while no reduction rule
fires on such a term at all. Tracing raises Untraceable in that case.
"""

from __future__ import annotations

from typing import Optional

from .reduction import comp_lift, result_join
from .syntax import (
    BOT,
    DISCRETE,
    RULE_APPROX,
    RULE_BETA,
    RULE_BIG_JOIN,
    RULE_DROP_BOT,
    RULE_JOIN,
    RULE_LET_PAIR,
    RULE_LET_SYM,
    RULE_TOP,
    SYM_CONS,
    SYM_NIL,
    SYM_SUCC,
    SYM_ZERO,
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
    Path,
    SetLit,
    StepChoice,
    Sym,
    SymbolTable,
    Top,
    Var,
    alpha_eq,
    free_vars,
    is_value,
    subst,
    sym_literal,
    term_to_text,
)

__all__ = [
    "Untraceable",
    "stream_eval",
    "stream_eval_traced",
    "observations",
    "change_points",
    "obs_leq",
    "obs_equiv",
    "render",
]


class Untraceable(Exception):
    """The evaluator produced a top that no reduction sequence realises."""


def stream_eval(e: Expr, fuel: int, table: SymbolTable = DISCRETE) -> Expr:
    """The result of e at the given fuel: bot, top, or a value."""
    return _ev(e, fuel, table, (), None)


def stream_eval_traced(
    e: Expr, fuel: int, table: SymbolTable = DISCRETE
) -> tuple[Expr, list[StepChoice]]:
    """Like stream_eval, but also returns reduction steps from e to the
    result. Raises Untraceable when no such steps exist."""
    steps: list[StepChoice] = []
    r = _ev(e, fuel, table, (), steps)
    return r, steps


def _emit(out: Optional[list[StepChoice]], path: Path, rule: str) -> None:
    if out is not None:
        out.append(StepChoice(path, rule))


def _ensure_top(out: Optional[list[StepChoice]], path: Path) -> None:
    """After a subterm came out as top: unless a deeper step already
    collapsed the whole term, the top sits literally at `path`; propagate it."""
    if out is not None and not (out and out[-1].rule == RULE_TOP):
        out.append(StepChoice(path, RULE_TOP))


def _ev(
    e: Expr,
    fuel: int,
    table: SymbolTable,
    at: Path,
    out: Optional[list[StepChoice]],
) -> Expr:
    match e:
        case Bot():
            return BOT
        case Top():
            return TOP
        case Var() | BotV() | Sym() | Lam():
            return e

        case Pair(fst, snd):
            r1 = _ev(fst, fuel, table, at + ("fst",), out)
            if isinstance(r1, Top):
                _ensure_top(out, at + ("fst",))
                return TOP
            if isinstance(r1, Bot):
                _emit(out, at, RULE_APPROX)
                return BOT
            r2 = _ev(snd, fuel, table, at + ("snd",), out)
            if isinstance(r2, Top):
                _ensure_top(out, at + ("snd",))
                return TOP
            if isinstance(r2, Bot):
                _emit(out, at, RULE_APPROX)
                return BOT
            return Pair(r1, r2)

        case SetLit(elems):
            kept: list[Expr] = []
            dropped = 0
            for i, el in enumerate(elems):
                pos = at + (i - dropped,)
                r = _ev(el, fuel, table, pos, out)
                if isinstance(r, Top):
                    _ensure_top(out, pos)
                    return TOP
                if isinstance(r, Bot):
                    _emit(out, pos, RULE_DROP_BOT)
                    dropped += 1
                else:
                    kept.append(r)
            return SetLit(tuple(kept))

        case App(fn, arg):
            rf = _ev(fn, fuel, table, at + ("fn",), out)
            if isinstance(rf, Top):
                _ensure_top(out, at + ("fn",))
                return TOP
            if isinstance(rf, Bot):
                _emit(out, at, RULE_APPROX)
                return BOT
            ra = _ev(arg, fuel, table, at + ("arg",), out)
            if isinstance(ra, Top):
                _ensure_top(out, at + ("arg",))
                return TOP
            if isinstance(ra, Bot):
                _emit(out, at, RULE_APPROX)
                return BOT
            match rf:
                case Lam(x, body):
                    if fuel == 0:
                        _emit(out, at, RULE_APPROX)
                        return BOT
                    _emit(out, at, RULE_BETA)
                    return _ev(subst(body, x, ra), fuel - 1, table, at, out)
                case BotV():
                    # Inspecting the trivial value reveals nothing.
                    _emit(out, at, RULE_APPROX)
                    return BOT
                case _:
                    if out is not None:
                        raise Untraceable(
                            f"applied a non-function value: {term_to_text(rf)}"
                        )
                    return TOP

        case LetPair(_, _, scrut, _):
            rs = _ev(scrut, fuel, table, at + ("scrut",), out)
            if isinstance(rs, Top):
                _ensure_top(out, at + ("scrut",))
                return TOP
            match rs:
                case Pair(a, b):
                    _emit(out, at, RULE_LET_PAIR)
                    l, r = e.left, e.right
                    body = subst(e.body, l, a) if l != r else e.body
                    return _ev(subst(body, r, b), fuel, table, at, out)
                case _:
                    # bot scrutinee, or a value that is not a pair: the
                    # threshold is never met, so nothing ever comes out.
                    _emit(out, at, RULE_APPROX)
                    return BOT

        case LetSym(sym, scrut, body):
            rs = _ev(scrut, fuel, table, at + ("scrut",), out)
            if isinstance(rs, Top):
                _ensure_top(out, at + ("scrut",))
                return TOP
            match rs:
                case Sym(name) if table.leq(sym, name):
                    _emit(out, at, RULE_LET_SYM)
                    return _ev(body, fuel, table, at, out)
                case _:
                    _emit(out, at, RULE_APPROX)
                    return BOT

        case BigJoin(var, source, body):
            rs = _ev(source, fuel, table, at + ("src",), out)
            if isinstance(rs, Top):
                _ensure_top(out, at + ("src",))
                return TOP
            match rs:
                case SetLit(vs):
                    _emit(out, at, RULE_BIG_JOIN)
                    if not vs:
                        return BOT
                    k = len(vs)
                    acc: Optional[Expr] = None
                    for i, v in enumerate(vs):
                        if i == 0:
                            pos = at + ("left",) * (k - 1)
                        else:
                            pos = at + ("left",) * (k - 1 - i) + ("right",)
                        ri = _ev(subst(body, var, v), fuel, table, pos, out)
                        if isinstance(ri, Top):
                            _ensure_top(out, pos)
                            return TOP
                        if acc is None:
                            acc = ri
                        else:
                            node = at + ("left",) * (k - 1 - i)
                            _emit(out, node, RULE_JOIN)
                            acc = result_join(acc, ri, table)
                            if isinstance(acc, Top):
                                if node != at:
                                    _emit(out, node, RULE_TOP)
                                return TOP
                    return acc
                case _:
                    _emit(out, at, RULE_APPROX)
                    return BOT

        case Join(left, right):
            r1 = _ev(left, fuel, table, at + ("left",), out)
            if isinstance(r1, Top):
                _ensure_top(out, at + ("left",))
                return TOP
            r2 = _ev(right, fuel, table, at + ("right",), out)
            if isinstance(r2, Top):
                _ensure_top(out, at + ("right",))
                return TOP
            _emit(out, at, RULE_JOIN)
            j = result_join(r1, r2, table)
            if isinstance(j, Top) and at != ():
                _emit(out, at, RULE_TOP)
            return j

    raise TypeError(f"not an Expr: {e!r}")


# ---------------------------------------------------------------------------
# Observation streams


def observations(
    e: Expr, max_fuel: int, table: SymbolTable = DISCRETE
) -> list[Expr]:
    return [stream_eval(e, n, table) for n in range(max_fuel + 1)]


def obs_leq(a: Expr, b: Expr, table: SymbolTable = DISCRETE) -> Optional[bool]:
    """The streaming order on results, where decidable.

    First-order results compare structurally: bot below everything, top
    above everything, the trivial value below every value, symbols through
    the join table, pairs componentwise, and sets by coverage (every element
    on the left below some element on the right). Functions have no
    decidable order; any lambda makes the comparison None.
    """
    if alpha_eq(a, b) and not _has_lam(a):
        return True
    if isinstance(a, Bot) or isinstance(b, Top):
        return True
    if isinstance(b, Bot) or isinstance(a, Top):
        return False
    if _has_lam(a) or _has_lam(b):
        return None
    return _first_order_leq(a, b, table)


def _has_lam(e: Expr) -> bool:
    match e:
        case Lam():
            return True
        case Pair(a, b):
            return _has_lam(a) or _has_lam(b)
        case SetLit(es):
            return any(_has_lam(el) for el in es)
        case _:
            return False


def _first_order_leq(a: Expr, b: Expr, table: SymbolTable) -> bool:
    if isinstance(a, BotV):
        return True
    match a, b:
        case Sym(x), Sym(y):
            return table.leq(x, y)
        case Pair(a1, a2), Pair(b1, b2):
            return _first_order_leq(a1, b1, table) and _first_order_leq(
                a2, b2, table
            )
        case SetLit(xs), SetLit(ys):
            return all(
                any(_first_order_leq(x, y, table) for y in ys) for x in xs
            )
        case Var(x), Var(y):
            return x == y
        case _:
            return False


def obs_equiv(a: Expr, b: Expr, table: SymbolTable = DISCRETE) -> bool:
    """Equality of observations: alpha-equality, or mutual obs_leq when the
    order is decidable on both sides."""
    if alpha_eq(a, b):
        return True
    lo = obs_leq(a, b, table)
    hi = obs_leq(b, a, table)
    return lo is True and hi is True


def change_points(
    e: Expr, max_fuel: int, table: SymbolTable = DISCRETE
) -> list[tuple[int, Expr]]:
    """The fuels at which the observation stream of e changes, with the new
    result at each; fuel 0 is always included."""
    out: list[tuple[int, Expr]] = []
    prev: Optional[Expr] = None
    for fuel in range(max_fuel + 1):
        r = stream_eval(e, fuel, table)
        if prev is None or not obs_equiv(prev, r, table):
            out.append((fuel, r))
            prev = r
    return out


# ---------------------------------------------------------------------------
# Rendering observations


def _as_numeral(e: Expr) -> Optional[int]:
    n = 0
    while True:
        match e:
            case Pair(Sym(s), BotV()) if s == SYM_ZERO:
                return n
            case Pair(Sym(s), rest) if s == SYM_SUCC:
                n += 1
                e = rest
            case _:
                return None


def _as_list(e: Expr) -> Optional[tuple[list[Expr], Optional[Expr]]]:
    """Unfold a cons chain into (heads, improper tail); tail None means the
    chain ends in a proper nil."""
    heads: list[Expr] = []
    while True:
        match e:
            case Pair(Sym(s), BotV()) if s == SYM_NIL:
                return (heads, None) if heads else None
            case Pair(Sym(s), Pair(h, t)) if s == SYM_CONS:
                heads.append(h)
                e = t
            case _:
                return (heads, e) if heads else None


def _as_record(e: Expr) -> Optional[list[str]]:
    """Field names if e is a record: a lambda whose body joins threshold
    arms `let field = x in ...` (and bots), none capturing the binder."""
    match e:
        case Lam(x, body):
            fields: list[str] = []
            stack = [body]
            while stack:
                arm = stack.pop()
                match arm:
                    case Join(l, r):
                        stack.append(r)
                        stack.append(l)
                    case Bot():
                        pass
                    case LetSym(f, Var(v), inner) if v == x and x not in free_vars(
                        inner
                    ):
                        fields.append(f)
                    case _:
                        return None
            return sorted(set(fields))
        case _:
            return None


def render(r: Expr, fuel: int = 0, table: SymbolTable = DISCRETE) -> str:
    """Human form of a result: numerals in decimal, cons chains as lists,
    records by their fields (each projected at the given fuel), and symbols
    in their literal spelling. Anything else prints syntactically."""
    match r:
        case Bot():
            return "bot"
        case Top():
            return "top"
        case BotV():
            return "botv"
        case Sym(name):
            return sym_literal(name)
        case Var(name):
            return name
        case Pair(_, _):
            n = _as_numeral(r)
            if n is not None:
                return str(n)
            lst = _as_list(r)
            if lst is not None:
                heads, tail = lst
                shown = [render(h, fuel, table) for h in heads]
                if tail is None:
                    return "[" + ", ".join(shown) + "]"
                return " :: ".join(shown + [render(tail, fuel, table)])
            return f"({render(r.fst, fuel, table)}, {render(r.snd, fuel, table)})"
        case SetLit(elems):
            return "{" + ", ".join(render(el, fuel, table) for el in elems) + "}"
        case Lam(_, _):
            fields = _as_record(r)
            if fields is not None:
                parts = []
                for f in fields:
                    v = stream_eval(App(r, Sym(f)), fuel, table)
                    if isinstance(v, Bot):
                        # a field still at bot is indistinguishable from an
                        # absent one (records are ordered pointwise)
                        continue
                    parts.append(f"{f} = {render(v, fuel, table)}")
                return "{" + ", ".join(parts) + "}"
            return term_to_text(r)
        case _:
            return term_to_text(r)
