"""Nondeterministic approximate small-step reduction.

Every step happens under an evaluation context: beta, pair and threshold
lets, big-join expansion over a set value, joining two results, dropping a
literal bot from a set, propagating an embedded top outward (which collapses
the whole term), and approximation, which may replace the focus of any
evaluation context by bot at any time. Approximation is what makes the
system total: a term's meaning is the set of results its finite reductions
can reach, ordered by how much they reveal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

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
    TOP,
    App,
    BigJoin,
    Bot,
    BotV,
    Canon,
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
    decompose,
    drop_set_elem,
    eval_positions,
    free_vars,
    fresh_name,
    is_result,
    is_value,
    replace_at,
    subst,
    subterm_at,
)


def comp_lift(r1: Expr, r2: Expr) -> Expr:
    """Pair two results computationally, left component first: a bot or top
    on the left hides the right entirely, matching left-to-right evaluation."""
    if isinstance(r1, Bot):
        return BOT
    if isinstance(r1, Top):
        return TOP
    if isinstance(r2, Bot):
        return BOT
    if isinstance(r2, Top):
        return TOP
    return Pair(r1, r2)


def result_join(a: Expr, b: Expr, table: SymbolTable = DISCRETE) -> Expr:
    """Least upper bound of two results; top when they carry conflicting
    information. Total on results (bot, top, and values)."""
    if isinstance(a, Bot):
        return b
    if isinstance(b, Bot):
        return a
    if isinstance(a, Top) or isinstance(b, Top):
        return TOP
    if alpha_eq(a, b):
        return a
    match a, b:
        case BotV(), _:
            return b
        case _, BotV():
            return a
        case Sym(x), Sym(y):
            j = table.join(x, y)
            return Sym(j) if j is not None else TOP
        case Pair(a1, a2), Pair(b1, b2):
            return comp_lift(
                result_join(a1, b1, table), result_join(a2, b2, table)
            )
        case SetLit(xs), SetLit(ys):
            out: list[Expr] = []
            seen: set[Canon] = set()
            for el in xs + ys:
                k = canonical(el)
                if k not in seen:
                    seen.add(k)
                    out.append(el)
            return SetLit(tuple(out))
        case Lam(x, e1), Lam(y, e2):
            if x != y:
                z = fresh_name(x, (free_vars(e1) - {x}) | (free_vars(e2) - {y}))
                e1 = subst(e1, x, Var(z))
                e2 = subst(e2, y, Var(z))
                x = z
            return Lam(x, _joined_body(e1, e2))
        case _:
            return TOP


def _joined_body(e1: Expr, e2: Expr) -> Expr:
    """Body of a joined lambda: flatten both join trees, drop bot arms, and
    keep one copy of alpha-equal arms. Join is idempotent with bot as unit
    pointwise, so this changes nothing observable, and it makes repeated
    self-joins (the fixpoints of recursive record programs) reach a
    syntactically stable form instead of growing forever."""
    arms: list[Expr] = []
    seen: set[Canon] = set()

    def walk(e: Expr) -> None:
        match e:
            case Join(l, r):
                walk(l)
                walk(r)
            case Bot():
                pass
            case _:
                k = canonical(e)
                if k not in seen:
                    seen.add(k)
                    arms.append(e)

    walk(e1)
    walk(e2)
    if not arms:
        return BOT
    out = arms[0]
    for arm in arms[1:]:
        out = Join(out, arm)
    return out


def step(e: Expr, choice: StepChoice, table: SymbolTable = DISCRETE) -> Expr:
    """Apply one reduction choice to e. Raises ValueError if the rule does
    not apply at the addressed position."""
    f = subterm_at(e, choice.path)
    rule = choice.rule
    if rule == RULE_APPROX:
        return replace_at(e, choice.path, BOT)
    if rule == RULE_TOP:
        if not isinstance(f, Top):
            raise ValueError("top-propagate expects a top occurrence")
        return TOP
    if rule == RULE_DROP_BOT:
        if not isinstance(f, Bot):
            raise ValueError("set-drop-bot expects a bot set element")
        return drop_set_elem(e, choice.path)
    if rule == RULE_BETA:
        match f:
            case App(Lam(x, body), v) if is_value(v):
                return replace_at(e, choice.path, subst(body, x, v))
        raise ValueError("beta expects a lambda applied to a value")
    if rule == RULE_LET_PAIR:
        match f:
            case LetPair(l, r, Pair(a, b), body) if is_value(a) and is_value(b):
                # Values reaching a redex are closed, so sequential
                # substitution agrees with the simultaneous one.
                body1 = subst(body, l, a) if l != r else body
                return replace_at(e, choice.path, subst(body1, r, b))
        raise ValueError("let-pair expects a pair-of-values scrutinee")
    if rule == RULE_LET_SYM:
        match f:
            case LetSym(s, Sym(name), body) if table.leq(s, name):
                return replace_at(e, choice.path, body)
        raise ValueError("let-sym expects a scrutinee at or above its threshold")
    if rule == RULE_BIG_JOIN:
        match f:
            case BigJoin(x, SetLit(vs), body) if all(is_value(v) for v in vs):
                if not vs:
                    return replace_at(e, choice.path, BOT)
                acc = subst(body, x, vs[0])
                for v in vs[1:]:
                    acc = Join(acc, subst(body, x, v))
                return replace_at(e, choice.path, acc)
        raise ValueError("big-join expects a set-of-values source")
    if rule == RULE_JOIN:
        match f:
            case Join(l, r) if is_result(l) and is_result(r):
                return replace_at(e, choice.path, result_join(l, r, table))
        raise ValueError("join-results expects two results")
    raise ValueError(f"unknown rule {rule!r}")


def enumerate_steps(e: Expr, table: SymbolTable = DISCRETE) -> list[StepChoice]:
    """All reduction choices available from e: every decomposition plus an
    approximation at every evaluation position not already bot.

    A closed result therefore offers approximations only (none at all for
    bot, which reaches nothing but itself).
    """
    out = decompose(e, table)
    for p in eval_positions(e):
        if not isinstance(subterm_at(e, p), Bot):
            out.append(StepChoice(p, RULE_APPROX))
    return out


def replay(e: Expr, steps: list[StepChoice], table: SymbolTable = DISCRETE) -> Expr:
    for c in steps:
        e = step(e, c, table)
    return e


@dataclass
class Exploration:
    """Everything reached by a bounded breadth-first reduction search."""

    reached: list[Expr]
    truncated: bool
    _parents: dict[Canon, tuple[Optional[Canon], Optional[StepChoice]]]

    def trace(self, target: Expr) -> Optional[list[StepChoice]]:
        """The step sequence that discovered `target`, or None if unreached."""
        k = canonical(target)
        if k not in self._parents:
            return None
        out: list[StepChoice] = []
        while True:
            pk, c = self._parents[k]
            if c is None:
                break
            out.append(c)
            k = pk
        out.reverse()
        return out

    def results(self) -> list[Expr]:
        """The reached terms that are results (bot, top, or a value)."""
        return [t for t in self.reached if is_result(t)]


def explore(
    e: Expr,
    budget: int,
    table: SymbolTable = DISCRETE,
    frontier_cap: int = 10_000,
) -> Exploration:
    """Breadth-first set of terms reachable from e in at most `budget` steps,
    deduplicated up to alpha. Deterministic; if a frontier would exceed
    `frontier_cap`, later discoveries at that depth are dropped, the search
    stops at that depth, and the result is flagged truncated (already
    incomplete, so deeper rounds would only cost time)."""
    k0 = canonical(e)
    parents: dict[Canon, tuple[Optional[Canon], Optional[StepChoice]]] = {
        k0: (None, None)
    }
    reached = [e]
    frontier = [(e, k0)]
    truncated = False
    for _ in range(budget):
        if not frontier:
            break
        nxt: list[tuple[Expr, Canon]] = []
        for t, kt in frontier:
            for c in enumerate_steps(t, table):
                t2 = step(t, c, table)
                k2 = canonical(t2)
                if k2 in parents:
                    continue
                if len(nxt) >= frontier_cap:
                    truncated = True
                    continue
                parents[k2] = (kt, c)
                reached.append(t2)
                nxt.append((t2, k2))
        if truncated:
            break
        frontier = nxt
    return Exploration(reached, truncated, parents)


def converges(
    e: Expr, budget: int, table: SymbolTable = DISCRETE
) -> Optional[Expr]:
    """First informative result e reaches within `budget` reduction steps.

    Sweeps the deterministic evaluator over increasing fuels and verifies
    each non-bot candidate by replaying its recorded reduction steps, so
    anything returned is genuinely reachable in at most `budget` steps.
    Fuels above the budget cannot help (each nested unfolding costs at
    least one step), so the sweep stops there. None means "not found
    within budget", never "diverges". Evaluator outcomes that no reduction
    realises (a non-function value in call position) are skipped.
    """
    from .stream import Untraceable, stream_eval_traced

    for fuel in range(budget + 1):
        try:
            r, steps = stream_eval_traced(e, fuel, table)
        except Untraceable:
            continue
        if isinstance(r, Bot) or len(steps) > budget:
            continue
        try:
            final = replay(e, steps, table)
        except (ValueError, KeyError):
            continue
        if alpha_eq(final, r):
            return r
    return None


def reachable_results(
    e: Expr,
    budget: int,
    table: SymbolTable = DISCRETE,
    frontier_cap: int = 10_000,
) -> tuple[list[Expr], Exploration]:
    """Results reachable from e in at most `budget` steps: the breadth-first
    exploration joined with the deterministic evaluator's own schedule.

    Breadth-first search enumerates exhaustively but only to shallow depths;
    the evaluator follows one deep schedule whose recorded steps replay to
    the same answer, certifying membership in the same reachable set. Every
    returned term is reachable within the budget; the listing is complete
    only when the exploration was not truncated.
    """
    from .stream import Untraceable, stream_eval_traced

    ex = explore(e, budget, table, frontier_cap)
    results: dict[Canon, Expr] = {}
    for t in ex.reached:
        if is_result(t):
            results.setdefault(canonical(t), t)
    for fuel in range(budget + 1):
        try:
            r, steps = stream_eval_traced(e, fuel, table)
        except Untraceable:
            continue
        if len(steps) > budget:
            # deeper fuels only unfold more, so their traces are no shorter
            break
        if not is_result(r) or canonical(r) in results:
            continue
        try:
            final = replay(e, steps, table)
        except (ValueError, KeyError):
            continue
        if alpha_eq(final, r):
            results[canonical(r)] = r
    return list(results.values()), ex
