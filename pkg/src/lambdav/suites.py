"""Property suites over the calculus, shared by the command line runner and
the test harness.

Each suite is a named generator of individual checks. A check failure
carries a message with enough detail to reproduce (the seed fixes all
randomness). The default suites are `symbols` (join-table laws), `order`
(the formula-order lemmas), `expansion` (subject expansion of the
assignment relation), `monotonicity` (observations grow with fuel), and
`oracle` (evaluator traces replay through the rewrite rules); `adequacy`
(certified formulae are realised by reachable results) runs on request.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .assignment import check_assign, result_form, synthesize_forms
from .formulae import (
    BOT_F,
    BOTV_F,
    TOP_F,
    BotVF,
    Form,
    FunF,
    PairF,
    SetF,
    SymF,
    canonical_form,
    enumerate_forms,
    form_join,
    form_leq,
    form_size,
    form_to_text,
    is_value_form,
)
from .reduction import RULE_APPROX, enumerate_steps, explore, replay, step
from .stream import Untraceable, obs_leq, stream_eval, stream_eval_traced
from .syntax import (
    BOT,
    BOTV,
    DISCRETE,
    App,
    BigJoin,
    Expr,
    Join,
    Lam,
    LetPair,
    LetSym,
    Pair,
    SetLit,
    Sym,
    SymbolTable,
    Var,
    alpha_eq,
    is_result,
    term_to_text,
)


@dataclass
class SuiteResult:
    name: str
    checks: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def tick(self) -> None:
        self.checks += 1

    def fail(self, msg: str) -> None:
        self.checks += 1
        if len(self.failures) < 20:
            self.failures.append(msg)
        else:
            self.failures.append("... further failures suppressed")
            raise _Abort()


class _Abort(Exception):
    pass


# ---------------------------------------------------------------------------
# A small zoo of closed terms touching every construct

def _n(k: int) -> Expr:
    out: Expr = Pair(Sym("zero"), BOTV)
    for _ in range(k):
        out = Pair(Sym("succ"), out)
    return out


def term_zoo() -> list[tuple[str, Expr]]:
    t, f = Sym("true"), Sym("false")
    ab = SetLit((Sym("a"), Sym("b")))
    return [
        ("botv", BOTV),
        ("sym", Sym("a")),
        ("pair", Pair(Sym("a"), BOTV)),
        ("set", ab),
        ("join-same", Join(t, t)),
        ("join-bot", Join(BOT, Sym("a"))),
        ("join-diverge", Join(t, f)),
        ("identity", App(Lam("x", Var("x")), Sym("a"))),
        ("const", App(App(Lam("x", Lam("y", Var("x"))), t), f)),
        ("let-sym-hit", LetSym("true", t, Sym("a"))),
        ("let-sym-miss", LetSym("true", f, Sym("a"))),
        ("let-pair", LetPair("h", "u", Pair(t, f), Var("h"))),
        ("big-join", BigJoin("x", ab, SetLit((Var("x"),)))),
        ("big-join-empty", BigJoin("x", SetLit(()), Sym("a"))),
        (
            "guarded-or",
            Join(LetSym("true", t, t), LetSym("false", t, f)),
        ),
        ("nested-app", App(Lam("p", LetPair("a", "b", Var("p"), Var("b"))), Pair(t, _n(2)))),
        ("set-of-pairs", SetLit((Pair(Sym("a"), t), Pair(Sym("b"), f)))),
    ]


# ---------------------------------------------------------------------------
# Random closed terms


def random_term(rng: random.Random, depth: int, env: tuple[str, ...] = ()) -> Expr:
    syms = ("a", "b", "true", "false")
    if depth <= 0:
        picks: list[Callable[[], Expr]] = [
            lambda: BOTV,
            lambda: Sym(rng.choice(syms)),
            lambda: Pair(Sym(rng.choice(syms)), BOTV),
            lambda: SetLit(()),
            lambda: Lam("x", Var("x")),
        ]
        if env:
            picks.append(lambda: Var(rng.choice(env)))
        if rng.random() < 0.05:
            return BOT
        return rng.choice(picks)()

    def sub(d: int = depth - 1, extra: tuple[str, ...] = ()) -> Expr:
        return random_term(rng, d, env + extra)

    roll = rng.random()
    if roll < 0.14:
        return Pair(sub(), sub())
    if roll < 0.26:
        return SetLit(tuple(sub() for _ in range(rng.randint(1, 2))))
    if roll < 0.40:
        return Join(sub(), sub())
    if roll < 0.56:
        x = f"v{depth}"
        return App(Lam(x, sub(extra=(x,))), sub())
    if roll < 0.68:
        return LetSym(rng.choice(syms), sub(), sub())
    if roll < 0.78:
        x, y = f"l{depth}", f"r{depth}"
        scrut = rng.choice([Pair(sub(0), sub(0)), sub()])
        return LetPair(x, y, scrut, sub(extra=(x, y)))
    if roll < 0.88:
        x = f"e{depth}"
        src = rng.choice(
            [SetLit(tuple(sub(0) for _ in range(rng.randint(0, 2)))), sub()]
        )
        return BigJoin(x, src, sub(extra=(x,)))
    if roll < 0.94:
        x = f"f{depth}"
        return Lam(x, sub(extra=(x,)))
    return sub(0)


# ---------------------------------------------------------------------------
# Suites


def suite_symbols(seed: int, table: SymbolTable, depth: int = 3) -> SuiteResult:
    """Join-table laws: well-formedness, reflexivity, commutativity,
    idempotence."""
    res = SuiteResult("symbols")
    tables = {
        "given": table,
        "discrete": DISCRETE,
        "chain": SymbolTable({("lo", "mid"): "mid", ("mid", "hi"): "hi", ("lo", "hi"): "hi"}),
    }
    try:
        for name, t in tables.items():
            try:
                t.validate()
                res.tick()
            except ValueError as ex:
                res.fail(f"{name}: {ex}")
            syms = sorted(t.symbols())
            for a in syms:
                if not t.leq(a, a):
                    res.fail(f"{name}: leq not reflexive at {a}")
                else:
                    res.tick()
                if t.join(a, a) != a:
                    res.fail(f"{name}: join not idempotent at {a}")
                else:
                    res.tick()
                for b in syms:
                    if t.join(a, b) != t.join(b, a):
                        res.fail(f"{name}: join not commutative at {a},{b}")
                    else:
                        res.tick()
    except _Abort:
        pass
    return res


def _form_pool(table: SymbolTable, depth: int) -> list[Form]:
    syms = sorted(table.symbols()) or ["a", "b"]
    return list(enumerate_forms(depth, syms[:2]))


def suite_order(
    seed: int,
    table: SymbolTable,
    depth: int = 3,
    triples: int = 100_000,
    lub_samples: int = 20_000,
    dist_samples: int = 10_000,
) -> SuiteResult:
    """The formula-order lemmas over the enumerated pool: reflexivity and
    bounds, sampled transitivity, exhaustive size-of-joins, join
    least-upper-bound laws, the arrow distributivity instance, and
    inversion sanity for symbol and pair upper bounds."""
    res = SuiteResult("order")
    rng = random.Random(seed)
    pool = _form_pool(table, depth)
    vpool = [f for f in pool if is_value_form(f)]
    symbols = sorted(table.symbols()) or ["a", "b"]
    try:
        for phi in pool:
            if not form_leq(phi, phi, table):
                res.fail(f"not reflexive: {form_to_text(phi)}")
            else:
                res.tick()
            if not form_leq(BOT_F, phi, table) or not form_leq(phi, TOP_F, table):
                res.fail(f"bounds broken at {form_to_text(phi)}")
            else:
                res.tick()
        for _ in range(triples):
            a, b, c = (rng.choice(pool) for _ in range(3))
            if form_leq(a, b, table) and form_leq(b, c, table):
                if not form_leq(a, c, table):
                    res.fail(
                        "transitivity: "
                        f"{form_to_text(a)} <= {form_to_text(b)} <= {form_to_text(c)}"
                    )
                    continue
            res.tick()
        for a in pool:
            for b in pool:
                j = form_join(a, b, table)
                if form_size(j) > max(form_size(a), form_size(b)):
                    res.fail(
                        f"join grew: {form_to_text(a)} | {form_to_text(b)}"
                        f" -> {form_to_text(j)}"
                    )
                else:
                    res.tick()
        for _ in range(lub_samples):
            a, b = rng.choice(pool), rng.choice(pool)
            j = form_join(a, b, table)
            if not (form_leq(a, j, table) and form_leq(b, j, table)):
                res.fail(
                    f"join not an upper bound: {form_to_text(a)} | {form_to_text(b)}"
                )
                continue
            c = rng.choice(pool)
            if form_leq(a, c, table) and form_leq(b, c, table) and not form_leq(j, c, table):
                res.fail(
                    "join not least: "
                    f"{form_to_text(a)} | {form_to_text(b)} vs {form_to_text(c)}"
                )
                continue
            res.tick()
        # tau -> (phi | phi') is below (tau -> phi) | (tau -> phi')
        for _ in range(dist_samples):
            tau = rng.choice(vpool)
            phi, phi2 = rng.choice(pool), rng.choice(pool)
            lhs = canonical_form(FunF(((tau, form_join(phi, phi2, table)),)))
            rhs = form_join(
                FunF(((tau, phi),)), FunF(((tau, phi2),)), table
            )
            if not form_leq(lhs, rhs, table):
                res.fail(
                    "distributivity: "
                    f"{form_to_text(lhs)} not below {form_to_text(rhs)}"
                )
            else:
                res.tick()
        # inversion sanity: a value form below a symbol is botv or a symbol
        # below it; below a pair, botv or a componentwise-below pair
        for tau in vpool:
            for s in symbols:
                if form_leq(tau, SymF(s), table):
                    ok = isinstance(tau, BotVF) or (
                        isinstance(tau, SymF) and table.leq(tau.name, s)
                    )
                    if not ok:
                        res.fail(
                            f"inversion: {form_to_text(tau)} below '{s}"
                        )
                        continue
                res.tick()
        pairs = [f for f in vpool if isinstance(f, PairF)][:40]
        for tau in vpool:
            for p in pairs:
                if form_leq(tau, p, table):
                    ok = isinstance(tau, BotVF) or (
                        isinstance(tau, PairF)
                        and form_leq(tau.fst, p.fst, table)
                        and form_leq(tau.snd, p.snd, table)
                    )
                    if not ok:
                        res.fail(
                            f"inversion: {form_to_text(tau)} below {form_to_text(p)}"
                        )
                        continue
                res.tick()
    except _Abort:
        pass
    return res


def suite_expansion(
    seed: int,
    table: SymbolTable,
    depth: int = 3,
    n_terms: int = 1000,
    synth_fuel: int = 4,
) -> SuiteResult:
    """Subject expansion: if e steps to e2 by any non-approximation rule,
    every certified formula of e2 checks on e."""
    res = SuiteResult("expansion")
    rng = random.Random(seed)
    made = 0
    try:
        while made < n_terms:
            e = random_term(rng, rng.randint(1, 3))
            choices = [
                c for c in enumerate_steps(e, table) if c.rule != RULE_APPROX
            ]
            if not choices:
                continue
            made += 1
            e2 = step(e, rng.choice(choices), table)
            for phi in synthesize_forms(e2, synth_fuel, 3, table):
                if check_assign(e, phi, table) is None:
                    res.fail(
                        f"lost under expansion: {term_to_text(e)} "
                        f"-> {term_to_text(e2)} : {form_to_text(phi)}"
                    )
                else:
                    res.tick()
    except _Abort:
        pass
    return res


def suite_monotonicity(
    seed: int,
    table: SymbolTable,
    depth: int = 3,
    terms: Optional[list[tuple[str, Expr]]] = None,
    max_fuel: int = 24,
) -> SuiteResult:
    """Observations only grow along the fuel axis, whenever comparable."""
    res = SuiteResult("monotonicity")
    terms = terms if terms is not None else term_zoo()
    try:
        for name, e in terms:
            prev = stream_eval(e, 0, table)
            for n in range(1, max_fuel + 1):
                cur = stream_eval(e, n, table)
                cmp = obs_leq(prev, cur, table)
                if cmp is False:
                    res.fail(f"{name}: fuel {n - 1} -> {n} not monotone")
                else:
                    res.tick()
                prev = cur
    except _Abort:
        pass
    return res


def suite_oracle(
    seed: int,
    table: SymbolTable,
    depth: int = 3,
    terms: Optional[list[tuple[str, Expr]]] = None,
    max_fuel: int = 8,
    bfs_budget: int = 6,
) -> SuiteResult:
    """The fast evaluator agrees with the rewrite rules: its trace replays
    step by step to exactly its answer, so the answer is a member of the
    reachable set at that step budget. Short traces are additionally
    cross-checked against the literal breadth-first exploration."""
    res = SuiteResult("oracle")
    terms = terms if terms is not None else term_zoo()
    try:
        for name, e in terms:
            for n in range(max_fuel + 1):
                try:
                    r, steps = stream_eval_traced(e, n, table)
                except Untraceable:
                    res.tick()
                    continue
                got = replay(e, steps, table)
                if not alpha_eq(got, r):
                    res.fail(
                        f"{name} at fuel {n}: replay gave "
                        f"{term_to_text(got)}, evaluator gave {term_to_text(r)}"
                    )
                    continue
                res.tick()
                if len(steps) <= bfs_budget and is_result(r):
                    ex = explore(e, len(steps), table)
                    if not any(alpha_eq(r, t) for t in ex.reached):
                        res.fail(
                            f"{name} at fuel {n}: {term_to_text(r)} missing "
                            f"from the {len(steps)}-step exploration"
                        )
                    else:
                        res.tick()
    except _Abort:
        pass
    return res


def _first_order(phi: Form) -> bool:
    match phi:
        case FunF(clauses):
            return not clauses
        case PairF(a, b):
            return _first_order(a) and _first_order(b)
        case SetF(elems):
            return all(_first_order(el) for el in elems)
        case _:
            return True


def suite_adequacy(
    seed: int,
    table: SymbolTable,
    depth: int = 3,
    terms: Optional[list[tuple[str, Expr]]] = None,
    budget: int = 24,
) -> SuiteResult:
    """Every certified first-order formula is realised by a result the term
    verifiably converges to within the budget (replay-checked)."""
    res = SuiteResult("adequacy")
    terms = terms if terms is not None else term_zoo()
    try:
        for name, e in terms:
            forms = [f for f in synthesize_forms(e, table=table) if _first_order(f)]
            reached: list[Form] = []
            for n in range(budget + 1):
                try:
                    r, steps = stream_eval_traced(e, n, table)
                except Untraceable:
                    continue
                if not alpha_eq(replay(e, steps, table), r):
                    continue
                reached.append(result_form(r))
            for phi in forms:
                if any(form_leq(phi, got, table) for got in reached):
                    res.tick()
                else:
                    res.fail(f"{name}: {form_to_text(phi)} never realised")
    except _Abort:
        pass
    return res


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "symbols": suite_symbols,
    "order": suite_order,
    "expansion": suite_expansion,
    "monotonicity": suite_monotonicity,
    "oracle": suite_oracle,
    "adequacy": suite_adequacy,
}

DEFAULT_SUITES = ("symbols", "order", "expansion", "monotonicity", "oracle")


def run_suites(
    names: Optional[Iterable[str]] = None,
    seed: int = 0,
    table: SymbolTable = DISCRETE,
    depth: int = 3,
) -> list[SuiteResult]:
    out = []
    for name in names if names is not None else DEFAULT_SUITES:
        if name not in SUITES:
            raise KeyError(f"unknown suite: {name}")
        out.append(SUITES[name](seed, table, depth))
    return out
