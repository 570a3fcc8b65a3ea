"""Formula assignment: a goal-directed, bounded checker for Gamma |- e : phi.

A formula holds of a term when some finite reduction reveals at least that
much: bot holds of everything, a value formula holds when a reachable result
dominates it, and top holds when the term can reach the ambiguity error
(from which every formula follows by subsumption).

The checker searches rule-shapes goal-first. Wherever a rule needs a formula
that is not determined by the goal (argument formulae at applications,
component formulae at pair lets, element formulae at big joins), candidates
come from bounded pools: a small enumeration, the goal's own subformulae,
evident formulae of value subterms, the environment, and formulae observed
by probing closed subterms with the evaluator. The checker is sound and
complete only relative to those pools; enlarging them never flips a yes to
a no, it can only certify more.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

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
    form_size,
    form_to_text,
    is_value_form,
)
from .stream import stream_eval
from .syntax import (
    BOT,
    DISCRETE,
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
    Sym,
    SymbolTable,
    Top,
    Var,
    canonical,
    free_vars,
    is_value,
    subst,
    term_to_text,
)

Env = tuple[tuple[str, Form], ...]


def env_bind(env: Env, name: str, phi: Form) -> Env:
    return tuple(sorted({**dict(env), name: phi}.items()))


def env_get(env: Env, name: str) -> Optional[Form]:
    for n, phi in env:
        if n == name:
            return phi
    return None


@dataclass(frozen=True)
class Derivation:
    rule: str
    env: Env
    expr: Expr
    form: Form
    children: tuple["Derivation", ...] = ()

    def pretty(self, indent: int = 0) -> str:
        pad = "  " * indent
        src = term_to_text(self.expr)
        if len(src) > 48:
            src = src[:45] + "..."
        lines = [f"{pad}[{self.rule}] {src} : {form_to_text(self.form)}"]
        for c in self.children:
            lines.append(c.pretty(indent + 1))
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Witnesses and evident formulae


def value_witness(phi: Form, table: SymbolTable = DISCRETE) -> Optional[Expr]:
    """A closed value inhabiting exactly-or-above the value formula, where
    one can be built: function formulae are realised by constant functions,
    or by symbol-threshold dispatch when every domain is a symbol."""
    match phi:
        case BotVF():
            return BotV()
        case SymF(name):
            return Sym(name)
        case PairF(f, s):
            wf = value_witness(f, table)
            ws = value_witness(s, table)
            if wf is None or ws is None:
                return None
            return Pair(wf, ws)
        case SetF(elems):
            ws = [value_witness(el, table) for el in elems]
            if any(w is None for w in ws):
                return None
            return SetLit(tuple(ws))
        case FunF(()):
            return Lam("x", BOT)
        case FunF(clauses):
            if len(clauses) == 1:
                body = _body_for(clauses[0][1], table)
                if body is None:
                    return None
                return Lam("x", body)
            if all(isinstance(t, SymF) for t, _ in clauses):
                arms = []
                for t, p in clauses:
                    body = _body_for(p, table)
                    if body is None:
                        return None
                    arms.append(LetSym(t.name, Var("x"), body))
                out = arms[0]
                for arm in arms[1:]:
                    out = Join(out, arm)
                return Lam("x", out)
            return None
    return None


def _body_for(phi: Form, table: SymbolTable) -> Optional[Expr]:
    if isinstance(phi, BotF):
        return BOT
    if isinstance(phi, TopF):
        a, b = _incompatible_syms(table)
        return Join(Sym(a), Sym(b))
    return value_witness(phi, table)


def _incompatible_syms(table: SymbolTable) -> tuple[str, str]:
    syms = sorted(table.symbols() | {"true", "false"})
    for a in syms:
        for b in syms:
            if a < b and table.join(a, b) is None:
                return a, b
    return "true", "false"


def evident_form(v: Expr) -> Form:
    """The structural formula of a value (lambdas contribute only `fn`)."""
    match v:
        case BotV() | Var():
            return BOTV_F
        case Sym(name):
            return SymF(name)
        case Pair(a, b):
            return PairF(evident_form(a), evident_form(b))
        case SetLit(elems):
            return canonical_form(SetF(tuple(evident_form(el) for el in elems)))
        case Lam(_, _):
            return FunF(())
    raise ValueError(f"not a value: {v!r}")


def result_form(r: Expr) -> Form:
    if isinstance(r, Bot):
        return BOT_F
    if isinstance(r, Top):
        return TOP_F
    return evident_form(r)


PROBE_FUELS = (2, 4, 8)
PROBE_ROUNDS = 2
PROBE_INPUT_CAP = 8


def probe_forms(
    e: Expr,
    table: SymbolTable = DISCRETE,
    rounds: int = PROBE_ROUNDS,
    fuels: tuple[int, ...] = PROBE_FUELS,
) -> list[Form]:
    """Function formulae observed by running a closed term against a small
    set of witness inputs. Each round feeds back witnesses of the outputs
    seen so far, so towers of arrow formulae (the shapes recursion knots
    need) appear up to the round bound. Observations, not certificates:
    callers must still check anything taken from here."""
    if free_vars(e):
        return []
    fn = None
    for fuel in fuels:
        r = stream_eval(e, fuel, table)
        if isinstance(r, Lam):
            fn = r
            break
    if fn is None:
        return []
    syms = sorted(table.symbols())[:3]
    inputs: list[Form] = [BOTV_F, FunF(())] + [SymF(s) for s in syms]
    out: list[Form] = []
    seen: set[Form] = set()
    for _ in range(rounds):
        clauses: list[tuple[Form, Form]] = []
        next_inputs: list[Form] = []
        for tau in inputs[:PROBE_INPUT_CAP]:
            w = value_witness(tau, table)
            if w is None:
                continue
            for fuel in fuels:
                r = stream_eval(App(fn, w), fuel, table)
                if isinstance(r, Bot):
                    continue
                phi = result_form(r)
                clauses.append((tau, phi))
                if is_value_form(phi):
                    next_inputs.append(phi)
        for c in clauses:
            f = canonical_form(FunF((c,)))
            if f not in seen:
                seen.add(f)
                out.append(f)
        joined = canonical_form(FunF(tuple(clauses)))
        if clauses and joined not in seen:
            seen.add(joined)
            out.append(joined)
        inputs = inputs + [
            canonical_form(FunF((c,))) for c in clauses
        ] + next_inputs
    return out


def subforms(phi: Form) -> list[Form]:
    out = [phi]
    match phi:
        case PairF(a, b):
            out += subforms(a) + subforms(b)
        case SetF(elems):
            for el in elems:
                out += subforms(el)
        case FunF(clauses):
            for t, p in clauses:
                out += subforms(t) + subforms(p)
        case _:
            pass
    return out


def _value_subterms(e: Expr) -> Iterable[Expr]:
    if is_value(e):
        yield e
    match e:
        case Lam(_, b):
            yield from _value_subterms(b)
        case Pair(a, b) | Join(a, b) | App(a, b):
            yield from _value_subterms(a)
            yield from _value_subterms(b)
        case SetLit(elems):
            for el in elems:
                yield from _value_subterms(el)
        case LetPair(_, _, s, b) | LetSym(_, s, b) | BigJoin(_, s, b):
            yield from _value_subterms(s)
            yield from _value_subterms(b)
        case _:
            pass


def _syms_in(e: Expr) -> set[str]:
    out: set[str] = set()

    def go(e: Expr) -> None:
        match e:
            case Sym(name):
                out.add(name)
            case LetSym(s, a, b):
                out.add(s)
                go(a)
                go(b)
            case Lam(_, b):
                go(b)
            case Pair(a, b) | Join(a, b) | App(a, b):
                go(a)
                go(b)
            case SetLit(elems):
                for el in elems:
                    go(el)
            case LetPair(_, _, a, b) | BigJoin(_, a, b):
                go(a)
                go(b)
            case _:
                pass

    go(e)
    return out


# ---------------------------------------------------------------------------
# The checker

POOL_HEIGHT = 2
PAIR_CAND_CAP = 16
SET_ASSIGN_CAP = 256
JOIN_TOP_CAP = 24


class Checker:
    """One bounded search instance: pools are fixed at construction from the
    root term, goal, and environment, so memoised answers stay valid."""

    def __init__(
        self,
        e: Expr,
        goal: Form,
        table: SymbolTable,
        env: Env = (),
        depth: int = POOL_HEIGHT,
        max_fuel: Optional[int] = None,
    ):
        self.table = table
        self.depth = depth
        if max_fuel is None:
            self.probe_fuels = PROBE_FUELS
        else:
            kept = tuple(f for f in PROBE_FUELS if f <= max_fuel)
            self.probe_fuels = kept or (max_fuel,)
        self.memo: dict[tuple[Env, Canon, Form], Optional[Derivation]] = {}
        self._obs_cache: dict[Canon, list[Form]] = {}
        self._arg_cache: dict = {}
        self._pair_cache: dict = {}
        self._joint_cache: dict = {}

        syms = sorted(
            set(table.symbols()) | _syms_in(e) | self._goal_syms(goal)
        )
        pool: list[Form] = list(enumerate_forms(depth, syms))
        pool += subforms(goal)
        for _, phi in env:
            pool += subforms(phi)
        for v in _value_subterms(e):
            pool += subforms(evident_form(v))
        seen: set[Form] = set()
        self.pool: list[Form] = []
        for phi in pool:
            phi = canonical_form(phi)
            if phi not in seen:
                seen.add(phi)
                self.pool.append(phi)
        self.vpool = [f for f in self.pool if is_value_form(f)]

    @staticmethod
    def _goal_syms(goal: Form) -> set[str]:
        out = set()
        for f in subforms(goal):
            if isinstance(f, SymF):
                out.add(f.name)
        return out

    def observed_forms(self, env: Env, e: Expr) -> list[Form]:
        """Value formulae observed by evaluating a subterm at a few fuels,
        plus input-probed function formulae when it reaches a function. Free
        variables are closed off with witnesses of their environment
        formulae (sound: candidates are re-checked by the caller, and the
        witness realises exactly the information the environment promises).
        Observations only; callers must re-check anything taken from here."""
        for name in free_vars(e):
            phi = env_get(env, name)
            w = value_witness(phi, self.table) if phi is not None else None
            if w is None:
                return []
            e = subst(e, name, w)
        k = canonical(e)
        hit = self._obs_cache.get(k)
        if hit is not None:
            return hit
        out: list[Form] = []
        seen: set[Form] = set()
        for fuel in self.probe_fuels:
            phi = canonical_form(result_form(stream_eval(e, fuel, self.table)))
            if is_value_form(phi) and phi not in seen:
                seen.add(phi)
                out.append(phi)
        out += [
            f
            for f in probe_forms(e, self.table, fuels=self.probe_fuels)
            if f not in seen
        ]
        self._obs_cache[k] = out
        return out

    # -- entry

    def check(self, env: Env, e: Expr, goal: Form) -> Optional[Derivation]:
        goal = canonical_form(goal)
        if env:
            # bindings the term cannot see never change the answer; dropping
            # them collapses searches that differ only in unused bindings
            fv = free_vars(e)
            env = tuple(b for b in env if b[0] in fv)
        key = (env, canonical(e), goal)
        if key in self.memo:
            return self.memo[key]
        self.memo[key] = None  # cycles cannot arise; this guards reentry anyway
        d = self._check(env, e, goal)
        if d is None and not isinstance(goal, (TopF, BotF)):
            # everything follows from a term that reaches the error
            t = self.check(env, e, TOP_F)
            if t is not None:
                d = Derivation("TSUB", env, e, goal, (t,))
        self.memo[key] = d
        return d

    def _leq(self, a: Form, b: Form) -> bool:
        return form_leq(a, b, self.table)

    def _check(self, env: Env, e: Expr, goal: Form) -> Optional[Derivation]:
        if isinstance(goal, BotF):
            return Derivation("TBOT", env, e, goal)
        table = self.table
        match e:
            case Bot():
                return None
            case Top():
                return Derivation("TTOP", env, e, goal) if isinstance(goal, TopF) else None
            case BotV():
                if isinstance(goal, BotVF):
                    return Derivation("TBOTV", env, e, goal)
                return None
            case Var(name):
                phi = env_get(env, name)
                if phi is not None and self._leq(goal, phi):
                    return Derivation("TVAR", env, e, goal)
                return None
            case Sym(name):
                if self._leq(goal, SymF(name)):
                    return Derivation("TSYM", env, e, goal)
                return None
            case Lam(param, body):
                if isinstance(goal, FunF):
                    kids = []
                    for tau, phi in goal.clauses:
                        d = self.check(env_bind(env, param, tau), body, phi)
                        if d is None:
                            return None
                        kids.append(d)
                    return Derivation("TFUN", env, e, goal, tuple(kids))
                if isinstance(goal, BotVF):
                    return Derivation("TFUN", env, e, goal)
                return None
            case Pair(e1, e2):
                return self._check_pair(env, e, e1, e2, goal)
            case SetLit(elems):
                return self._check_set(env, e, elems, goal)
            case Join(e1, e2):
                return self._check_join(env, e, e1, e2, goal)
            case App(e1, e2):
                return self._check_app(env, e, e1, e2, goal)
            case LetSym(s, e1, e2):
                return self._check_let_sym(env, e, s, e1, e2, goal)
            case LetPair(x1, x2, e1, e2):
                return self._check_let_pair(env, e, x1, x2, e1, e2, goal)
            case BigJoin(x, e1, e2):
                return self._check_big_join(env, e, x, e1, e2, goal)
        raise TypeError(f"not an Expr: {e!r}")

    # -- compound constructs

    def _check_pair(self, env, e, e1, e2, goal) -> Optional[Derivation]:
        if isinstance(goal, TopF):
            d1 = self.check(env, e1, TOP_F)
            if d1 is not None:
                return Derivation("TPAIRTOP", env, e, goal, (d1,))
            dv = self.check(env, e1, BOTV_F)
            if dv is not None:
                d2 = self.check(env, e2, TOP_F)
                if d2 is not None:
                    return Derivation("TPAIRTOP", env, e, goal, (dv, d2))
            return None
        if isinstance(goal, BotVF):
            t1, t2 = BOTV_F, BOTV_F
        elif isinstance(goal, PairF):
            t1, t2 = goal.fst, goal.snd
        else:
            return None
        d1 = self.check(env, e1, t1)
        d2 = self.check(env, e2, t2) if d1 is not None else None
        if d1 is None or d2 is None:
            return None
        return Derivation("TPAIR", env, e, goal, (d1, d2))

    def _check_set(self, env, e, elems, goal) -> Optional[Derivation]:
        if isinstance(goal, TopF):
            for el in elems:
                d = self.check(env, el, TOP_F)
                if d is not None:
                    return Derivation("TSETTOP", env, e, goal, (d,))
            return None
        if isinstance(goal, BotVF):
            return Derivation("TSET", env, e, goal)
        if not isinstance(goal, SetF):
            return None
        sigmas = goal.elems
        if not sigmas:
            return Derivation("TSET", env, e, goal)
        if not elems:
            return None
        # assign each goal element to a literal element; an element must
        # certify the join of everything assigned to it
        n, k = len(elems), len(sigmas)
        if n**k <= SET_ASSIGN_CAP:
            assignments = itertools.product(range(n), repeat=k)
        else:
            picked = []
            for s in sigmas:
                hit = next(
                    (i for i in range(n) if self.check(env, elems[i], s)), None
                )
                if hit is None:
                    return None
                picked.append(hit)
            assignments = iter([tuple(picked)])
        for assign in assignments:
            kids = []
            ok = True
            for i in sorted(set(assign)):
                want = BOT_F
                for j, s in zip(assign, sigmas):
                    if j == i:
                        want = form_join(want, s, self.table)
                if isinstance(want, TopF):
                    ok = False
                    break
                d = self.check(env, elems[i], want)
                if d is None:
                    ok = False
                    break
                kids.append(d)
            if ok:
                return Derivation("TSET", env, e, goal, tuple(kids))
        return None

    def _arm_forms(self, env: Env, arm: Expr) -> list[Form]:
        """Value formulae worth trying on one arm of a join: evident,
        environment, and observed formulae first, then a slice of the
        generic pool."""
        out: list[Form] = []
        if is_value(arm) and not free_vars(arm):
            out.append(evident_form(arm))
        if isinstance(arm, Var):
            phi = env_get(env, arm.name)
            if phi is not None and is_value_form(phi):
                out.append(phi)
        out += self.observed_forms(env, arm)
        out += self.vpool[:JOIN_TOP_CAP]
        seen: set[Form] = set()
        uniq: list[Form] = []
        for f in out:
            f = canonical_form(f)
            if f not in seen and is_value_form(f):
                seen.add(f)
                uniq.append(f)
        return uniq

    def _check_join(self, env, e, e1, e2, goal) -> Optional[Derivation]:
        if isinstance(goal, TopF):
            for arm in (e1, e2):
                d = self.check(env, arm, TOP_F)
                if d is not None:
                    return Derivation("TJOINTOP", env, e, goal, (d,))
        else:
            for g1, g2 in decompose2(goal, self.table):
                d1 = self.check(env, e1, g1)
                if d1 is None:
                    continue
                d2 = self.check(env, e2, g2)
                if d2 is not None:
                    return Derivation("TJOIN", env, e, goal, (d1, d2))
        # arm-directed: formulae each arm certifies on its own whose join
        # covers the goal (how clashes, and outputs finer than any goal
        # decomposition, are found); the certified pairs are goal-independent
        for j, d1, d2 in self._joint_forms(env, e, e1, e2):
            if form_leq(goal, j, self.table):
                return Derivation("TJOIN", env, e, goal, (d1, d2))
        return None

    def _joint_forms(
        self, env: Env, e: Expr, e1: Expr, e2: Expr
    ) -> list[tuple[Form, Derivation, Derivation]]:
        key = (env, canonical(e))
        hit = self._joint_cache.get(key)
        if hit is None:
            cert1 = [
                (f, d)
                for f in self._arm_forms(env, e1)
                if (d := self.check(env, e1, f)) is not None
            ]
            cert2 = [
                (f, d)
                for f in self._arm_forms(env, e2)
                if (d := self.check(env, e2, f)) is not None
            ]
            hit = [
                (form_join(f1, f2, self.table), d1, d2)
                for f1, d1 in cert1
                for f2, d2 in cert2
            ]
            self._joint_cache[key] = hit
        return hit

    def _arg_candidates(self, env: Env, e2: Expr) -> list[Form]:
        out: list[Form] = [BOTV_F]
        if is_value(e2) and not free_vars(e2):
            out.append(evident_form(e2))
        if isinstance(e2, Var):
            phi = env_get(env, e2.name)
            if phi is not None and is_value_form(phi):
                out.append(phi)
        out += self.observed_forms(env, e2)
        out += self.vpool
        seen: set[Form] = set()
        uniq = []
        for f in out:
            f = canonical_form(f)
            if f not in seen:
                seen.add(f)
                uniq.append(f)
        return uniq

    def _certified_args(self, env: Env, e2: Expr) -> list[tuple[Form, Derivation]]:
        """Goal-independent: the argument formulae the argument itself
        certifies, each with its derivation, weakest first."""
        fv = free_vars(e2)
        key = (tuple(b for b in env if b[0] in fv), canonical(e2))
        hit = self._arg_cache.get(key)
        if hit is None:
            hit = []
            for tau in self._arg_candidates(env, e2):
                d2 = self.check(env, e2, tau)
                if d2 is not None:
                    hit.append((tau, d2))
            self._arg_cache[key] = hit
        return hit

    def _check_app(self, env, e, e1, e2, goal) -> Optional[Derivation]:
        if isinstance(goal, TopF):
            d1 = self.check(env, e1, TOP_F)
            if d1 is not None:
                return Derivation("TAPPLTOP", env, e, goal, (d1,))
            dv = self.check(env, e1, BOTV_F)
            if dv is not None:
                d2 = self.check(env, e2, TOP_F)
                if d2 is not None:
                    return Derivation("TAPPRTOP", env, e, goal, (dv, d2))
        # a clause whose output covers the goal, fed by the argument;
        # certifying any clause entails certifying fn, so gate on that
        if self.check(env, e1, FunF(())) is None:
            return None
        # only argument formulae the argument itself certifies can feed a
        # clause; that list is goal-independent, so it is computed once and
        # the per-goal work is one function-side search per surviving tau
        for tau, d2 in self._certified_args(env, e2):
            want = canonical_form(FunF(((tau, goal),)))
            d1 = self.check(env, e1, want)
            if d1 is not None:
                return Derivation("TAPP", env, e, goal, (d1, d2))
        return None

    def _check_let_sym(self, env, e, s, e1, e2, goal) -> Optional[Derivation]:
        if isinstance(goal, TopF):
            d = self.check(env, e1, TOP_F)
            if d is not None:
                return Derivation("TLETSYMTOP", env, e, goal, (d,))
        above = sorted({s} | {t for t in self.table.symbols() if self.table.leq(s, t)})
        for s2 in above:
            d1 = self.check(env, e1, SymF(s2))
            if d1 is None:
                continue
            d2 = self.check(env, e2, goal)
            if d2 is not None:
                return Derivation("TLETSYM", env, e, goal, (d1, d2))
        return None

    def _certified_pairs(self, env: Env, e1: Expr) -> list[tuple[PairF, Derivation]]:
        """Goal-independent: pair formulae the scrutinee certifies, each with
        its derivation — evident and observed ones first, then the pool."""
        fv = free_vars(e1)
        key = (tuple(b for b in env if b[0] in fv), canonical(e1))
        hit = self._pair_cache.get(key)
        if hit is not None:
            return hit
        out: list[PairF] = [PairF(BOTV_F, BOTV_F)]
        if is_value(e1) and not free_vars(e1):
            f = evident_form(e1)
            if isinstance(f, PairF):
                out.append(f)
        if isinstance(e1, Var):
            phi = env_get(env, e1.name)
            if isinstance(phi, PairF):
                out.append(phi)
        for f in self.observed_forms(env, e1):
            if isinstance(f, PairF):
                out.append(f)
        out += [f for f in self.pool if isinstance(f, PairF)]
        vs = self.vpool[:PAIR_CAND_CAP]
        out += [PairF(a, b) for a in vs for b in vs]
        seen: set[Form] = set()
        hit = []
        for cand in out:
            cand = canonical_form(cand)
            if cand in seen:
                continue
            seen.add(cand)
            d = self.check(env, e1, cand)
            if d is not None:
                hit.append((cand, d))
        self._pair_cache[key] = hit
        return hit

    def _check_let_pair(self, env, e, x1, x2, e1, e2, goal) -> Optional[Derivation]:
        if isinstance(goal, TopF):
            d = self.check(env, e1, TOP_F)
            if d is not None:
                return Derivation("TLETPAIRTOP", env, e, goal, (d,))
        if self.check(env, e1, PairF(BOTV_F, BOTV_F)) is None:
            return None

        def attempt(cand: PairF, d1: Derivation) -> Optional[Derivation]:
            inner = env_bind(env_bind(env, x1, cand.fst), x2, cand.snd)
            if x1 == x2:
                inner = env_bind(env, x2, cand.snd)
            d2 = self.check(inner, e2, goal)
            if d2 is not None:
                return Derivation("TLETPAIR", env, e, goal, (d1, d2))
            return None

        # goal-directed candidates first: when the body routes a component
        # to the result, the component formula the derivation needs is
        # goal-shaped, not pool-shaped
        gs = [f for f in subforms(goal) if is_value_form(f)][:8]
        extras = (
            [PairF(g, BOTV_F) for g in gs]
            + [PairF(BOTV_F, g) for g in gs]
            + [PairF(g, g) for g in gs]
        )
        for cand in extras:
            cand = canonical_form(cand)
            d1 = self.check(env, e1, cand)
            if d1 is not None:
                d = attempt(cand, d1)
                if d is not None:
                    return d
        for cand, d1 in self._certified_pairs(env, e1):
            d = attempt(cand, d1)
            if d is not None:
                return d
        return None

    def _set_elem_candidates(self, env: Env, e1: Expr) -> list[Form]:
        out: list[Form] = []
        if is_value(e1) and not free_vars(e1):
            f = evident_form(e1)
            if isinstance(f, SetF):
                out += list(f.elems)
        if isinstance(e1, Var):
            phi = env_get(env, e1.name)
            if isinstance(phi, SetF):
                out += list(phi.elems)
        for f in self.observed_forms(env, e1):
            if isinstance(f, SetF):
                out += list(f.elems)
        out += self.vpool
        seen: set[Form] = set()
        uniq = []
        for f in out:
            f = canonical_form(f)
            if f not in seen:
                seen.add(f)
                uniq.append(f)
        return uniq

    def _check_big_join(self, env, e, x, e1, e2, goal) -> Optional[Derivation]:
        if isinstance(goal, TopF):
            d = self.check(env, e1, TOP_F)
            if d is not None:
                return Derivation("TFORINTOP", env, e, goal, (d,))
        if self.check(env, e1, SetF(())) is None:
            return None
        cands = self._set_elem_candidates(env, e1)
        for sigma in cands:
            d1 = self.check(env, e1, SetF((sigma,)))
            if d1 is None:
                continue
            d2 = self.check(env_bind(env, x, sigma), e2, goal)
            if d2 is not None:
                return Derivation("TFORIN", env, e, goal, (d1, d2))
        if isinstance(goal, TopF):
            # two distinct elements whose body instances clash: the joined
            # instances reach the error even though neither does alone
            vs = self.vpool[:JOIN_TOP_CAP]
            by_f: dict[Form, list[tuple[Form, Derivation]]] = {}
            for s in cands[:JOIN_TOP_CAP]:
                inner = env_bind(env, x, s)
                for f in vs:
                    d = self.check(inner, e2, f)
                    if d is not None:
                        by_f.setdefault(f, []).append((s, d))
            for f1, l1 in by_f.items():
                for f2, l2 in by_f.items():
                    if not isinstance(form_join(f1, f2, self.table), TopF):
                        continue
                    for s1, b1 in l1:
                        for s2, b2 in l2:
                            dset = self.check(
                                env, e1, canonical_form(SetF((s1, s2)))
                            )
                            if dset is not None:
                                return Derivation(
                                    "TFORIN", env, e, goal, (dset, b1, b2)
                                )
        if not isinstance(goal, TopF):
            for g1, g2 in decompose2(goal, self.table):
                if g1 == goal or g2 == goal or isinstance(g1, BotF) or isinstance(g2, BotF):
                    continue
                for s1 in cands:
                    b1 = self.check(env_bind(env, x, s1), e2, g1)
                    if b1 is None:
                        continue
                    for s2 in cands:
                        dset = self.check(
                            env, e1, canonical_form(SetF((s1, s2)))
                        )
                        if dset is None:
                            continue
                        b2 = self.check(env_bind(env, x, s2), e2, g2)
                        if b2 is not None:
                            return Derivation(
                                "TFORIN", env, e, goal, (dset, b1, b2)
                            )
        return None


def decompose2(goal: Form, table: SymbolTable) -> list[tuple[Form, Form]]:
    """Candidate ways to split a goal across the two arms of a join: pairs
    (g1, g2) with g1 joined g2 at or above the goal."""
    out: list[tuple[Form, Form]] = [
        (goal, BOT_F),
        (BOT_F, goal),
        (goal, goal),
    ]
    match goal:
        case BotVF():
            pass
        case SymF(s):
            syms = table.symbols()
            for a in sorted(syms):
                for b in sorted(syms):
                    j = table.join(a, b)
                    if j is not None and table.leq(s, j):
                        out.append((SymF(a), SymF(b)))
        case PairF(a, b):
            out.append((PairF(a, BOTV_F), PairF(BOTV_F, b)))
        case SetF(elems) if len(elems) > 1:
            for r in range(1, len(elems)):
                for left in itertools.combinations(range(len(elems)), r):
                    ls = tuple(elems[i] for i in left)
                    rs = tuple(elems[i] for i in range(len(elems)) if i not in left)
                    out.append(
                        (canonical_form(SetF(ls)), canonical_form(SetF(rs)))
                    )
        case FunF(clauses) if len(clauses) > 1:
            for r in range(1, len(clauses)):
                for left in itertools.combinations(range(len(clauses)), r):
                    ls = tuple(clauses[i] for i in left)
                    rs = tuple(
                        clauses[i] for i in range(len(clauses)) if i not in left
                    )
                    out.append(
                        (canonical_form(FunF(ls)), canonical_form(FunF(rs)))
                    )
        case _:
            pass
    seen = set()
    uniq = []
    for pair in out:
        if pair not in seen:
            seen.add(pair)
            uniq.append(pair)
    return uniq


def check_assign(
    e: Expr,
    phi: Form,
    table: SymbolTable = DISCRETE,
    env: Env = (),
    depth: int = POOL_HEIGHT,
    max_fuel: Optional[int] = None,
) -> Optional[Derivation]:
    """Search for a derivation of env |- e : phi; None means "not found
    within bounds", never "unprovable". `depth` bounds the height of the
    enumerated subsumption/argument witness pool; `max_fuel` caps the fuel
    spent observing subterms for candidate formulae (None: built-in probe
    fuels)."""
    checker = Checker(e, phi, table, env, depth, max_fuel)
    return checker.check(env, e, canonical_form(phi))


def validate(d: Derivation, table: SymbolTable = DISCRETE) -> None:
    """Re-check the local relation at every node of a derivation; raises
    ValueError at the first node whose conclusion its children do not
    support. Subsumption is folded into nodes, so each rule checks its
    conclusion is at or below what the children establish."""
    leq = lambda a, b: form_leq(a, b, table)
    kids = d.children
    ok = True
    match d.rule:
        case "TBOT":
            ok = isinstance(d.form, BotF)
        case "TTOP":
            ok = isinstance(d.expr, Top) and isinstance(d.form, TopF)
        case "TBOTV":
            ok = isinstance(d.expr, BotV) and isinstance(d.form, BotVF)
        case "TVAR":
            phi = env_get(d.env, d.expr.name)
            ok = phi is not None and leq(d.form, phi)
        case "TSYM":
            ok = isinstance(d.expr, Sym) and leq(d.form, SymF(d.expr.name))
        case "TFUN":
            ok = isinstance(d.expr, Lam) and (
                isinstance(d.form, FunF)
                and len(kids) == len(d.form.clauses)
                and all(
                    k.form == phi and k.expr == d.expr.body
                    for k, (_, phi) in zip(kids, d.form.clauses)
                )
                or (isinstance(d.form, BotVF) and not kids)
            )
        case "TPAIR":
            want = (
                PairF(kids[0].form, kids[1].form)
                if len(kids) == 2
                else None
            )
            ok = want is not None and leq(d.form, want)
        case ("TPAIRTOP" | "TSETTOP" | "TJOINTOP" | "TAPPLTOP" | "TAPPRTOP"
              | "TLETSYMTOP" | "TLETPAIRTOP" | "TFORINTOP"):
            ok = isinstance(d.form, TopF) and any(
                isinstance(k.form, TopF) for k in kids
            )
        case "TSET":
            if isinstance(d.form, BotVF) or (
                isinstance(d.form, SetF) and not d.form.elems
            ):
                ok = isinstance(d.expr, SetLit)
            else:
                ok = isinstance(d.form, SetF) and all(
                    any(leq(s, k.form) for k in kids) for s in d.form.elems
                )
        case "TJOIN":
            ok = len(kids) == 2 and leq(
                d.form, form_join(kids[0].form, kids[1].form, table)
            )
        case "TAPP":
            ok = (
                len(kids) == 2
                and isinstance(kids[0].form, FunF)
                and any(
                    leq(t, kids[1].form) and leq(d.form, p)
                    for t, p in kids[0].form.clauses
                )
            )
        case "TLETSYM":
            ok = (
                len(kids) == 2
                and isinstance(kids[0].form, SymF)
                and table.leq(d.expr.sym, kids[0].form.name)
                and leq(d.form, kids[1].form)
            )
        case "TLETPAIR":
            ok = (
                len(kids) == 2
                and isinstance(kids[0].form, PairF)
                and leq(d.form, kids[1].form)
            )
        case "TFORIN":
            ok = len(kids) >= 2 and isinstance(kids[0].form, SetF)
            if ok:
                body_join = BOT_F
                for k in kids[1:]:
                    body_join = form_join(body_join, k.form, table)
                ok = leq(d.form, body_join)
        case "TSUB":
            ok = len(kids) == 1 and (
                isinstance(kids[0].form, TopF) or leq(d.form, kids[0].form)
            )
        case _:
            ok = False
    if not ok:
        raise ValueError(f"invalid derivation node: {d.rule} : {form_to_text(d.form)}")
    for k in kids:
        validate(k, table)


# ---------------------------------------------------------------------------
# Synthesis

SYNTH_FUEL = 12
SYNTH_HEIGHT = 3


def synthesize_forms(
    e: Expr,
    fuel: int = SYNTH_FUEL,
    height: int = SYNTH_HEIGHT,
    table: SymbolTable = DISCRETE,
) -> list[Form]:
    """Certified formulae of a closed term, of height at most `height`:
    candidates are read off the evaluator's results at every fuel up to
    `fuel` (plus probe results when the term is a function), then filtered
    through the checker, so every returned formula carries a derivation.
    Sorted smallest first; always contains bot. A bounded
    under-approximation of the term's full filter-model meaning."""
    cands: list[Form] = [BOT_F, BOTV_F]
    probed = False
    for n in range(fuel + 1):
        r = stream_eval(e, n, table)
        cands.append(result_form(r))
        if isinstance(r, Lam) and not probed:
            probed = True
            cands += probe_forms(e, table)
    seen: set[Form] = set()
    uniq = []
    for f in cands:
        f = canonical_form(f)
        if f not in seen and form_size(f) <= height:
            seen.add(f)
            uniq.append(f)
    out = [f for f in uniq if check_assign(e, f, table) is not None]
    out.sort(key=lambda f: (form_size(f), str(f)))
    return out


def log_leq_bounded(
    e1: Expr,
    e2: Expr,
    fuel: int = SYNTH_FUEL,
    height: int = SYNTH_HEIGHT,
    table: SymbolTable = DISCRETE,
) -> bool:
    """Bounded logical order: every synthesised formula of e1 checks
    against e2. One-sided by construction (a yes can be an artifact of the
    bounded synthesis; a no is a genuine counterexample formula)."""
    return all(
        check_assign(e2, phi, table) is not None
        for phi in synthesize_forms(e1, fuel, height, table)
    )
