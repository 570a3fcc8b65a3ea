"""Core term syntax for the streaming lambda calculus.

Terms form an untyped call-by-value lambda calculus extended with interned
symbols, pairs, finite set literals, threshold lets, indexed joins, and three
special forms: `bot` (no information yet / divergence), `top` (ambiguity
error), and `botv` (the trivial value, below every value, which produces
`bot` when inspected).

This module owns the term constructors, the symbol join table, substitution,
alpha-equivalence, evaluation-context positions, and redex decomposition.
The reduction rules themselves live in `reduction`; the deterministic
evaluator in `stream`.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Iterator, Optional, Union


# ---------------------------------------------------------------------------
# Symbols and the join table


class SymbolTable:
    """Partial join on interned symbol names.

    Distinct symbols join only where the table says so; `s1 <= s2` is defined
    as `join(s1, s2) == s2`. The default table is discrete: every symbol is
    comparable only with itself (so `true` and `false` are incomparable and
    their join is undefined, surfacing as the ambiguity error `top` at the
    result level).
    """

    def __init__(self, joins: dict[tuple[str, str], str] | None = None):
        self._joins: dict[tuple[str, str], str] = {}
        if joins:
            for (a, b), j in joins.items():
                self._joins[(a, b)] = j
                self._joins[(b, a)] = j
        self.validate()

    def join(self, a: str, b: str) -> Optional[str]:
        if a == b:
            return a
        return self._joins.get((a, b))

    def leq(self, a: str, b: str) -> bool:
        return self.join(a, b) == b

    def symbols(self) -> set[str]:
        out = set()
        for (a, b), j in self._joins.items():
            out.update((a, b, j))
        return out

    def validate(self) -> None:
        """Reject tables that break the partial-semilattice laws.

        Checks, over every triple of known symbols: associativity wherever
        both sides are defined, and the least-upper-bound law (if a and b are
        both below c and a⊔b is defined, then a⊔b is below c). Commutativity
        and idempotence hold by construction.
        """
        syms = self.symbols()
        for a in syms:
            for b in syms:
                ab = self.join(a, b)
                for c in syms:
                    bc = self.join(b, c)
                    if ab is not None and bc is not None:
                        lhs = self.join(ab, c)
                        rhs = self.join(a, bc)
                        if lhs is not None and rhs is not None and lhs != rhs:
                            raise ValueError(
                                f"join table not associative at ({a},{b},{c})"
                            )
                    if ab is not None and self.leq(a, c) and self.leq(b, c):
                        if not self.leq(ab, c):
                            raise ValueError(
                                f"join table violates least-upper-bound at ({a},{b})<={c}"
                            )


DISCRETE = SymbolTable()


def parse_sym_table(text: str) -> SymbolTable:
    """Parse the `sym1 sym2 -> sym3` line format (one join per line).

    Blank lines and `#` comments are ignored. An absent or empty table means
    the discrete order.
    """
    joins: dict[tuple[str, str], str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            lhs, rhs = line.split("->")
            a, b = lhs.split()
            j = rhs.strip().split()
            (target,) = j
        except ValueError:
            raise ValueError(f"sym table line {lineno}: expected 'sym1 sym2 -> sym3'")
        joins[(sys.intern(a), sys.intern(b))] = sys.intern(target)
    return SymbolTable(joins)


# ---------------------------------------------------------------------------
# Terms


class Expr:
    __slots__ = ("_hash", "_canon", "_fv")


@dataclass(frozen=True, slots=True)
class Bot(Expr):
    """No information yet; also the observation of divergence."""


@dataclass(frozen=True, slots=True)
class Top(Expr):
    """Ambiguity error: the result of joining incompatible values."""


@dataclass(frozen=True, slots=True)
class BotV(Expr):
    """The trivial value: below every value, yields bot when inspected."""


@dataclass(frozen=True, slots=True)
class Var(Expr):
    name: str


@dataclass(frozen=True, slots=True)
class Sym(Expr):
    name: str


@dataclass(frozen=True, slots=True)
class Lam(Expr):
    param: str
    body: Expr


@dataclass(frozen=True, slots=True)
class Pair(Expr):
    fst: Expr
    snd: Expr


@dataclass(frozen=True, slots=True)
class SetLit(Expr):
    elems: tuple[Expr, ...]


@dataclass(frozen=True, slots=True)
class App(Expr):
    fn: Expr
    arg: Expr


@dataclass(frozen=True, slots=True)
class LetPair(Expr):
    """let (left, right) = scrut in body"""

    left: str
    right: str
    scrut: Expr
    body: Expr


@dataclass(frozen=True, slots=True)
class LetSym(Expr):
    """let 'sym = scrut in body  — threshold query, fires once scrut >= sym."""

    sym: str
    scrut: Expr
    body: Expr


@dataclass(frozen=True, slots=True)
class BigJoin(Expr):
    """for var in source join body  — joins body[v/var] over the source set."""

    var: str
    source: Expr
    body: Expr


@dataclass(frozen=True, slots=True)
class Join(Expr):
    left: Expr
    right: Expr


def _caching_hash(generated):
    def h(self):
        try:
            return object.__getattribute__(self, "_hash")
        except AttributeError:
            v = generated(self)
            object.__setattr__(self, "_hash", v)
            return v

    return h


# terms are immutable and deeply shared; hashing once per node matters
for _cls in (
    Bot, Top, BotV, Var, Sym, Lam, Pair, SetLit, App, LetPair, LetSym,
    BigJoin, Join,
):
    _cls.__hash__ = _caching_hash(_cls.__hash__)
del _cls


BOT = Bot()
TOP = Top()
BOTV = BotV()

# Symbols every program may mention without declaring them.
SYM_TRUE = "true"
SYM_FALSE = "false"
SYM_UNIT = "()"
SYM_CONS = "cons"
SYM_NIL = "nil"
SYM_ZERO = "zero"
SYM_SUCC = "succ"


def is_value(e: Expr) -> bool:
    match e:
        case Var() | BotV() | Lam() | Sym():
            return True
        case Pair(fst, snd):
            return is_value(fst) and is_value(snd)
        case SetLit(elems):
            return all(is_value(el) for el in elems)
        case _:
            return False


def is_result(e: Expr) -> bool:
    return isinstance(e, (Bot, Top)) or is_value(e)


def free_vars(e: Expr) -> frozenset[str]:
    try:
        return object.__getattribute__(e, "_fv")
    except AttributeError:
        out = _free_vars(e)
        object.__setattr__(e, "_fv", out)
        return out


def _free_vars(e: Expr) -> frozenset[str]:
    match e:
        case Var(name):
            return frozenset((name,))
        case Lam(param, body):
            return free_vars(body) - {param}
        case Pair(fst, snd) | Join(fst, snd) | App(fst, snd):
            return free_vars(fst) | free_vars(snd)
        case SetLit(elems):
            out: frozenset[str] = frozenset()
            for el in elems:
                out |= free_vars(el)
            return out
        case LetPair(left, right, scrut, body):
            return free_vars(scrut) | (free_vars(body) - {left, right})
        case LetSym(_, scrut, body):
            return free_vars(scrut) | free_vars(body)
        case BigJoin(var, source, body):
            return free_vars(source) | (free_vars(body) - {var})
        case _:
            return frozenset()


def fresh_name(base: str, avoid: frozenset[str] | set[str]) -> str:
    """Deterministically pick a name based on `base` that is not in `avoid`."""
    if base not in avoid:
        return base
    i = 1
    while f"{base}_{i}" in avoid:
        i += 1
    return f"{base}_{i}"


def subst(e: Expr, name: str, value: Expr) -> Expr:
    """Capture-avoiding substitution e[value/name].

    In the semantics only closed values are ever substituted, so the
    capture-avoidance branch (renaming a binder that collides with a free
    variable of `value`) exists for the general library surface and tests.
    """
    fv = free_vars(value)

    def go(e: Expr, name: str) -> Expr:
        match e:
            case Var(n):
                return value if n == name else e
            case Bot() | Top() | BotV() | Sym():
                return e
            case Lam(param, body):
                if param == name:
                    return e
                if param in fv:
                    p2 = fresh_name(param, fv | free_vars(body) | {name})
                    body = subst(body, param, Var(p2))
                    return Lam(p2, go(body, name))
                return Lam(param, go(body, name))
            case Pair(fst, snd):
                return Pair(go(fst, name), go(snd, name))
            case SetLit(elems):
                return SetLit(tuple(go(el, name) for el in elems))
            case App(fn, arg):
                return App(go(fn, name), go(arg, name))
            case LetPair(left, right, scrut, body):
                scrut2 = go(scrut, name)
                if name in (left, right):
                    return LetPair(left, right, scrut2, body)
                if left in fv or right in fv:
                    avoid = fv | free_vars(body) | {left, right, name}
                    l2 = fresh_name(left, avoid)
                    r2 = fresh_name(right, avoid | {l2})
                    body = subst(subst(body, left, Var(l2)), right, Var(r2))
                    return LetPair(l2, r2, scrut2, go(body, name))
                return LetPair(left, right, scrut2, go(body, name))
            case LetSym(sym, scrut, body):
                return LetSym(sym, go(scrut, name), go(body, name))
            case BigJoin(var, source, body):
                source2 = go(source, name)
                if var == name:
                    return BigJoin(var, source2, body)
                if var in fv:
                    v2 = fresh_name(var, fv | free_vars(body) | {name})
                    body = subst(body, var, Var(v2))
                    return BigJoin(v2, source2, go(body, name))
                return BigJoin(var, source2, go(body, name))
            case Join(left, right):
                return Join(go(left, name), go(right, name))
        raise TypeError(f"not an Expr: {e!r}")

    return go(e, name)


# ---------------------------------------------------------------------------
# Alpha-equivalence via a canonical de Bruijn key


Canon = str


def canonical(e: Expr) -> Canon:
    """Hashable key identical for alpha-equivalent terms (de Bruijn form).

    The key is a string with length-prefixed names, so the encoding is
    injective whatever characters names contain. Keys are cached on the node;
    string hashes are themselves cached by the runtime, which keeps the many
    table lookups built on this cheap.
    """
    try:
        return object.__getattribute__(e, "_canon")
    except AttributeError:
        k = _canonical(e, ())
        object.__setattr__(e, "_canon", k)
        return k


def _lp(name: str) -> str:
    return f"{len(name)}:{name}"


def _canonical(e: Expr, _env: tuple[str, ...]) -> Canon:
    match e:
        case Bot():
            return "B"
        case Top():
            return "T"
        case BotV():
            return "V"
        case Sym(name):
            return "s" + _lp(name)
        case Var(name):
            for i in range(len(_env) - 1, -1, -1):
                if _env[i] == name:
                    return f"b{len(_env) - 1 - i}."
            return "f" + _lp(name)
        case Lam(param, body):
            return "l(" + _canonical(body, _env + (param,)) + ")"
        case Pair(fst, snd):
            return "p(" + _canonical(fst, _env) + "," + _canonical(snd, _env) + ")"
        case SetLit(elems):
            return "S(" + ",".join(_canonical(el, _env) for el in elems) + ")"
        case App(fn, arg):
            return "a(" + _canonical(fn, _env) + "," + _canonical(arg, _env) + ")"
        case LetPair(left, right, scrut, body):
            return (
                "q("
                + _canonical(scrut, _env)
                + ","
                + _canonical(body, _env + (left, right))
                + ")"
            )
        case LetSym(sym, scrut, body):
            return (
                "y"
                + _lp(sym)
                + "("
                + _canonical(scrut, _env)
                + ","
                + _canonical(body, _env)
                + ")"
            )
        case BigJoin(var, source, body):
            return (
                "j("
                + _canonical(source, _env)
                + ","
                + _canonical(body, _env + (var,))
                + ")"
            )
        case Join(left, right):
            return "o(" + _canonical(left, _env) + "," + _canonical(right, _env) + ")"
    raise TypeError(f"not an Expr: {e!r}")


def alpha_eq(a: Expr, b: Expr) -> bool:
    return a is b or canonical(a) == canonical(b)


# ---------------------------------------------------------------------------
# Evaluation contexts as paths
#
# A path is a tuple of steps from the root: "fn"/"arg" (application),
# "fst"/"snd" (pair), "left"/"right" (join), "scrut" (either let), "src"
# (big join source), or an int (set element index). Every path returned by
# eval_positions is the hole of a legal evaluation context: pairs and
# applications are left-to-right (the right only once the left is a value),
# sets and joins are parallel.

Path = tuple


def subterm_at(e: Expr, path: Path) -> Expr:
    for tok in path:
        match e, tok:
            case App(fn, _), "fn":
                e = fn
            case App(_, arg), "arg":
                e = arg
            case Pair(fst, _), "fst":
                e = fst
            case Pair(_, snd), "snd":
                e = snd
            case Join(left, _), "left":
                e = left
            case Join(_, right), "right":
                e = right
            case (LetPair(_, _, scrut, _), "scrut") | (LetSym(_, scrut, _), "scrut"):
                e = scrut
            case BigJoin(_, source, _), "src":
                e = source
            case SetLit(elems), int(i):
                e = elems[i]
            case _:
                raise KeyError(f"path {path!r} does not exist in term")
    return e


def replace_at(e: Expr, path: Path, new: Expr) -> Expr:
    """Plug `new` into the hole at `path` (the inverse of subterm_at)."""
    if not path:
        return new
    tok, rest = path[0], path[1:]
    match e, tok:
        case App(fn, arg), "fn":
            return App(replace_at(fn, rest, new), arg)
        case App(fn, arg), "arg":
            return App(fn, replace_at(arg, rest, new))
        case Pair(fst, snd), "fst":
            return Pair(replace_at(fst, rest, new), snd)
        case Pair(fst, snd), "snd":
            return Pair(fst, replace_at(snd, rest, new))
        case Join(left, right), "left":
            return Join(replace_at(left, rest, new), right)
        case Join(left, right), "right":
            return Join(left, replace_at(right, rest, new))
        case LetPair(l, r, scrut, body), "scrut":
            return LetPair(l, r, replace_at(scrut, rest, new), body)
        case LetSym(s, scrut, body), "scrut":
            return LetSym(s, replace_at(scrut, rest, new), body)
        case BigJoin(v, source, body), "src":
            return BigJoin(v, replace_at(source, rest, new), body)
        case SetLit(elems), int(i):
            elems = list(elems)
            elems[i] = replace_at(elems[i], rest, new)
            return SetLit(tuple(elems))
    raise KeyError(f"path {path!r} does not exist in term")


def drop_set_elem(e: Expr, path: Path) -> Expr:
    """Remove the set element addressed by `path` (which must end in an int)."""
    *parent, idx = path
    s = subterm_at(e, tuple(parent))
    if not isinstance(s, SetLit):
        raise KeyError("set-drop path does not address a set element")
    elems = s.elems[:idx] + s.elems[idx + 1 :]
    return replace_at(e, tuple(parent), SetLit(elems))


def eval_positions(e: Expr) -> list[Path]:
    """All evaluation-context holes of e, root first, left to right."""
    out: list[Path] = []

    def go(e: Expr, prefix: Path) -> None:
        out.append(prefix)
        match e:
            case Pair(fst, snd):
                go(fst, prefix + ("fst",))
                if is_value(fst):
                    go(snd, prefix + ("snd",))
            case SetLit(elems):
                for i, el in enumerate(elems):
                    go(el, prefix + (i,))
            case App(fn, arg):
                go(fn, prefix + ("fn",))
                if is_value(fn):
                    go(arg, prefix + ("arg",))
            case LetPair(_, _, scrut, _) | LetSym(_, scrut, _):
                go(scrut, prefix + ("scrut",))
            case BigJoin(_, source, _):
                go(source, prefix + ("src",))
            case Join(left, right):
                go(left, prefix + ("left",))
                go(right, prefix + ("right",))
            case _:
                pass

    go(e, ())
    return out


# ---------------------------------------------------------------------------
# Redex decomposition

RULE_BETA = "beta"
RULE_LET_PAIR = "let-pair-beta"
RULE_LET_SYM = "let-sym-threshold"
RULE_BIG_JOIN = "big-join-expand"
RULE_JOIN = "join-of-results"
RULE_DROP_BOT = "set-drop-bot"
RULE_TOP = "top-propagate"
RULE_APPROX = "approximate"

STEP_RULES = (
    RULE_BETA,
    RULE_LET_PAIR,
    RULE_LET_SYM,
    RULE_BIG_JOIN,
    RULE_JOIN,
    RULE_DROP_BOT,
    RULE_TOP,
    RULE_APPROX,
)


@dataclass(frozen=True, slots=True)
class StepChoice:
    """One applicable reduction: a rule at an evaluation-context path.

    The path addresses the redex node, except for `set-drop-bot` (the bot
    element being dropped) and `top-propagate` (the top occurrence; the step
    collapses the whole term).
    """

    path: Path
    rule: str

    def render(self) -> str:
        toks = ".".join(str(tok) for tok in self.path)
        return f"{self.rule} @{toks}" if toks else f"{self.rule} @root"

    @staticmethod
    def parse(line: str) -> "StepChoice":
        try:
            rule, at = line.split(" @")
        except ValueError:
            raise ValueError(f"bad step line: {line!r}")
        if rule not in STEP_RULES:
            raise ValueError(f"unknown rule: {rule!r}")
        if at == "root":
            return StepChoice((), rule)
        path = tuple(int(t) if t.isdigit() else t for t in at.split("."))
        return StepChoice(path, rule)


def decompose(e: Expr, table: SymbolTable = DISCRETE) -> list[StepChoice]:
    """Every decomposition of e into an evaluation context around a redex
    (or a top occurrence strictly inside a context).

    Empty exactly when e is a result or stuck.
    """
    out: list[StepChoice] = []
    for p in eval_positions(e):
        f = subterm_at(e, p)
        match f:
            case Top():
                if p != ():
                    out.append(StepChoice(p, RULE_TOP))
            case App(Lam(), arg) if is_value(arg):
                out.append(StepChoice(p, RULE_BETA))
            case LetPair(_, _, Pair(a, b), _) if is_value(a) and is_value(b):
                out.append(StepChoice(p, RULE_LET_PAIR))
            case LetSym(sym, Sym(name), _) if table.leq(sym, name):
                out.append(StepChoice(p, RULE_LET_SYM))
            case BigJoin(_, SetLit(elems), _) if all(is_value(el) for el in elems):
                out.append(StepChoice(p, RULE_BIG_JOIN))
            case Join(left, right) if is_result(left) and is_result(right):
                out.append(StepChoice(p, RULE_JOIN))
            case SetLit(elems):
                for i, el in enumerate(elems):
                    if isinstance(el, Bot):
                        out.append(StepChoice(p + (i,), RULE_DROP_BOT))
            case _:
                pass
    return out


# ---------------------------------------------------------------------------
# Syntactic printer (round-trips through the surface parser)

_PREC_EXPR = 0  # binders and both lets extend to the right
_PREC_JOIN = 1  # e \/ e, left-assoc
_PREC_APP = 2  # e e, left-assoc
_PREC_ATOM = 3


def sym_literal(name: str) -> str:
    """The surface spelling of a symbol: true/false/() bare, strings as-is,
    everything else quoted with a leading tick."""
    if name in (SYM_TRUE, SYM_FALSE, SYM_UNIT):
        return name
    if name.startswith('"'):
        return name
    return f"'{name}"


def term_to_text(e: Expr, prec: int = _PREC_EXPR) -> str:
    def wrap(s: str, at: int) -> str:
        return f"({s})" if prec > at else s

    match e:
        case Bot():
            return "bot"
        case Top():
            return "top"
        case BotV():
            return "botv"
        case Var(name):
            return name
        case Sym(name):
            return sym_literal(name)
        case Lam(param, body):
            return wrap(f"\\{param}. {term_to_text(body)}", _PREC_EXPR)
        case Pair(fst, snd):
            return f"({term_to_text(fst)}, {term_to_text(snd)})"
        case SetLit(elems):
            inner = ", ".join(term_to_text(el) for el in elems)
            return "{" + inner + "}"
        case App(fn, arg):
            s = f"{term_to_text(fn, _PREC_APP)} {term_to_text(arg, _PREC_ATOM)}"
            return wrap(s, _PREC_APP)
        case LetPair(left, right, scrut, body):
            s = (
                f"let ({left}, {right}) = {term_to_text(scrut, _PREC_JOIN)} "
                f"in {term_to_text(body)}"
            )
            return wrap(s, _PREC_EXPR)
        case LetSym(sym, scrut, body):
            s = (
                f"let {sym_literal(sym)} = {term_to_text(scrut, _PREC_JOIN)} "
                f"in {term_to_text(body)}"
            )
            return wrap(s, _PREC_EXPR)
        case BigJoin(var, source, body):
            s = f"for {var} in {term_to_text(source, _PREC_JOIN)} join {term_to_text(body)}"
            return wrap(s, _PREC_EXPR)
        case Join(left, right):
            s = f"{term_to_text(left, _PREC_JOIN)} \\/ {term_to_text(right, _PREC_APP)}"
            return wrap(s, _PREC_JOIN)
    raise TypeError(f"not an Expr: {e!r}")
