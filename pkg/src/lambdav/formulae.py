"""Formulae describing partial results, and their approximation order.

A computation formula is `bot`, `top`, or a value formula; value formulae
mirror value shapes: the trivial value, a symbol, a pair of value formulae,
a finite set of value formulae (a coverage bound: every listed formula is
below some element of the described set), or a join of arrow clauses
written `\/ [tau -> phi, ...]` (read conjunctively: on any input above
`tau` the function's output is above `phi`). The empty clause join,
written `\/ []`, says only "this is a function".

The order and join here deliberately track the result order and result join
of the operational side: symbols compare through the same join table, pairs
lift componentwise with mismatches collapsing to `top`, and set/function
formulae compare by coverage of their elements/clauses.
"""

from __future__ import annotations

import functools
import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .syntax import DISCRETE, SymbolTable, sym_literal


class Form:
    __slots__ = ("_hash",)


@dataclass(frozen=True, slots=True)
class BotF(Form):
    pass


@dataclass(frozen=True, slots=True)
class TopF(Form):
    pass


@dataclass(frozen=True, slots=True)
class BotVF(Form):
    pass


@dataclass(frozen=True, slots=True)
class SymF(Form):
    name: str


@dataclass(frozen=True, slots=True)
class PairF(Form):
    fst: Form
    snd: Form


@dataclass(frozen=True, slots=True)
class SetF(Form):
    elems: tuple[Form, ...]


@dataclass(frozen=True, slots=True)
class FunF(Form):
    clauses: tuple[tuple[Form, Form], ...]


def _caching_hash(generated):
    def h(self):
        try:
            return object.__getattribute__(self, "_hash")
        except AttributeError:
            v = generated(self)
            object.__setattr__(self, "_hash", v)
            return v

    return h


# formulae are immutable and deeply shared; hashing once per node matters
for _cls in (BotF, TopF, BotVF, SymF, PairF, SetF, FunF):
    _cls.__hash__ = _caching_hash(_cls.__hash__)
del _cls


BOT_F = BotF()
TOP_F = TopF()
BOTV_F = BotVF()


def is_value_form(phi: Form) -> bool:
    return not isinstance(phi, (BotF, TopF))


def _sort_key(phi: Form):
    match phi:
        case BotF():
            return ("0bot",)
        case TopF():
            return ("1top",)
        case BotVF():
            return ("2botv",)
        case SymF(name):
            return ("3sym", name)
        case PairF(fst, snd):
            return ("4pair", _sort_key(fst), _sort_key(snd))
        case SetF(elems):
            return ("5set", tuple(_sort_key(el) for el in elems))
        case FunF(clauses):
            return (
                "6fun",
                tuple((_sort_key(t), _sort_key(p)) for t, p in clauses),
            )
    raise TypeError(f"not a Form: {phi!r}")


@functools.lru_cache(maxsize=1 << 18)
def canonical_form(phi: Form) -> Form:
    """Sort and exact-dedup set elements and function clauses, recursively.

    Canonicalisation is purely syntactic (no join-table pruning), so
    equivalent formulae such as `\\/ []` and `\\/ [botv -> bot]` stay
    distinct.
    """
    match phi:
        case SetF(elems):
            elems = tuple(canonical_form(el) for el in elems)
            seen = sorted(set(elems), key=_sort_key)
            return SetF(tuple(seen))
        case FunF(clauses):
            clauses = tuple(
                (canonical_form(t), canonical_form(p)) for t, p in clauses
            )
            uniq = sorted(set(clauses), key=lambda c: (_sort_key(c[0]), _sort_key(c[1])))
            return FunF(tuple(uniq))
        case PairF(fst, snd):
            return PairF(canonical_form(fst), canonical_form(snd))
        case _:
            return phi


def form_size(phi: Form) -> int:
    """Height of the formula; every leaf has height 1."""
    match phi:
        case BotF() | TopF() | BotVF() | SymF():
            return 1
        case PairF(fst, snd):
            return 1 + max(form_size(fst), form_size(snd))
        case SetF(elems):
            return 1 + max((form_size(el) for el in elems), default=0)
        case FunF(clauses):
            return 1 + max(
                (max(form_size(t), form_size(p)) for t, p in clauses), default=0
            )
    raise TypeError(f"not a Form: {phi!r}")


def form_leq(a: Form, b: Form, table: SymbolTable = DISCRETE) -> bool:
    cache = table.__dict__.setdefault("_form_leq_cache", {})
    key = (a, b)
    hit = cache.get(key)
    if hit is not None:
        return hit
    out = _leq(a, b, table)
    cache[key] = out
    return out


def _leq(a: Form, b: Form, table: SymbolTable) -> bool:
    if a == b:
        return True
    match a, b:
        case BotF(), _:
            return True
        case _, TopF():
            return True
        case TopF(), _:
            return False
        case _, BotF():
            return False
        case BotVF(), _:
            return True  # b is a value form here
        case _, BotVF():
            return False
        case SymF(x), SymF(y):
            return table.leq(x, y)
        case PairF(a1, a2), PairF(b1, b2):
            return form_leq(a1, b1, table) and form_leq(a2, b2, table)
        case SetF(xs), SetF(ys):
            return all(
                any(form_leq(x, y, table) for y in ys) for x in xs
            )
        case FunF(cs), FunF(ds):
            return all(_fun_clause_covered(t, p, ds, table) for t, p in cs)
        case _:
            return False


def _fun_clause_covered(
    tau: Form, phi: Form, ds: tuple[tuple[Form, Form], ...], table: SymbolTable
) -> bool:
    """Some subclauses of `ds` jointly refine the clause tau -> phi: their
    domains join below tau while their codomains join above phi.

    Only clauses with domain individually below tau can contribute (a join
    dominates its operands), and among those, taking all of them maximises
    the codomain join without pushing the domain join past tau (the join is
    a least upper bound on every connected fragment of the order). So the
    subset search collapses to one check. The empty set of clauses counts,
    with both joins bot: a clause with codomain bot holds of any function.
    """
    cod: Form = BOT_F
    for t, p in ds:
        if form_leq(t, tau, table):
            cod = form_join(cod, p, table)
    return form_leq(phi, cod, table)


def form_join(a: Form, b: Form, table: SymbolTable = DISCRETE) -> Form:
    cache = table.__dict__.setdefault("_form_join_cache", {})
    key = (a, b)
    hit = cache.get(key)
    if hit is not None:
        return hit
    out = _join(a, b, table)
    cache[key] = out
    return out


def _join(a: Form, b: Form, table: SymbolTable) -> Form:
    if a == b:
        return a
    match a, b:
        case BotF(), _:
            return b
        case _, BotF():
            return a
        case (TopF(), _) | (_, TopF()):
            return TOP_F
        case BotVF(), _:
            return b
        case _, BotVF():
            return a
        case SymF(x), SymF(y):
            j = table.join(x, y)
            return SymF(j) if j is not None else TOP_F
        case PairF(a1, a2), PairF(b1, b2):
            f = form_join(a1, b1, table)
            s = form_join(a2, b2, table)
            if isinstance(f, TopF) or isinstance(s, TopF):
                return TOP_F
            return PairF(f, s)
        case SetF(xs), SetF(ys):
            return canonical_form(SetF(xs + ys))
        case FunF(cs), FunF(ds):
            return canonical_form(FunF(cs + ds))
        case _:
            return TOP_F


def form_lift_pair(phi1: Form, phi2: Form) -> Form:
    """Pair two computation formulae, left component first: a bot or top on
    the left hides the right entirely, matching left-to-right evaluation."""
    if isinstance(phi1, BotF):
        return BOT_F
    if isinstance(phi1, TopF):
        return TOP_F
    if isinstance(phi2, BotF):
        return BOT_F
    if isinstance(phi2, TopF):
        return TOP_F
    return canonical_form(PairF(phi1, phi2))


def form_lift_set(phi: Form) -> Form:
    """Inject a value formula into a singleton set formula; bot and top pass
    through unchanged."""
    if isinstance(phi, (BotF, TopF)):
        return phi
    return canonical_form(SetF((phi,)))


# ---------------------------------------------------------------------------
# Bounded enumeration

ELEM_CAP = 12
CLAUSE_CAP = 8
MAX_SET_ELEMS = 2
MAX_FUN_CLAUSES = 2


def enumerate_forms(
    max_height: int,
    symbols: Iterable[str] = (),
    *,
    max_set_elems: int = MAX_SET_ELEMS,
    max_fun_clauses: int = MAX_FUN_CLAUSES,
    elem_cap: int = ELEM_CAP,
    clause_cap: int = CLAUSE_CAP,
) -> list[Form]:
    return list(
        _enumerate_cached(
            max_height,
            tuple(sorted(set(symbols))),
            max_set_elems,
            max_fun_clauses,
            elem_cap,
            clause_cap,
        )
    )


@functools.lru_cache(maxsize=64)
def _enumerate_cached(
    max_height: int,
    symbols: tuple[str, ...],
    max_set_elems: int,
    max_fun_clauses: int,
    elem_cap: int,
    clause_cap: int,
) -> tuple[Form, ...]:
    """Deterministic pool of canonical formulae up to the given height.

    Height 1 is the three atomic constants alone; the symbol alphabet and the
    empty set/function formulae enter at height 2 alongside the first
    composites. The space is exponential, so each level draws its building
    blocks from capped prefixes of the pool built so far (insertion order,
    shallow forms first): pair/set components from the first `elem_cap` value
    forms, arrow clauses from the first `clause_cap` of the domain/codomain
    product. Sets keep at most `max_set_elems` elements and joins of arrows
    at most `max_fun_clauses` clauses. Within those caps the output is
    exhaustive, duplicate-free, and stable across runs.
    """
    pool: list[Form] = [BOT_F, TOP_F, BOTV_F]
    seen = set(pool)

    for height in range(2, max_height + 1):
        if height == 2:
            for atom in [SymF(s) for s in sorted(set(symbols))] + [SetF(()), FunF(())]:
                if atom not in seen:
                    seen.add(atom)
                    pool.append(atom)
        values = [f for f in pool if is_value_form(f)][:elem_cap]
        new: list[Form] = []

        for a, b in itertools.product(values, values):
            new.append(PairF(a, b))

        for n in range(1, max_set_elems + 1):
            for combo in itertools.combinations(values, n):
                new.append(canonical_form(SetF(combo)))

        clause_pool = [
            (t, p) for t in values[:4] for p in pool[:4]
        ][:clause_cap]
        for n in range(1, max_fun_clauses + 1):
            for combo in itertools.combinations(clause_pool, n):
                new.append(canonical_form(FunF(tuple(combo))))

        for f in new:
            if f not in seen:
                seen.add(f)
                pool.append(f)

    return tuple(pool)


# ---------------------------------------------------------------------------
# Parsing and printing

_FORM_TOKEN = re.compile(
    r"""\s*(?:
        (?P<arrow>->)
      | (?P<vee>\\\/)
      | (?P<punct>[()\[\]{},])
      | (?P<unit>\(\))
      | (?P<str>"[^"]*")
      | (?P<tick>'[A-Za-z_][A-Za-z0-9_]*)
      | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
    )""",
    re.VERBOSE,
)


def _tokenize_formula(text: str) -> list[str]:
    out = []
    pos = 0
    while pos < len(text):
        if text[pos:].isspace():
            break
        # '()' must win over '('
        m = re.match(r"\s*\(\)", text[pos:])
        if m:
            out.append("()")
            pos += m.end()
            continue
        m = _FORM_TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"bad formula syntax at: {text[pos:pos+20]!r}")
        out.append(m.group().strip())
        pos = m.end()
    return out


class _FormParser:
    def __init__(self, tokens: list[str]):
        self.toks = tokens
        self.i = 0

    def peek(self) -> Optional[str]:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ValueError("formula ended unexpectedly")
        self.i += 1
        return tok

    def expect(self, tok: str) -> None:
        got = self.next()
        if got != tok:
            raise ValueError(f"expected {tok!r}, got {got!r}")

    def formula(self) -> Form:
        if self.peek() == "\\/":
            self.next()
            self.expect("[")
            clauses: list[tuple[Form, Form]] = []
            if self.peek() != "]":
                while True:
                    dom = self.formula()
                    if not is_value_form(dom):
                        raise ValueError("arrow domain must be a value formula")
                    self.expect("->")
                    cod = self.formula()
                    clauses.append((dom, cod))
                    if self.peek() == ",":
                        self.next()
                        continue
                    break
            self.expect("]")
            return canonical_form(FunF(tuple(clauses)))
        return self.atom()

    def atom(self) -> Form:
        tok = self.next()
        if tok == "bot":
            return BOT_F
        if tok == "top":
            return TOP_F
        if tok == "botv":
            return BOTV_F
        if tok in ("true", "false"):
            return SymF(tok)
        if tok == "()":
            return SymF("()")
        if tok.startswith("'"):
            return SymF(tok[1:])
        if tok.startswith('"'):
            return SymF(tok)
        if tok == "{":
            elems = []
            if self.peek() != "}":
                while True:
                    el = self.formula()
                    if not is_value_form(el):
                        raise ValueError("set formula elements must be value formulae")
                    elems.append(el)
                    if self.peek() == ",":
                        self.next()
                        continue
                    break
            self.expect("}")
            return canonical_form(SetF(tuple(elems)))
        if tok == "(":
            inner = self.formula()
            if self.peek() == ",":
                self.next()
                snd = self.formula()
                self.expect(")")
                if not (is_value_form(inner) and is_value_form(snd)):
                    raise ValueError("pair formula components must be value formulae")
                return PairF(inner, snd)
            self.expect(")")
            return inner
        raise ValueError(f"unexpected token in formula: {tok!r}")


def parse_formula(text: str) -> Form:
    p = _FormParser(_tokenize_formula(text))
    out = p.formula()
    if p.peek() is not None:
        raise ValueError(f"trailing tokens in formula: {' '.join(p.toks[p.i:])!r}")
    return canonical_form(out)


def form_to_text(phi: Form) -> str:
    match phi:
        case BotF():
            return "bot"
        case TopF():
            return "top"
        case BotVF():
            return "botv"
        case SymF(name):
            return sym_literal(name)
        case PairF(fst, snd):
            return f"({form_to_text(fst)}, {form_to_text(snd)})"
        case SetF(elems):
            return "{" + ", ".join(form_to_text(el) for el in elems) + "}"
        case FunF(clauses):
            body = ", ".join(
                f"{form_to_text(t)} -> {form_to_text(p)}" for t, p in clauses
            )
            return "\\/ [" + body + "]"
    raise TypeError(f"not a Form: {phi!r}")
