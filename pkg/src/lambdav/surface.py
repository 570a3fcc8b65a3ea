"""Surface language: lexer, parser, and desugaring to core terms.

A program is a sequence of `def` bindings followed by an optional main
expression. Everything desugars to the core calculus:

  - numerals become zero/succ symbol pairs, `e1 :: e2` a cons pair, and
    `[a, b]` a cons chain ending in nil;
  - `{e, ...}` is a set literal ({} is the empty set), while `{f = e, ...}`
    is a record: a function that answers threshold queries on field names;
  - `e.f` projects by applying the record to the field symbol;
  - `if`/`&&`/`||` join the two symbol-threshold branches on true/false,
    and comparison operators call the numeric prelude;
  - `let p = e in b` binds by pattern: a plain variable forces e through an
    application, and structured patterns compile to threshold lets, so e.g.
    `let 2 = x in b` waits until x reveals the numeral 2;
  - `case e of p1 -> b1 | ...` joins its compiled arms (`|` binds to the
    nearest case);
  - definitions inline into later ones (a name may be defined once per
    program, though user definitions may shadow the prelude; a definition
    may refer to itself and is then closed through the call-by-value
    fixed-point combinator Z = \\f.(\\x. f (\\y. x x y)) (\\x. f (\\y. x x y))).

Applications never continue across an unindented line break: a token at the
start of a line begins a new top-level item (the next def or the main
expression), so multi-line arguments must be indented.

The prelude (plus, lt, le, gt, ge, eq over zero/succ numerals) is always in
scope; unused entries disappear during inlining.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .syntax import (
    BOT,
    BOTV,
    SYM_CONS,
    SYM_FALSE,
    SYM_NIL,
    SYM_SUCC,
    SYM_TRUE,
    SYM_UNIT,
    SYM_ZERO,
    TOP,
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
    Var,
    free_vars,
    fresh_name,
    is_value,
    subst,
)


class LVError(Exception):
    pass


class LVSyntaxError(LVError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(msg)
        self.msg = msg
        self.line = line
        self.col = col

    def __str__(self) -> str:
        return f"line {self.line}, col {self.col}: {self.msg}"


# ---------------------------------------------------------------------------
# Lexer

KEYWORDS = frozenset(
    "def let in if then else case of for join true false bot top botv _".split()
)

_TOKEN_SPEC = [
    ("ws", r"[ \t\r]+"),
    ("comment", r"#[^\n]*"),
    ("nl", r"\n"),
    ("op", r"->|::|\\/|\|\||&&|<=|>=|=="),
    ("str", r'"[^"\n]*"'),
    ("sym", r"'[A-Za-z_][A-Za-z0-9_]*"),
    ("nat", r"[0-9]+"),
    ("ident", r"[A-Za-z_][A-Za-z0-9_]*"),
    ("punct", r"[(){}\[\],.|=\\<>+]"),
]
_MASTER = re.compile("|".join(f"(?P<{n}>{p})" for n, p in _TOKEN_SPEC))


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _MASTER.match(text, pos)
        if m is None:
            raise LVSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        tok = m.group()
        if kind == "nl":
            line += 1
            col = 1
        elif kind in ("ws", "comment"):
            col += len(tok)
        else:
            if kind in ("op", "punct"):
                kind = tok
            elif kind == "ident" and tok in KEYWORDS:
                kind = tok
            out.append(Token(kind, tok, line, col))
            col += len(tok)
        pos = m.end()
    return out


# ---------------------------------------------------------------------------
# Patterns


class Pat:
    __slots__ = ()


@dataclass(frozen=True)
class PVar(Pat):
    name: str


@dataclass(frozen=True)
class PWild(Pat):
    pass


@dataclass(frozen=True)
class PSym(Pat):
    name: str


@dataclass(frozen=True)
class PNat(Pat):
    n: int


@dataclass(frozen=True)
class PNil(Pat):
    pass


@dataclass(frozen=True)
class PPair(Pat):
    fst: Pat
    snd: Pat


@dataclass(frozen=True)
class PCons(Pat):
    head: Pat
    tail: Pat


@dataclass(frozen=True)
class PRecord(Pat):
    fields: tuple[str, ...]


def pat_vars(p: Pat) -> list[str]:
    match p:
        case PVar(name):
            return [name]
        case PPair(a, b) | PCons(a, b):
            return pat_vars(a) + pat_vars(b)
        case PRecord(fields):
            return list(fields)
        case _:
            return []


class Freshener:
    """Deterministic fresh-name supply avoiding every identifier in the
    source program (and every name it has handed out)."""

    def __init__(self, avoid):
        self.avoid = set(avoid)

    def __call__(self, base: str) -> str:
        name = fresh_name(base, self.avoid)
        self.avoid.add(name)
        return name


def compile_match(pat: Pat, scrut: Expr, body: Expr, fresh: Freshener) -> Expr:
    """Term that yields `body` (with the pattern's names bound) once `scrut`
    reveals enough structure to match, and bot otherwise. Matching is free
    of beta steps except for record punning, which projects each field.

    For variable and record patterns `scrut` must be a variable or a value
    (it is substituted or duplicated); structured patterns consume it once.
    """
    match pat:
        case PVar(name):
            return subst(body, name, scrut)
        case PWild():
            return body
        case PSym(name):
            return LetSym(name, scrut, body)
        case PNat(n):
            h = fresh("n")
            t = fresh("m")
            if n == 0:
                return LetPair(h, t, scrut, LetSym(SYM_ZERO, Var(h), body))
            inner = compile_match(PNat(n - 1), Var(t), body, fresh)
            return LetPair(h, t, scrut, LetSym(SYM_SUCC, Var(h), inner))
        case PNil():
            h = fresh("h")
            t = fresh("t")
            return LetPair(h, t, scrut, LetSym(SYM_NIL, Var(h), body))
        case PCons(ph, pt):
            c = fresh("c")
            rest = fresh("r")
            inner = compile_match(PPair(ph, pt), Var(rest), body, fresh)
            return LetPair(c, rest, scrut, LetSym(SYM_CONS, Var(c), inner))
        case PPair(p1, p2):
            l = p1.name if isinstance(p1, PVar) else fresh("a")
            r = p2.name if isinstance(p2, PVar) else fresh("b")
            inner = body
            if not isinstance(p2, (PVar, PWild)):
                inner = compile_match(p2, Var(r), inner, fresh)
            if not isinstance(p1, (PVar, PWild)):
                inner = compile_match(p1, Var(l), inner, fresh)
            return LetPair(l, r, scrut, inner)
        case PRecord(fields):
            out = body
            for f in reversed(fields):
                out = App(Lam(f, out), App(scrut, Sym(f)))
            return out
    raise TypeError(f"not a Pat: {pat!r}")


# ---------------------------------------------------------------------------
# Parser (emits core terms directly)

_ATOM_STARTS = frozenset(
    ["ident", "nat", "sym", "str", "true", "false", "bot", "top", "botv", "(", "{", "["]
)

_CMP_OPS = {"<": "lt", "<=": "le", ">": "gt", ">=": "ge", "==": "eq"}


class Parser:
    def __init__(self, toks: list[Token], fresh: Freshener):
        self.toks = toks
        self.i = 0
        self.fresh = fresh

    def peek(self) -> Optional[Token]:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def at(self, kind: str) -> bool:
        t = self.peek()
        return t is not None and t.kind == kind

    def eat(self, kind: str) -> Token:
        t = self.peek()
        if t is None or t.kind != kind:
            self.error(f"expected {kind!r}" + (f", got {t.text!r}" if t else ""))
        self.i += 1
        return t

    def error(self, msg: str):
        t = self.peek()
        if t is None:
            last = self.toks[-1] if self.toks else None
            line = last.line if last else 1
            col = last.col + len(last.text) if last else 1
            raise LVSyntaxError(msg + " at end of input", line, col)
        raise LVSyntaxError(msg, t.line, t.col)

    # -- program structure

    def program(self) -> tuple[list[tuple[str, Expr]], Optional[Expr]]:
        defs = []
        seen: set[str] = set()
        while self.at("def"):
            kw = self.peek()
            name, body = self.parse_def()
            if name in seen:
                raise LVSyntaxError(
                    f"duplicate definition of {name!r}", kw.line, kw.col
                )
            seen.add(name)
            defs.append((name, body))
        main = None
        if self.peek() is not None:
            main = self.expr()
            if self.peek() is not None:
                self.error("unexpected token after main expression")
        return defs, main

    def parse_def(self) -> tuple[str, Expr]:
        self.eat("def")
        name = self.eat("ident").text
        pats = []
        while not self.at("="):
            if self.peek() is None:
                self.error("expected '=' in definition")
            pats.append(self.pattern_atom())
        self.eat("=")
        body = self.expr()
        for p in reversed(pats):
            body = self.lambda_for(p, body)
        return name, body

    def lambda_for(self, pat: Pat, body: Expr) -> Expr:
        self.check_pat(pat)
        if isinstance(pat, PVar):
            return Lam(pat.name, body)
        if isinstance(pat, PWild):
            return Lam(self.fresh("w"), body)
        v = self.fresh("p")
        return Lam(v, compile_match(pat, Var(v), body, self.fresh))

    def check_pat(self, pat: Pat) -> None:
        names = pat_vars(pat)
        if len(names) != len(set(names)):
            self.error(f"pattern binds a name twice: {pat!r}")

    # -- expressions

    def expr(self) -> Expr:
        t = self.peek()
        if t is None:
            self.error("expected an expression")
        if t.kind == "\\":
            return self.lambda_expr()
        if t.kind == "let":
            return self.let_expr()
        if t.kind == "if":
            return self.if_expr()
        if t.kind == "case":
            return self.case_expr()
        if t.kind == "for":
            return self.for_expr()
        return self.join_level()

    def lambda_expr(self) -> Expr:
        self.eat("\\")
        pats = [self.pattern_atom()]
        while not self.at("."):
            pats.append(self.pattern_atom())
        self.eat(".")
        body = self.expr()
        for p in reversed(pats):
            body = self.lambda_for(p, body)
        return body

    def let_expr(self) -> Expr:
        self.eat("let")
        pat = self.pattern_cons()
        self.check_pat(pat)
        self.eat("=")
        scrut = self.expr()
        self.eat("in")
        body = self.expr()
        match pat:
            case PVar(name):
                return App(Lam(name, body), scrut)
            case PWild():
                return App(Lam(self.fresh("w"), body), scrut)
            case PRecord(_) if not (isinstance(scrut, Var) or is_value(scrut)):
                v = self.fresh("s")
                return App(
                    Lam(v, compile_match(pat, Var(v), body, self.fresh)), scrut
                )
            case _:
                return compile_match(pat, scrut, body, self.fresh)

    def if_expr(self) -> Expr:
        self.eat("if")
        cond = self.expr()
        self.eat("then")
        yes = self.expr()
        self.eat("else")
        no = self.expr()
        x = self.fresh("c")
        branches = Join(
            LetSym(SYM_TRUE, Var(x), yes), LetSym(SYM_FALSE, Var(x), no)
        )
        return App(Lam(x, branches), cond)

    def case_expr(self) -> Expr:
        self.eat("case")
        scrut = self.expr()
        self.eat("of")
        arms = [self.case_arm()]
        while self.at("|"):
            self.eat("|")
            arms.append(self.case_arm())
        if isinstance(scrut, Var) or is_value(scrut):
            target, wrap = scrut, None
        else:
            wrap = self.fresh("s")
            target = Var(wrap)
        compiled = [
            compile_match(pat, target, body, self.fresh) for pat, body in arms
        ]
        joined = compiled[0]
        for arm in compiled[1:]:
            joined = Join(joined, arm)
        if wrap is not None:
            return App(Lam(wrap, joined), scrut)
        return joined

    def case_arm(self) -> tuple[Pat, Expr]:
        pat = self.pattern_cons()
        self.check_pat(pat)
        self.eat("->")
        body = self.expr()
        return pat, body

    def for_expr(self) -> Expr:
        self.eat("for")
        name = self.eat("ident").text
        self.eat("in")
        src = self.expr()
        self.eat("join")
        body = self.expr()
        return BigJoin(name, src, body)

    def join_level(self) -> Expr:
        e = self.or_level()
        while self.at("\\/"):
            self.eat("\\/")
            t = self.peek()
            if t is not None and t.kind in ("\\", "let", "if", "case", "for"):
                # a prefix form as the last arm extends to the end of the join
                return Join(e, self.expr())
            e = Join(e, self.or_level())
        return e

    def or_level(self) -> Expr:
        e = self.and_level()
        while self.at("||"):
            self.eat("||")
            r = self.and_level()
            e = self._bool_branch(e, Sym(SYM_TRUE), r)
        return e

    def and_level(self) -> Expr:
        e = self.cmp_level()
        while self.at("&&"):
            self.eat("&&")
            r = self.cmp_level()
            e = self._bool_branch(e, r, Sym(SYM_FALSE))
        return e

    def _bool_branch(self, cond: Expr, on_true: Expr, on_false: Expr) -> Expr:
        """Threshold on a boolean without duplicating the condition: bind it
        once unless it is already a variable or value."""
        if isinstance(cond, Var) or is_value(cond):
            return Join(
                LetSym(SYM_TRUE, cond, on_true),
                LetSym(SYM_FALSE, cond, on_false),
            )
        x = self.fresh("c")
        branches = Join(
            LetSym(SYM_TRUE, Var(x), on_true),
            LetSym(SYM_FALSE, Var(x), on_false),
        )
        return App(Lam(x, branches), cond)

    def cmp_level(self) -> Expr:
        e = self.cons_level()
        t = self.peek()
        if t is not None and t.kind in _CMP_OPS:
            self.eat(t.kind)
            r = self.cons_level()
            return App(App(Var(_CMP_OPS[t.kind]), e), r)
        return e

    def cons_level(self) -> Expr:
        e = self.add_level()
        if self.at("::"):
            self.eat("::")
            rest = self.cons_level()
            return Pair(Sym(SYM_CONS), Pair(e, rest))
        return e

    def add_level(self) -> Expr:
        e = self.app_level()
        while self.at("+"):
            self.eat("+")
            r = self.app_level()
            e = App(App(Var("plus"), e), r)
        return e

    def app_level(self) -> Expr:
        e = self.proj_level()
        while True:
            t = self.peek()
            if t is None or t.kind not in _ATOM_STARTS:
                return e
            # layout: a token at the start of a line opens a new top-level
            # item, never an argument; continuation lines must be indented
            if t.col == 1:
                return e
            e = App(e, self.proj_level())

    def proj_level(self) -> Expr:
        e = self.atom()
        while self.at("."):
            self.eat(".")
            f = self.eat("ident").text
            e = App(e, Sym(f))
        return e

    def atom(self) -> Expr:
        t = self.peek()
        if t is None:
            self.error("expected an expression")
        if t.kind == "ident":
            self.eat("ident")
            return Var(t.text)
        if t.kind == "nat":
            self.eat("nat")
            return numeral(int(t.text))
        if t.kind == "sym":
            self.eat("sym")
            return Sym(t.text[1:])
        if t.kind == "str":
            self.eat("str")
            return Sym(t.text)
        if t.kind in ("true", "false"):
            self.eat(t.kind)
            return Sym(t.kind)
        if t.kind == "bot":
            self.eat("bot")
            return BOT
        if t.kind == "top":
            self.eat("top")
            return TOP
        if t.kind == "botv":
            self.eat("botv")
            return BOTV
        if t.kind == "(":
            self.eat("(")
            if self.at(")"):
                self.eat(")")
                return Sym(SYM_UNIT)
            e = self.expr()
            if self.at(","):
                self.eat(",")
                snd = self.expr()
                self.eat(")")
                return Pair(e, snd)
            self.eat(")")
            return e
        if t.kind == "{":
            return self.braces()
        if t.kind == "[":
            return self.list_literal()
        self.error(f"unexpected token {t.text!r}")

    def braces(self) -> Expr:
        self.eat("{")
        if self.at("}"):
            self.eat("}")
            return SetLit(())
        # record when the body looks like `ident = ...`
        t, t2 = self.peek(), self.toks[self.i + 1] if self.i + 1 < len(self.toks) else None
        if t.kind == "ident" and t2 is not None and t2.kind == "=":
            return self.record_literal()
        elems = [self.expr()]
        while self.at(","):
            self.eat(",")
            elems.append(self.expr())
        self.eat("}")
        return SetLit(tuple(elems))

    def record_literal(self) -> Expr:
        fields: list[tuple[str, Expr]] = []
        names = set()
        while True:
            f = self.eat("ident").text
            if f in names:
                self.error(f"duplicate record field {f!r}")
            names.add(f)
            self.eat("=")
            fields.append((f, self.expr()))
            if self.at(","):
                self.eat(",")
                continue
            break
        self.eat("}")
        v = self.fresh("r")
        body: Optional[Expr] = None
        for f, e in fields:
            arm = LetSym(f, Var(v), e)
            body = arm if body is None else Join(body, arm)
        return Lam(v, body)

    def list_literal(self) -> Expr:
        self.eat("[")
        if self.at("]"):
            self.eat("]")
            return Pair(Sym(SYM_NIL), BOTV)
        elems = [self.expr()]
        while self.at(","):
            self.eat(",")
            elems.append(self.expr())
        self.eat("]")
        out: Expr = Pair(Sym(SYM_NIL), BOTV)
        for e in reversed(elems):
            out = Pair(Sym(SYM_CONS), Pair(e, out))
        return out

    # -- patterns

    def pattern_cons(self) -> Pat:
        p = self.pattern_atom()
        if self.at("::"):
            self.eat("::")
            return PCons(p, self.pattern_cons())
        return p

    def pattern_atom(self) -> Pat:
        t = self.peek()
        if t is None:
            self.error("expected a pattern")
        if t.kind == "ident":
            self.eat("ident")
            return PVar(t.text)
        if t.kind == "_":
            self.eat("_")
            return PWild()
        if t.kind == "nat":
            self.eat("nat")
            return PNat(int(t.text))
        if t.kind == "sym":
            self.eat("sym")
            return PSym(t.text[1:])
        if t.kind == "str":
            self.eat("str")
            return PSym(t.text)
        if t.kind in ("true", "false"):
            self.eat(t.kind)
            return PSym(t.kind)
        if t.kind == "(":
            self.eat("(")
            if self.at(")"):
                self.eat(")")
                return PSym(SYM_UNIT)
            p = self.pattern_cons()
            if self.at(","):
                self.eat(",")
                snd = self.pattern_cons()
                self.eat(")")
                return PPair(p, snd)
            self.eat(")")
            return p
        if t.kind == "[":
            self.eat("[")
            self.eat("]")
            return PNil()
        if t.kind == "{":
            self.eat("{")
            fields = [self.eat("ident").text]
            while self.at(","):
                self.eat(",")
                fields.append(self.eat("ident").text)
            self.eat("}")
            return PRecord(tuple(fields))
        self.error(f"unexpected token {t.text!r} in pattern")


def numeral(n: int) -> Expr:
    out: Expr = Pair(Sym(SYM_ZERO), BOTV)
    for _ in range(n):
        out = Pair(Sym(SYM_SUCC), out)
    return out


# ---------------------------------------------------------------------------
# Linking: inline definitions, close recursion through Z


def z_combinator() -> Expr:
    def half() -> Expr:
        return Lam(
            "x",
            App(Var("f"), Lam("y", App(App(Var("x"), Var("x")), Var("y")))),
        )

    return Lam("f", App(half(), half()))


PRELUDE = """
def plus m n = case n of ('zero, _) -> m | ('succ, k) -> ('succ, plus m k)
def lt m n = case (m, n) of
    (('zero, _), ('succ, _)) -> true
  | (('succ, a), ('succ, b)) -> lt a b
  | (_, ('zero, _)) -> false
def le m n = case (m, n) of
    (('zero, _), _) -> true
  | (('succ, _), ('zero, _)) -> false
  | (('succ, a), ('succ, b)) -> le a b
def gt m n = lt n m
def ge m n = le n m
def eq m n = case (m, n) of
    (('zero, _), ('zero, _)) -> true
  | (('succ, a), ('succ, b)) -> eq a b
  | (('zero, _), ('succ, _)) -> false
  | (('succ, _), ('zero, _)) -> false
"""

_prelude_cache: Optional[list[tuple[str, Expr]]] = None


def _prelude_defs() -> list[tuple[str, Expr]]:
    global _prelude_cache
    if _prelude_cache is None:
        toks = tokenize(PRELUDE)
        fresh = Freshener(t.text for t in toks if t.kind == "ident")
        defs, main = Parser(toks, fresh).program()
        assert main is None
        _prelude_cache = defs
    return list(_prelude_cache)


def link(
    defs: list[tuple[str, Expr]], main: Optional[Expr]
) -> tuple[dict[str, Expr], Optional[Expr]]:
    """Inline earlier definitions into later ones and into the main
    expression, closing self-recursive definitions through Z. Every linked
    term is closed; a leftover free variable is an unknown name."""
    z = z_combinator()
    env: dict[str, Expr] = {}
    for name, core in defs:
        for prior, value in env.items():
            core = subst(core, prior, value)
        if name in free_vars(core):
            core = App(z, Lam(name, core))
        stray = free_vars(core)
        if stray:
            raise LVError(
                f"unknown name(s) in def {name}: {', '.join(sorted(stray))}"
            )
        env[name] = core
    if main is not None:
        for prior, value in env.items():
            main = subst(main, prior, value)
        stray = free_vars(main)
        if stray:
            raise LVError(f"unknown name(s): {', '.join(sorted(stray))}")
    return env, main


def desugar_program(text: str) -> tuple[dict[str, Expr], Optional[Expr]]:
    """Parse and link a full program; returns the closed definitions and the
    closed main expression (None when the file only defines names)."""
    toks = tokenize(text)
    fresh = Freshener(t.text for t in toks if t.kind == "ident")
    defs, main = Parser(toks, fresh).program()
    env, linked = link(_prelude_defs() + defs, main)
    if linked is None:
        linked = env.get("main")
    return env, linked


def parse_term(text: str) -> Expr:
    """Parse a program that must end in a main expression; returns its core
    term with all definitions and prelude names resolved."""
    _, main = desugar_program(text)
    if main is None:
        raise LVError("program has no main expression")
    return main
