"""Theory-file DSL: declarations, named axioms and named existential goals.

One file describes one theory plus a goal table.  Grammar (whitespace
insensitive; declarations must precede use):

    file    := (pragma | decl | axiom | goal)*
    pragma  := "logic" ("horn" | "coherent" | "classical")
    decl    := "sort" NAME | "const" NAME ":" NAME
             | "fn" NAME ":" NAME ("*" NAME)* "->" NAME
             | "rel" NAME ":" NAME ("*" NAME)*
    axiom   := "axiom" NAME ":" formula "|-" formula ctx?
    goal    := "goal" NAME ":" "true" "|-" "exists" binders "." formula ctx?
    formula := "true" | "false" | term "=" term | NAME "(" terms ")"
             | formula "/\\" formula | formula "\\/" formula
             | "~" formula | "(" formula ")"
    ctx     := "[" NAME ":" NAME ("," NAME ":" NAME)* "]"

"~" is legal only under the pragma ``logic classical`` and triggers
Morleyisation of the whole file.  Parse and sort errors carry line/column
and the offending token.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .errors import EngineError, ParseError
from .herbrand import ClassicalTheory, ExistentialGoal, MorleyisedTheory, Not, morleyise
from .logic import (
    And,
    Axiom,
    Bot,
    CLASSICAL,
    COHERENT,
    Eq,
    Formula,
    HORN,
    Or,
    Rel,
    Sequent,
    Theory,
    Top,
    flatten_and,
    flatten_or,
    formula_to_str,
    is_horn,
)
from .terms import App, Context, Signature, Term, Var, concat


@dataclass(frozen=True)
class Token:
    kind: str  # "name" | "punct" | "eof"
    value: str
    line: int
    column: int


_PUNCT = ["|-", "->", "/\\", "\\/", "(", ")", "[", "]", "{", "}", ",", ".", ":", ";", "*", "=", "~"]
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        m = _NAME_RE.match(text, i)
        if m:
            tokens.append(Token("name", m.group(), line, col))
            col += len(m.group())
            i = m.end()
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                tokens.append(Token("punct", p, line, col))
                col += len(p)
                i += len(p)
                break
        else:
            raise ParseError("unexpected character", line, col, ch)
    tokens.append(Token("eof", "", line, col))
    return tokens


# raw (pre-elaboration) syntax trees; formulas are parsed before their
# context is known, so names are resolved in a second step


@dataclass(frozen=True)
class RawTerm:
    name: str
    args: Optional[tuple["RawTerm", ...]]
    token: Token


@dataclass(frozen=True)
class RawFormula:
    kind: str  # "true" "false" "eq" "rel" "and" "or" "not"
    token: Token
    terms: tuple[RawTerm, ...] = ()
    name: str = ""
    children: tuple["RawFormula", ...] = ()


@dataclass
class TheoryFile:
    """Parsed artifact: an elaborated theory plus its goal table."""

    fragment: str
    theory: Theory
    goals: dict[str, ExistentialGoal]
    morley: Optional[MorleyisedTheory] = None


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self.pragma: Optional[str] = None
        self.sorts: list[str] = []
        self.functions: list[tuple[str, tuple[str, ...], str]] = []
        self.relations: list[tuple[str, tuple[str, ...]]] = []
        self.names: dict[str, Token] = {}
        self.raw_axioms: list[tuple[str, RawFormula, RawFormula, Context]] = []
        self.raw_goals: list[tuple[str, Context, Context, RawFormula]] = []

    # -- token plumbing -------------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.peek()
        raise ParseError(message, tok.line, tok.column, tok.value)

    def expect(self, value: str) -> Token:
        tok = self.next()
        if tok.value != value:
            self.fail(f"expected {value!r}", tok)
        return tok

    def expect_name(self, what: str = "a name") -> Token:
        tok = self.next()
        if tok.kind != "name":
            self.fail(f"expected {what}", tok)
        return tok

    # -- declarations ----------------------------------------------------------

    def declare(self, tok: Token):
        if tok.value in self.names:
            prev = self.names[tok.value]
            self.fail(
                f"name {tok.value!r} already declared at {prev.line}:{prev.column}",
                tok,
            )
        self.names[tok.value] = tok

    def expect_sort(self) -> str:
        tok = self.expect_name("a sort name")
        if tok.value not in self.sorts:
            self.fail(f"undeclared sort {tok.value!r}", tok)
        return tok.value

    def parse_file(self):
        while self.peek().kind != "eof":
            tok = self.next()
            if tok.value == "logic":
                frag = self.expect_name("a fragment (horn, coherent or classical)")
                if frag.value not in ("horn", "coherent", "classical"):
                    self.fail("expected horn, coherent or classical", frag)
                if self.pragma is not None:
                    self.fail("duplicate logic pragma", tok)
                self.pragma = frag.value
            elif tok.value == "sort":
                name = self.expect_name("a sort name")
                self.declare(name)
                self.sorts.append(name.value)
            elif tok.value == "const":
                name = self.expect_name("a constant name")
                self.declare(name)
                self.expect(":")
                self.functions.append((name.value, (), self.expect_sort()))
            elif tok.value == "fn":
                name = self.expect_name("a function name")
                self.declare(name)
                self.expect(":")
                args = [self.expect_sort()]
                while self.peek().value == "*":
                    self.next()
                    args.append(self.expect_sort())
                self.expect("->")
                self.functions.append((name.value, tuple(args), self.expect_sort()))
            elif tok.value == "rel":
                name = self.expect_name("a relation name")
                self.declare(name)
                self.expect(":")
                args = [self.expect_sort()]
                while self.peek().value == "*":
                    self.next()
                    args.append(self.expect_sort())
                self.relations.append((name.value, tuple(args)))
            elif tok.value == "axiom":
                self.parse_axiom()
            elif tok.value == "goal":
                self.parse_goal()
            else:
                self.fail("expected a declaration, axiom or goal", tok)

    def parse_axiom(self):
        name = self.expect_name("an axiom name")
        self.declare(name)
        self.expect(":")
        lhs = self.parse_formula()
        self.expect("|-")
        rhs = self.parse_formula()
        ctx = self.parse_ctx() if self.peek().value == "[" else Context()
        self.raw_axioms.append((name.value, lhs, rhs, ctx))

    def parse_goal(self):
        name = self.expect_name("a goal name")
        self.declare(name)
        self.expect(":")
        tok = self.next()
        if tok.value != "true":
            self.fail("goals start with 'true |-'", tok)
        self.expect("|-")
        tok = self.next()
        if tok.value != "exists":
            self.fail("goals quantify with 'exists'", tok)
        bound = self.parse_binders()
        self.expect(".")
        matrix = self.parse_formula()
        outer = self.parse_ctx() if self.peek().value == "[" else Context()
        self.raw_goals.append((name.value, bound, outer, matrix))

    def parse_binders(self) -> Context:
        bindings = [self.parse_binding()]
        while self.peek().value == ",":
            self.next()
            bindings.append(self.parse_binding())
        return self._make_context(bindings)

    def parse_ctx(self) -> Context:
        self.expect("[")
        bindings = [self.parse_binding()]
        while self.peek().value == ",":
            self.next()
            bindings.append(self.parse_binding())
        self.expect("]")
        return self._make_context(bindings)

    def parse_binding(self) -> tuple[Token, str]:
        name = self.expect_name("a variable name")
        self.expect(":")
        return name, self.expect_sort()

    def _make_context(self, bindings: list[tuple[Token, str]]) -> Context:
        seen: set[str] = set()
        for tok, _ in bindings:
            if tok.value in seen:
                self.fail(f"duplicate variable {tok.value!r}", tok)
            seen.add(tok.value)
        return Context.make([(tok.value, sort) for tok, sort in bindings])

    # -- formulas ----------------------------------------------------------------

    def parse_formula(self) -> RawFormula:
        left = self.parse_and()
        while self.peek().value == "\\/":
            tok = self.next()
            right = self.parse_and()
            left = RawFormula("or", tok, children=(left, right))
        return left

    def parse_and(self) -> RawFormula:
        left = self.parse_unary()
        while self.peek().value == "/\\":
            tok = self.next()
            right = self.parse_unary()
            left = RawFormula("and", tok, children=(left, right))
        return left

    def parse_unary(self) -> RawFormula:
        if self.peek().value == "~":
            tok = self.next()
            if self.pragma != "classical":
                self.fail("negation requires the pragma 'logic classical'", tok)
            return RawFormula("not", tok, children=(self.parse_unary(),))
        return self.parse_atom()

    def parse_atom(self) -> RawFormula:
        tok = self.peek()
        if tok.value == "(":
            self.next()
            phi = self.parse_formula()
            self.expect(")")
            return phi
        if tok.value == "true":
            return RawFormula("true", self.next())
        if tok.value == "false":
            return RawFormula("false", self.next())
        if tok.kind == "name" and any(r == tok.value for r, _ in self.relations):
            self.next()
            self.expect("(")
            args = [self.parse_term()]
            while self.peek().value == ",":
                self.next()
                args.append(self.parse_term())
            self.expect(")")
            return RawFormula("rel", tok, terms=tuple(args), name=tok.value)
        lhs = self.parse_term()
        eq = self.expect("=")
        rhs = self.parse_term()
        return RawFormula("eq", eq, terms=(lhs, rhs))

    def parse_term(self) -> RawTerm:
        tok = self.expect_name("a term")
        if self.peek().value == "(":
            self.next()
            args = [self.parse_term()]
            while self.peek().value == ",":
                self.next()
                args.append(self.parse_term())
            self.expect(")")
            return RawTerm(tok.value, tuple(args), tok)
        return RawTerm(tok.value, None, tok)

    # -- elaboration ----------------------------------------------------------------

    def signature(self) -> Signature:
        return Signature.make(self.sorts, self.functions, self.relations)

    def elab_term(self, raw: RawTerm, ctx: Context, sig: Signature) -> tuple[Term, str]:
        if raw.args is None:
            if raw.name in ctx.names:
                i = ctx.names.index(raw.name)
                return Var(i), ctx.sorts[i]
            if sig.has_function(raw.name):
                f = sig.function(raw.name)
                if f.arity != 0:
                    self.fail(f"{raw.name!r} expects {f.arity} arguments", raw.token)
                return App(raw.name), f.result_sort
            self.fail(f"unknown variable or constant {raw.name!r}", raw.token)
        if not sig.has_function(raw.name):
            self.fail(f"unknown function {raw.name!r}", raw.token)
        f = sig.function(raw.name)
        if len(raw.args) != f.arity:
            self.fail(
                f"{raw.name!r} expects {f.arity} arguments, got {len(raw.args)}",
                raw.token,
            )
        args = []
        for a, expected in zip(raw.args, f.arg_sorts):
            t, actual = self.elab_term(a, ctx, sig)
            if actual != expected:
                self.fail(f"argument has sort {actual}, expected {expected}", a.token)
            args.append(t)
        return App(raw.name, tuple(args)), f.result_sort

    def elab_formula(self, raw: RawFormula, ctx: Context, sig: Signature) -> Formula:
        if raw.kind == "true":
            return Top(ctx)
        if raw.kind == "false":
            return Bot(ctx)
        if raw.kind == "eq":
            lhs, ls = self.elab_term(raw.terms[0], ctx, sig)
            rhs, rs = self.elab_term(raw.terms[1], ctx, sig)
            if ls != rs:
                self.fail(f"equality between sorts {ls} and {rs}", raw.token)
            return Eq(ctx, lhs, rhs)
        if raw.kind == "rel":
            r = sig.relation(raw.name)
            if len(raw.terms) != r.arity:
                self.fail(f"{raw.name!r} expects {r.arity} arguments", raw.token)
            args = []
            for a, expected in zip(raw.terms, r.arg_sorts):
                t, actual = self.elab_term(a, ctx, sig)
                if actual != expected:
                    self.fail(
                        f"argument has sort {actual}, expected {expected}", a.token
                    )
                args.append(t)
            return Rel(ctx, raw.name, tuple(args))
        if raw.kind == "and":
            return And(
                ctx,
                self.elab_formula(raw.children[0], ctx, sig),
                self.elab_formula(raw.children[1], ctx, sig),
            )
        if raw.kind == "or":
            return Or(
                ctx,
                self.elab_formula(raw.children[0], ctx, sig),
                self.elab_formula(raw.children[1], ctx, sig),
            )
        if raw.kind == "not":
            return Not(ctx, self.elab_formula(raw.children[0], ctx, sig))
        raise AssertionError(raw.kind)

    def finalize(self) -> TheoryFile:
        sig = self.signature()
        fragment = {
            None: COHERENT,
            "coherent": COHERENT,
            "horn": HORN,
            "classical": CLASSICAL,
        }[self.pragma]
        axioms = []
        for name, raw_lhs, raw_rhs, ctx in self.raw_axioms:
            lhs = self.elab_formula(raw_lhs, ctx, sig)
            rhs = self.elab_formula(raw_rhs, ctx, sig)
            if fragment == HORN and not (is_horn(lhs) and is_horn(rhs)):
                self.fail(f"axiom {name!r} is not Horn", raw_lhs.token)
            axioms.append(Axiom(name, Sequent(ctx, lhs, rhs)))
        goal_parts = []
        for name, bound, outer, raw_matrix in self.raw_goals:
            shared = set(bound.names) & set(outer.names)
            if shared:
                self.fail(
                    f"goal {name!r} reuses bound variable(s) {sorted(shared)}",
                    raw_matrix.token,
                )
            matrix_ctx = concat(bound, outer)
            matrix = self.elab_formula(raw_matrix, matrix_ctx, sig)
            if fragment == HORN and not is_horn(matrix):
                self.fail(f"goal {name!r} is not Horn", raw_matrix.token)
            goal_parts.append((name, bound, outer, matrix))

        morley = None
        if fragment == CLASSICAL:
            ct = ClassicalTheory(sig, tuple(axioms))
            morley, matrices = morleyise(ct, [m for _, _, _, m in goal_parts])
            theory = morley.theory
            goal_parts = [
                (name, bound, outer, matrix)
                for (name, bound, outer, _), matrix in zip(goal_parts, matrices)
            ]
        else:
            theory = Theory(sig, tuple(axioms), fragment)
        goals = {
            name: ExistentialGoal(outer, bound, matrix)
            for name, bound, outer, matrix in goal_parts
        }
        return TheoryFile(fragment, theory, goals, morley)


def parse_theory(text: str) -> TheoryFile:
    """Parse and elaborate a theory file; classical files are Morleyised."""
    p = _Parser(text)
    p.parse_file()
    return p.finalize()


# -- auxiliary entry points (ad-hoc sequents and fibre-element expressions) ----


def parse_sequent(text: str, tf: TheoryFile) -> Sequent:
    """Parse ``formula |- formula ctx?`` against an elaborated theory."""
    p = _Parser(text)
    p.pragma = {HORN: "horn", COHERENT: "coherent", CLASSICAL: "classical"}[tf.fragment]
    _adopt(p, tf.theory.signature)
    lhs = p.parse_formula()
    p.expect("|-")
    rhs = p.parse_formula()
    ctx = p.parse_ctx() if p.peek().value == "[" else Context()
    if p.peek().kind != "eof":
        p.fail("trailing input after sequent")
    return Sequent(
        ctx,
        _translate(p.elab_formula(lhs, ctx, tf.theory.signature), tf),
        _translate(p.elab_formula(rhs, ctx, tf.theory.signature), tf),
    )


def parse_element_pairs(
    text: str, tf: TheoryFile, outer: Context
) -> list[tuple[Context, Formula]]:
    """Parse ``{ [binders] formula ; ... }`` into witness-context/body pairs."""
    p = _Parser(text)
    p.pragma = {HORN: "horn", COHERENT: "coherent", CLASSICAL: "classical"}[tf.fragment]
    _adopt(p, tf.theory.signature)
    p.expect("{")
    pairs: list[tuple[Context, Formula]] = []
    while p.peek().value != "}":
        witness = p.parse_ctx() if p.peek().value == "[" else Context()
        raw = p.parse_formula()
        ctx = concat(witness, outer)
        pairs.append((witness, _translate(p.elab_formula(raw, ctx, tf.theory.signature), tf)))
        if p.peek().value == ";":
            p.next()
        elif p.peek().value != "}":
            p.fail("expected ';' or '}'")
    p.expect("}")
    if p.peek().kind != "eof":
        p.fail("trailing input after element")
    return pairs


def _adopt(p: _Parser, sig: Signature) -> None:
    p.sorts = list(sig.sorts)
    p.functions = [(f.name, f.arg_sorts, f.result_sort) for f in sig.functions]
    p.relations = [(r.name, r.arg_sorts) for r in sig.relations]


def _translate(phi: Formula, tf: TheoryFile) -> Formula:
    """Eliminate negations through the file's Morleyisation table."""
    if isinstance(phi, Not):
        if tf.morley is None:
            raise EngineError("negation outside a Morleyised theory")
        return tf.morley.negate(_translate(phi.body, tf))
    if isinstance(phi, And):
        return And(phi.ctx, _translate(phi.left, tf), _translate(phi.right, tf))
    if isinstance(phi, Or):
        return Or(phi.ctx, _translate(phi.left, tf), _translate(phi.right, tf))
    return phi


# -- printing -------------------------------------------------------------------


def print_theory(tf: TheoryFile) -> str:
    """Render a file that reparses to an identical theory and goal table."""
    sig = tf.theory.signature
    lines: list[str] = []
    if tf.fragment == HORN:
        lines.append("logic horn")
    elif tf.fragment == CLASSICAL:
        lines.append("logic classical")
    for s in sig.sorts:
        lines.append(f"sort {s}")
    for f in sig.functions:
        if f.arity == 0:
            lines.append(f"const {f.name} : {f.result_sort}")
        else:
            lines.append(f"fn {f.name} : {' * '.join(f.arg_sorts)} -> {f.result_sort}")
    for r in sig.relations:
        lines.append(f"rel {r.name} : {' * '.join(r.arg_sorts)}")
    for ax in tf.theory.axioms:
        s = ax.sequent
        line = f"axiom {ax.name}: {formula_to_str(s.lhs)} |- {formula_to_str(s.rhs)}"
        if len(s.context):
            line += " " + _ctx_str(s.context)
        lines.append(line)
    for name, goal in tf.goals.items():
        binders = ", ".join(f"{n}:{s}" for n, s in goal.bound)
        line = (
            f"goal {name}: true |- exists {binders}. {formula_to_str(goal.matrix)}"
        )
        if len(goal.outer):
            line += " " + _ctx_str(goal.outer)
        lines.append(line)
    return "\n".join(lines) + "\n"


def _ctx_str(ctx: Context) -> str:
    return "[" + ", ".join(f"{n}:{s}" for n, s in ctx) + "]"
