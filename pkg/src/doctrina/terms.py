"""Multi-sorted signatures and the category of contexts and term tuples.

Objects are finite variable contexts, morphisms are tuples of well-sorted
terms, and composition is simultaneous substitution.  The empty context is
the terminal object and context concatenation (left operand first) is the
finite product.  Variables are positional indices into their context;
surface names are carried only for printing and are ignored by equality.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Union

from .errors import ContextMismatch, SortError


@dataclass(frozen=True)
class FunctionSymbol:
    name: str
    arg_sorts: tuple[str, ...]
    result_sort: str

    @property
    def arity(self) -> int:
        return len(self.arg_sorts)


@dataclass(frozen=True)
class RelationSymbol:
    name: str
    arg_sorts: tuple[str, ...]

    @property
    def arity(self) -> int:
        return len(self.arg_sorts)


@dataclass(frozen=True)
class Signature:
    """Declared sorts, function symbols and relation symbols.

    Constants are 0-ary function symbols.  Declaration order is significant:
    it fixes the deterministic enumeration order used everywhere else.
    """

    sorts: tuple[str, ...] = ()
    functions: tuple[FunctionSymbol, ...] = ()
    relations: tuple[RelationSymbol, ...] = ()

    def __post_init__(self):
        if len(set(self.sorts)) != len(self.sorts):
            raise SortError("duplicate sort names")
        if len({f.name for f in self.functions}) != len(self.functions):
            raise SortError("duplicate function names")
        if len({r.name for r in self.relations}) != len(self.relations):
            raise SortError("duplicate relation names")
        declared = set(self.sorts)
        for f in self.functions:
            for s in (*f.arg_sorts, f.result_sort):
                if s not in declared:
                    raise SortError(f"function {f.name} references undeclared sort {s}")
        for r in self.relations:
            for s in r.arg_sorts:
                if s not in declared:
                    raise SortError(f"relation {r.name} references undeclared sort {s}")

    @classmethod
    def make(
        cls,
        sorts: Iterable[str],
        functions: Iterable[tuple[str, Sequence[str], str]] = (),
        relations: Iterable[tuple[str, Sequence[str]]] = (),
    ) -> "Signature":
        return cls(
            tuple(sorts),
            tuple(FunctionSymbol(n, tuple(a), r) for n, a, r in functions),
            tuple(RelationSymbol(n, tuple(a)) for n, a in relations),
        )

    def function(self, name: str) -> FunctionSymbol:
        for f in self.functions:
            if f.name == name:
                return f
        raise SortError(f"unknown function symbol {name}")

    def has_function(self, name: str) -> bool:
        return any(f.name == name for f in self.functions)

    def relation(self, name: str) -> RelationSymbol:
        for r in self.relations:
            if r.name == name:
                return r
        raise SortError(f"unknown relation symbol {name}")

    def has_relation(self, name: str) -> bool:
        return any(r.name == name for r in self.relations)


@dataclass(frozen=True)
class Context:
    """An ordered list of typed variables.

    Equality and hashing look only at the sort list; the variable names are
    printing hints, freshened on concatenation (x, x', x'', ...).
    """

    sorts: tuple[str, ...] = ()
    names: tuple[str, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if not self.names and self.sorts:
            object.__setattr__(
                self, "names", tuple(f"x{i + 1}" for i in range(len(self.sorts)))
            )
        if len(self.names) != len(self.sorts):
            raise SortError("context names/sorts length mismatch")
        if len(set(self.names)) != len(self.names):
            raise SortError(f"context variable names not distinct: {self.names}")

    @classmethod
    def make(cls, bindings: Iterable[tuple[str, str]]) -> "Context":
        pairs = tuple(bindings)
        return cls(tuple(s for _, s in pairs), tuple(n for n, _ in pairs))

    @property
    def bindings(self) -> tuple[tuple[str, str], ...]:
        return tuple(zip(self.names, self.sorts))

    def __len__(self) -> int:
        return len(self.sorts)

    def __iter__(self) -> Iterator[tuple[str, str]]:
        return iter(self.bindings)


EMPTY = Context()


def concat(left: Context, right: Context) -> Context:
    """Product of contexts: left operand first, right names freshened."""
    used = set(left.names)
    names = list(left.names)
    for n in right.names:
        while n in used:
            n = n + "'"
        used.add(n)
        names.append(n)
    return Context(left.sorts + right.sorts, tuple(names))


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class App:
    symbol: str
    args: tuple["Term", ...] = ()


Term = Union[Var, App]


def term_depth(t: Term) -> int:
    """Variables have depth 0; a constant (0-ary application) has depth 1."""
    if isinstance(t, Var):
        return 0
    return 1 + max((term_depth(a) for a in t.args), default=0)


def term_sort(sig: Signature, ctx: Context, t: Term) -> str:
    """Return the sort of ``t`` over ``ctx``, raising SortError if ill-sorted."""
    if isinstance(t, Var):
        if not 0 <= t.index < len(ctx):
            raise SortError(f"variable index {t.index} out of context of length {len(ctx)}")
        return ctx.sorts[t.index]
    f = sig.function(t.symbol)
    if len(t.args) != f.arity:
        raise SortError(f"{t.symbol} expects {f.arity} arguments, got {len(t.args)}")
    for a, expected in zip(t.args, f.arg_sorts):
        actual = term_sort(sig, ctx, a)
        if actual != expected:
            raise SortError(f"argument of {t.symbol} has sort {actual}, expected {expected}")
    return f.result_sort


def subterms(t: Term) -> Iterator[Term]:
    """All subterms of ``t``, innermost first."""
    if isinstance(t, App):
        for a in t.args:
            yield from subterms(a)
    yield t


@dataclass(frozen=True)
class TermTuple:
    """A morphism domain -> codomain: one term over the domain per codomain binding."""

    domain: Context
    codomain: Context
    components: tuple[Term, ...]

    def __post_init__(self):
        if len(self.components) != len(self.codomain):
            raise ContextMismatch(
                f"tuple has {len(self.components)} components for a codomain of length {len(self.codomain)}"
            )


def check_tuple(sig: Signature, f: TermTuple) -> None:
    for t, expected in zip(f.components, f.codomain.sorts):
        actual = term_sort(sig, f.domain, t)
        if actual != expected:
            raise SortError(f"component has sort {actual}, expected {expected}")


def tuple_depth(f: TermTuple) -> int:
    return max((term_depth(t) for t in f.components), default=0)


def identity(ctx: Context) -> TermTuple:
    return TermTuple(ctx, ctx, tuple(Var(i) for i in range(len(ctx))))


def terminal_map(ctx: Context) -> TermTuple:
    """The unique morphism into the empty context."""
    return TermTuple(ctx, EMPTY, ())


def subst_term(t: Term, components: tuple[Term, ...]) -> Term:
    if isinstance(t, Var):
        return components[t.index]
    return App(t.symbol, tuple(subst_term(a, components) for a in t.args))


def compose(g: TermTuple, f: TermTuple) -> TermTuple:
    """g after f: substitute the components of f for the variables of g."""
    if f.codomain != g.domain:
        raise ContextMismatch(
            f"cannot compose: codomain {f.codomain.sorts} != domain {g.domain.sorts}"
        )
    return TermTuple(
        f.domain, g.codomain, tuple(subst_term(t, f.components) for t in g.components)
    )


def product(c: Context, d: Context) -> tuple[Context, TermTuple, TermTuple]:
    """Concatenated context with its two projections (as variable tuples)."""
    prod = concat(c, d)
    p1 = TermTuple(prod, c, tuple(Var(i) for i in range(len(c))))
    p2 = TermTuple(prod, d, tuple(Var(len(c) + i) for i in range(len(d))))
    return prod, p1, p2


def pairing(f: TermTuple, g: TermTuple) -> TermTuple:
    """The mediating morphism <f, g> into the product of the codomains."""
    if f.domain != g.domain:
        raise ContextMismatch("pairing requires a shared domain")
    return TermTuple(f.domain, concat(f.codomain, g.codomain), f.components + g.components)


def select(ctx: Context, indices: Sequence[int], codomain: Context) -> TermTuple:
    """Projection-style tuple picking the given positions of ``ctx``."""
    return TermTuple(ctx, codomain, tuple(Var(i) for i in indices))


def _term_layers(
    sig: Signature, ctx: Context, max_depth: int
) -> dict[str, list[list[Term]]]:
    """layers[sort][d] lists the terms of exact depth d, in canonical order."""
    layers: dict[str, list[list[Term]]] = {s: [[] for _ in range(max_depth + 1)] for s in sig.sorts}
    for i, s in enumerate(ctx.sorts):
        layers[s][0].append(Var(i))
    for d in range(1, max_depth + 1):
        for f in sig.functions:
            if f.arity == 0:
                if d == 1:
                    layers[f.result_sort][1].append(App(f.name))
                continue
            pools = [
                [(t, dd) for dd in range(d) for t in layers[s][dd]]
                for s in f.arg_sorts
            ]
            for combo in itertools.product(*pools):
                if max(dd for _, dd in combo) == d - 1:
                    layers[f.result_sort][d].append(App(f.name, tuple(t for t, _ in combo)))
    return layers


def enumerate_terms(
    sig: Signature, ctx: Context, sort: str, max_depth: int
) -> Iterator[Term]:
    """All terms of the given sort over ``ctx`` with depth <= max_depth.

    Deterministic depth-lexicographic order: by depth, then function symbol
    declaration order, then argument order.
    """
    layers = _term_layers(sig, ctx, max_depth)
    for d in range(max_depth + 1):
        yield from layers[sort][d]


def enumerate_tuples(
    sig: Signature, domain: Context, codomain: Context, max_depth: int
) -> Iterator[TermTuple]:
    """All well-sorted tuples domain -> codomain with component depth <= max_depth.

    Tuples are emitted grouped by their maximal component depth, without
    duplicates; the stream is finite for a finite signature and empty when
    some codomain sort is uninhabited at the bound.
    """
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    if len(codomain) == 0:
        yield terminal_map(domain)
        return
    layers = _term_layers(sig, domain, max_depth)
    for bound in range(max_depth + 1):
        pools = [
            [(t, dd) for dd in range(bound + 1) for t in layers[s][dd]]
            for s in codomain.sorts
        ]
        for combo in itertools.product(*pools):
            if max(dd for _, dd in combo) == bound:
                yield TermTuple(domain, codomain, tuple(t for t, _ in combo))


def term_to_str(t: Term, ctx: Context) -> str:
    if isinstance(t, Var):
        return ctx.names[t.index]
    if not t.args:
        return t.symbol
    return f"{t.symbol}({', '.join(term_to_str(a, ctx) for a in t.args)})"


def tuple_to_str(f: TermTuple) -> str:
    return f"({', '.join(term_to_str(t, f.domain) for t in f.components)})"


def context_to_str(ctx: Context) -> str:
    return "[" + ", ".join(f"{n}:{s}" for n, s in ctx) + "]"
