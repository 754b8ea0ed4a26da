"""Finite-set semantics: the powerset doctrine over finite carriers.

A model interprets each sort as an index set 0..n-1, functions as total
tables, relations as sets of index tuples.  ``evaluate`` sends a formula in
context to the set of satisfying environment tuples; this is the doctrine
morphism of a model, homomorphic in all connectives and natural in
substitution.  Exhaustive small-model enumeration backs the soundness
oracle of the test suite.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .errors import EnumerationLimitError, SortError
from .logic import And, Bot, Eq, Formula, Or, Rel, Sequent, Theory, Top
from .terms import App, Context, Signature, Term, Var

DEFAULT_TABLE_BITS = 20
TABLE_BITS_ENV = "DOCTRINA_MAX_TABLE_BITS"


@dataclass(frozen=True)
class FiniteModel:
    signature: Signature
    carriers: tuple[tuple[str, int], ...]
    functions: tuple[tuple[str, tuple[tuple[tuple[int, ...], int], ...]], ...]
    relations: tuple[tuple[str, frozenset[tuple[int, ...]]], ...]

    def carrier(self, sort: str) -> int:
        for s, n in self.carriers:
            if s == sort:
                return n
        raise SortError(f"no carrier for sort {sort}")

    def function_table(self, name: str) -> dict[tuple[int, ...], int]:
        for f, table in self.functions:
            if f == name:
                return dict(table)
        raise SortError(f"no table for function {name}")

    def relation_table(self, name: str) -> frozenset[tuple[int, ...]]:
        for r, table in self.relations:
            if r == name:
                return table
        raise SortError(f"no table for relation {name}")

    @classmethod
    def make(cls, signature, carriers, functions, relations) -> "FiniteModel":
        return cls(
            signature,
            tuple(sorted(carriers.items())),
            tuple(
                (name, tuple(sorted(table.items())))
                for name, table in sorted(functions.items())
            ),
            tuple((name, frozenset(rows)) for name, rows in sorted(relations.items())),
        )


def validate(model: FiniteModel) -> None:
    """Check totality and sort-correctness of every table."""
    sig = model.signature
    carriers = dict(model.carriers)
    for s in sig.sorts:
        if s not in carriers or carriers[s] < 0:
            raise SortError(f"missing or negative carrier for sort {s}")
    tables = {name: dict(t) for name, t in model.functions}
    for f in sig.functions:
        table = tables.get(f.name)
        if table is None:
            raise SortError(f"missing table for function {f.name}")
        domain = list(itertools.product(*[range(carriers[s]) for s in f.arg_sorts]))
        for args in domain:
            if args not in table:
                raise SortError(f"table for {f.name} is not total at {args}")
            if not 0 <= table[args] < carriers[f.result_sort]:
                raise SortError(f"table for {f.name} maps {args} outside the carrier")
        if len(table) != len(domain):
            raise SortError(f"table for {f.name} has spurious entries")
    rels = dict(model.relations)
    for r in sig.relations:
        rows = rels.get(r.name)
        if rows is None:
            raise SortError(f"missing table for relation {r.name}")
        for row in rows:
            if len(row) != r.arity or any(
                not 0 <= v < carriers[s] for v, s in zip(row, r.arg_sorts)
            ):
                raise SortError(f"row {row} of {r.name} is out of range")


def _eval_term(model: FiniteModel, t: Term, env: tuple[int, ...]) -> int:
    if isinstance(t, Var):
        return env[t.index]
    table = model.function_table(t.symbol)
    return table[tuple(_eval_term(model, a, env) for a in t.args)]


def environments(model: FiniteModel, ctx: Context) -> Iterator[tuple[int, ...]]:
    return itertools.product(*[range(model.carrier(s)) for s in ctx.sorts])


def evaluate(model: FiniteModel, phi: Formula) -> frozenset[tuple[int, ...]]:
    """The set of environment tuples over phi's context satisfying phi.

    Over the empty context the full product is the one-point set {()}.
    """
    if isinstance(phi, Top):
        return frozenset(environments(model, phi.ctx))
    if isinstance(phi, Bot):
        return frozenset()
    if isinstance(phi, And):
        return evaluate(model, phi.left) & evaluate(model, phi.right)
    if isinstance(phi, Or):
        return evaluate(model, phi.left) | evaluate(model, phi.right)
    if isinstance(phi, Eq):
        return frozenset(
            e
            for e in environments(model, phi.ctx)
            if _eval_term(model, phi.lhs, e) == _eval_term(model, phi.rhs, e)
        )
    if isinstance(phi, Rel):
        table = model.relation_table(phi.symbol)
        return frozenset(
            e
            for e in environments(model, phi.ctx)
            if tuple(_eval_term(model, a, e) for a in phi.args) in table
        )
    raise SortError(f"cannot evaluate {type(phi).__name__}")


def sequent_holds(model: FiniteModel, s: Sequent) -> bool:
    return evaluate(model, s.lhs) <= evaluate(model, s.rhs)


def satisfies(model: FiniteModel, theory: Theory) -> bool:
    """True iff every axiom's lhs-set is contained in its rhs-set."""
    return all(sequent_holds(model, a.sequent) for a in theory.axioms)


@dataclass
class ModelInterpretation:
    """A model read as a doctrine morphism, with memoised evaluation."""

    model: FiniteModel
    _cache: dict[Formula, frozenset[tuple[int, ...]]] = field(default_factory=dict)

    def eval(self, phi: Formula) -> frozenset[tuple[int, ...]]:
        out = self._cache.get(phi)
        if out is None:
            out = evaluate(self.model, phi)
            self._cache[phi] = out
        return out

    def sequent_holds(self, s: Sequent) -> bool:
        return self.eval(s.lhs) <= self.eval(s.rhs)


def _table_bits(sig: Signature, sizes: dict[str, int]) -> float:
    bits = 0.0
    for f in sig.functions:
        entries = math.prod(sizes[s] for s in f.arg_sorts)
        bits += entries * math.log2(max(sizes[f.result_sort], 1))
    for r in sig.relations:
        bits += math.prod(sizes[s] for s in r.arg_sorts)
    return bits


def enumerate_models(
    sig: Signature, max_size: int, max_table_bits: Optional[float] = None
) -> Iterator[FiniteModel]:
    """All models with carrier sizes 1..max_size per sort, deterministically.

    Size 0 is excluded: function tables must be total, and the closed-form
    model counts used by the test suite fix the range at 1..max_size.  Raises
    EnumerationLimitError when some size assignment would exceed the table
    cap (parameter, else the DOCTRINA_MAX_TABLE_BITS environment variable).
    """
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    if max_table_bits is None:
        max_table_bits = float(os.environ.get(TABLE_BITS_ENV, DEFAULT_TABLE_BITS))
    for size_combo in itertools.product(range(1, max_size + 1), repeat=len(sig.sorts)):
        sizes = dict(zip(sig.sorts, size_combo))
        bits = _table_bits(sig, sizes)
        if bits > max_table_bits:
            raise EnumerationLimitError(
                f"size assignment {sizes} needs {bits:.0f} table bits"
                f" (cap {max_table_bits:.0f})"
            )
        yield from _models_of_size(sig, sizes)


def _models_of_size(sig: Signature, sizes: dict[str, int]) -> Iterator[FiniteModel]:
    carriers = tuple(sorted(sizes.items()))
    fn_domains = [
        list(itertools.product(*[range(sizes[s]) for s in f.arg_sorts]))
        for f in sig.functions
    ]
    fn_choices = [
        itertools.product(range(sizes[f.result_sort]), repeat=len(dom))
        for f, dom in zip(sig.functions, fn_domains)
    ]
    rel_rows = [
        list(itertools.product(*[range(sizes[s]) for s in r.arg_sorts]))
        for r in sig.relations
    ]
    for fn_combo in itertools.product(*fn_choices):
        functions = tuple(
            (f.name, tuple(zip(dom, values)))
            for f, dom, values in zip(sig.functions, fn_domains, fn_combo)
        )
        for rel_masks in itertools.product(
            *[range(1 << len(rows)) for rows in rel_rows]
        ):
            relations = tuple(
                (
                    r.name,
                    frozenset(
                        row for i, row in enumerate(rows) if mask & (1 << i)
                    ),
                )
                for r, rows, mask in zip(sig.relations, rel_rows, rel_masks)
            )
            yield FiniteModel(sig, carriers, functions, relations)


def find_countermodel(
    theory: Theory, sequent: Sequent, max_size: int, max_table_bits: Optional[float] = None
) -> Optional[FiniteModel]:
    """First enumerated model of the theory that violates the sequent, if any."""
    for model in enumerate_models(theory.signature, max_size, max_table_bits):
        if satisfies(model, theory) and not sequent_holds(model, sequent):
            return model
    return None


def image_project(
    rows: frozenset[tuple[int, ...]], drop: int
) -> frozenset[tuple[int, ...]]:
    """Image along the product projection discarding the first ``drop`` coordinates."""
    return frozenset(row[drop:] for row in rows)
