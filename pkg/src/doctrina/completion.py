"""The free existential completion of the syntactic doctrine of a universal theory.

A fibre element over a base context c is a finite set of pairs (d, x) of a
witness context d and a quantifier-free formula x over d x c, read as the
existential formula \\/_i exists d_i. x_i.  The order is searched exactly as
it is defined: a <= b demands, per pair of a, witnessing arrows into pairs
of b that commute with the projections to c and whose pulled-back bodies
cover the pair's body disjunctively; the base-doctrine order is the
``entails`` oracle.  In Horn mode elements are single pairs with Horn
bodies, recovering the meet-semilattice completion.

Product contexts are stored flat (witness context first), so the
reassociation isomorphisms are identities and the triangle condition holds
by construction: every candidate arrow is pairing(t, projection-to-base).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .errors import ContextMismatch, FragmentError
from .logic import (
    EntailmentVerdict,
    Eq,
    Formula,
    HORN,
    SaturationBudget,
    Sequent,
    Theory,
    Top,
    conj,
    conj_all,
    disj_all,
    entails,
    flatten_or,
    formula_key,
    is_horn,
    normalize,
    substitute,
    well_formed,
)
from .semantics import ModelInterpretation, image_project
from .terms import (
    EMPTY,
    Context,
    TermTuple,
    Var,
    compose,
    concat,
    enumerate_tuples,
    pairing,
    select,
)


@dataclass(frozen=True)
class ExPair:
    witness: Context
    body: Formula  # over witness x base


@dataclass(frozen=True)
class ExElement:
    base_context: Context
    pairs: tuple[ExPair, ...]  # normalized bodies, deduplicated, sorted


@dataclass(frozen=True)
class PairWitness:
    """Arrows covering one left pair: (target pair index, r: d_i x c -> e_j x c)."""

    arrows: tuple[tuple[int, TermTuple], ...]
    verdict: EntailmentVerdict


@dataclass(frozen=True)
class LeqWitness:
    per_pair: tuple[PairWitness, ...]


def _pair_sort_key(p: ExPair):
    return (len(p.witness.sorts), p.witness.sorts, formula_key(p.body))


class Completion:
    """The fibred interface of P-exists over a fixed universal theory."""

    def __init__(self, theory: Theory):
        self.theory = theory
        self.horn = theory.fragment == HORN

    # -- element construction -------------------------------------------------

    def element(
        self, base_context: Context, pairs: Iterable[tuple[Context, Formula]]
    ) -> ExElement:
        """Normalize, validate and canonically order a set of pairs."""
        built = []
        for witness, body in pairs:
            expected = concat(witness, base_context)
            if body.ctx != expected:
                raise ContextMismatch(
                    f"body context {body.ctx.sorts} != witness x base {expected.sorts}"
                )
            well_formed(self.theory.signature, body)
            built.append(ExPair(witness, normalize(body)))
        dedup: dict[tuple, ExPair] = {}
        for p in built:
            dedup.setdefault(_pair_sort_key(p), p)
        element = ExElement(
            base_context, tuple(sorted(dedup.values(), key=_pair_sort_key))
        )
        if self.horn:
            if len(element.pairs) != 1:
                raise FragmentError("Horn-mode elements are single pairs")
            if not is_horn(element.pairs[0].body):
                raise FragmentError("Horn-mode bodies must be Horn formulas")
        return element

    def unit(self, phi: Formula) -> ExElement:
        """The singleton pair with the empty witness context (the paper's eta)."""
        return self.element(phi.ctx, [(EMPTY, phi)])

    def top(self, base_context: Context) -> ExElement:
        return self.unit(Top(base_context))

    def bottom(self, base_context: Context) -> ExElement:
        return self.element(base_context, [])

    # -- the order -------------------------------------------------------------

    def leq(
        self,
        a: ExElement,
        b: ExElement,
        depth: int,
        budget: SaturationBudget = SaturationBudget(),
    ) -> Optional[LeqWitness]:
        """Search for witnessing arrows at the given term-depth bound.

        For each pair (d_i, x_i) of ``a`` every candidate arrow into every
        pair of ``b`` is collected and the single disjunction of all
        pulled-back bodies is handed to the entailment oracle; the witness
        keeps, per pair, the arrows whose disjuncts the trace used.  Sound
        for any depth; complete in the limit under iterative deepening.
        """
        if a.base_context != b.base_context:
            raise ContextMismatch("leq requires a shared base context")
        c = a.base_context
        per_pair = []
        for left in a.pairs:
            dom = concat(left.witness, c)
            base_proj = select(
                dom, range(len(left.witness), len(dom)), c
            )
            candidates: list[tuple[int, TermTuple, Formula]] = []
            for j, right in enumerate(b.pairs):
                for t in enumerate_tuples(
                    self.theory.signature, dom, right.witness, depth
                ):
                    r = pairing(t, base_proj)
                    candidates.append((j, r, substitute(right.body, r)))
            goal = disj_all(dom, [body for _, _, body in candidates])
            verdict = entails(self.theory, Sequent(dom, left.body, goal), budget)
            if not verdict.proved:
                return None
            # the oracle reports indices into the fully flattened disjunction;
            # coherent bodies may themselves be disjunctions, so map back
            owner: list[int] = []
            for idx, (_, _, body) in enumerate(candidates):
                owner.extend([idx] * len(flatten_or(body)))
            used = sorted({owner[k] for k in verdict.used_rhs_disjuncts})
            arrows = tuple((candidates[j][0], candidates[j][1]) for j in used)
            per_pair.append(PairWitness(arrows, verdict))
        return LeqWitness(tuple(per_pair))

    def equivalent(
        self,
        a: ExElement,
        b: ExElement,
        depth: int,
        budget: SaturationBudget = SaturationBudget(),
    ) -> bool:
        return (
            self.leq(a, b, depth, budget) is not None
            and self.leq(b, a, depth, budget) is not None
        )

    # -- lattice structure -----------------------------------------------------

    def meet(self, a: ExElement, b: ExElement) -> ExElement:
        """Pairwise product of witness contexts with both bodies pulled back."""
        if a.base_context != b.base_context:
            raise ContextMismatch("meet requires a shared base context")
        c = a.base_context
        pairs = []
        for left in a.pairs:
            for right in b.pairs:
                witness = concat(left.witness, right.witness)
                full = concat(witness, c)
                nl, nr = len(left.witness), len(right.witness)
                # projection away from the right witness factor: d x e x c -> d x c
                to_left = select(
                    full,
                    [*range(nl), *range(nl + nr, len(full))],
                    concat(left.witness, c),
                )
                # projection away from the left witness factor: d x e x c -> e x c
                to_right = select(
                    full,
                    [*range(nl, nl + nr), *range(nl + nr, len(full))],
                    concat(right.witness, c),
                )
                pairs.append(
                    (
                        witness,
                        conj(
                            substitute(left.body, to_left),
                            substitute(right.body, to_right),
                        ),
                    )
                )
        return self.element(c, pairs)

    def join(self, a: ExElement, b: ExElement) -> ExElement:
        """Set union of pairs (coherent mode only)."""
        if self.horn:
            raise FragmentError("join is not available in Horn mode")
        if a.base_context != b.base_context:
            raise ContextMismatch("join requires a shared base context")
        return self.element(
            a.base_context,
            [(p.witness, p.body) for p in a.pairs + b.pairs],
        )

    # -- doctrine structure ------------------------------------------------------

    def subst_ex(self, a: ExElement, f: TermTuple) -> ExElement:
        """Transition map along f: c' -> c, i.e. pulling each body back along
        1_d x f."""
        if f.codomain != a.base_context:
            raise ContextMismatch("subst_ex requires codomain(f) = base context")
        pairs = []
        for p in a.pairs:
            d = p.witness
            dom = concat(d, f.domain)
            keep_d = select(dom, range(len(d)), d)
            shift_f = compose(f, select(dom, range(len(d), len(dom)), f.domain))
            one_d_times_f = pairing(keep_d, shift_f)
            pairs.append((d, substitute(p.body, one_d_times_f)))
        return self.element(f.domain, pairs)

    def exists_along(self, a: ExElement, d: Context) -> ExElement:
        """Left adjoint to substitution along the projection d x c -> c.

        Witness contexts absorb d; bodies are unchanged because product
        contexts are flat.
        """
        base = a.base_context
        if base.sorts[: len(d)] != d.sorts:
            raise ContextMismatch(
                f"base context {base.sorts} is not a product with left factor {d.sorts}"
            )
        c = Context(base.sorts[len(d):], base.names[len(d):])
        pairs = []
        for p in a.pairs:
            # flat contexts: e x (d x c) and (e x d) x c are the same sort list,
            # so the body transfers unchanged
            pairs.append((concat(p.witness, d), p.body))
        return self.element(c, pairs)

    def equality_predicate(self, d: Context, ambient: Context = EMPTY) -> ExElement:
        """The element {(1, delta_d)} over ambient x d x d: componentwise equality."""
        base = concat(concat(ambient, d), d)
        n = len(ambient)
        k = len(d)
        atoms = [Eq(base, Var(n + i), Var(n + k + i)) for i in range(k)]
        return self.element(base, [(EMPTY, conj_all(base, atoms))])

    def extend_morphism(
        self, interp: ModelInterpretation, a: ExElement
    ) -> frozenset[tuple[int, ...]]:
        """The unique existential extension of a model along the unit.

        Each body is evaluated as a subset of the interpretation of d_i x c,
        the d_i coordinates are projected away (the powerset left adjoint),
        and the results are unioned.
        """
        out: frozenset[tuple[int, ...]] = frozenset()
        for p in a.pairs:
            rows = interp.eval(p.body)
            out |= image_project(rows, len(p.witness))
        return out
