"""Herbrand witness extraction and the classical front end via Morleyisation.

An existential goal ``|-_c exists d. matrix`` is decided by asking whether
the top element of the completed fibre over c lies below {(d, matrix)}; the
witnessing arrows of a successful comparison are exactly the Herbrand terms,
and the derived quantifier-free sequent is re-verified independently before
a certificate is issued.  Classical input is reduced to coherent logic by
replacing negated atoms with paired relation symbols satisfying explosion
and excluded middle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from .completion import Completion
from .errors import FragmentError, TheoryError
from .logic import (
    And,
    Axiom,
    Bot,
    CLASSICAL,
    EntailmentVerdict,
    Eq,
    Formula,
    HORN,
    Or,
    Rel,
    SaturationBudget,
    Sequent,
    Theory,
    Top,
    conj_all,
    disj_all,
    entails,
    formula_to_str,
    is_horn,
    sequent_to_str,
    substitute,
    well_formed,
)
from .terms import (
    Context,
    RelationSymbol,
    Signature,
    TermTuple,
    Var,
    concat,
    enumerate_tuples,
    identity,
    pairing,
    select,
    term_sort,
    term_to_str,
)


@dataclass(frozen=True)
class Not(Formula):
    """Classical negation; legal only in Morleyisation input."""

    body: Formula


@dataclass(frozen=True)
class ClassicalTheory:
    """A universal classical theory: axioms may use negation."""

    signature: Signature
    axioms: tuple[Axiom, ...]


@dataclass(frozen=True)
class MorleyisedTheory:
    theory: Theory
    rel_pairs: tuple[tuple[str, str], ...]  # relation name -> paired symbol
    eq_pairs: tuple[tuple[str, str], ...]  # sort name -> paired disequality symbol

    def negated_relation(self, name: str) -> str:
        for r, n in self.rel_pairs:
            if r == name:
                return n
        raise FragmentError(f"no Morleyisation pair for relation {name}")

    def negated_equality(self, sort: str) -> str:
        for s, n in self.eq_pairs:
            if s == sort:
                return n
        raise FragmentError(f"no Morleyisation pair for equality at sort {sort}")

    def negate(self, phi: Formula) -> Formula:
        """The paired-symbol instance standing for ``not phi`` (atoms only)."""
        if isinstance(phi, Rel):
            return Rel(phi.ctx, self.negated_relation(phi.symbol), phi.args)
        if isinstance(phi, Eq):
            sort = term_sort(self.theory.signature, phi.ctx, phi.lhs)
            return Rel(phi.ctx, self.negated_equality(sort), (phi.lhs, phi.rhs))
        if isinstance(phi, Top):
            return Bot(phi.ctx)
        if isinstance(phi, Bot):
            return Top(phi.ctx)
        raise FragmentError(
            f"negation under {type(phi).__name__} is not supported; "
            "negate atoms or negations only"
        )


class _Morleyiser:
    def __init__(self, sig: Signature):
        self.sig = sig
        self.taken = (
            {s for s in sig.sorts}
            | {f.name for f in sig.functions}
            | {r.name for r in sig.relations}
        )
        self.new_relations: list[RelationSymbol] = []
        self.schema_axioms: list[Axiom] = []
        self.rel_pairs: dict[str, str] = {}
        self.eq_pairs: dict[str, str] = {}

    def _fresh(self, base: str) -> str:
        name = base
        while name in self.taken:
            name = "N" + name
        self.taken.add(name)
        return name

    def _add_pair(self, pos_atom_builder, arg_sorts: tuple[str, ...], name: str) -> None:
        ctx = Context(arg_sorts)
        args = tuple(Var(i) for i in range(len(arg_sorts)))
        pos = pos_atom_builder(ctx, args)
        neg = Rel(ctx, name, args)
        self.schema_axioms.append(
            Axiom(f"{name}_contra", Sequent(ctx, And(ctx, pos, neg), Bot(ctx)))
        )
        self.schema_axioms.append(
            Axiom(f"{name}_em", Sequent(ctx, Top(ctx), Or(ctx, pos, neg)))
        )

    def pair_for_relation(self, rel: str) -> str:
        if rel not in self.rel_pairs:
            r = self.sig.relation(rel) if self.sig.has_relation(rel) else None
            if r is None:
                r = next(x for x in self.new_relations if x.name == rel)
            name = self._fresh("N" + rel)
            self.new_relations.append(RelationSymbol(name, r.arg_sorts))
            self.rel_pairs[rel] = name
            self._add_pair(
                lambda ctx, args: Rel(ctx, rel, args), r.arg_sorts, name
            )
        return self.rel_pairs[rel]

    def pair_for_equality(self, sort: str) -> str:
        if sort not in self.eq_pairs:
            name = self._fresh(f"Neq_{sort}")
            self.new_relations.append(RelationSymbol(name, (sort, sort)))
            self.eq_pairs[sort] = name
            self._add_pair(
                lambda ctx, args: Eq(ctx, args[0], args[1]), (sort, sort), name
            )
        return self.eq_pairs[sort]

    def translate(self, phi: Formula) -> Formula:
        if isinstance(phi, (Top, Bot, Eq, Rel)):
            return phi
        if isinstance(phi, And):
            return And(phi.ctx, self.translate(phi.left), self.translate(phi.right))
        if isinstance(phi, Or):
            return Or(phi.ctx, self.translate(phi.left), self.translate(phi.right))
        if isinstance(phi, Not):
            inner = self.translate(phi.body)
            if isinstance(inner, Top):
                return Bot(phi.ctx)
            if isinstance(inner, Bot):
                return Top(phi.ctx)
            if isinstance(inner, Rel):
                return Rel(phi.ctx, self.pair_for_relation(inner.symbol), inner.args)
            if isinstance(inner, Eq):
                sort = term_sort(self._signature(), phi.ctx, inner.lhs)
                return Rel(
                    phi.ctx, self.pair_for_equality(sort), (inner.lhs, inner.rhs)
                )
            raise FragmentError(
                f"negation under {type(inner).__name__} is not supported"
            )
        raise FragmentError(f"unsupported connective {type(phi).__name__}")

    def _signature(self) -> Signature:
        return Signature(
            self.sig.sorts,
            self.sig.functions,
            self.sig.relations + tuple(self.new_relations),
        )


def morleyise(
    ct: ClassicalTheory, extra_formulas: Iterable[Formula] = ()
) -> tuple[MorleyisedTheory, tuple[Formula, ...]]:
    """Replace negated atoms by paired relation symbols with explosion and
    excluded-middle axioms; idempotent on negation-free input.

    ``extra_formulas`` (e.g. goal matrices) are translated with the same
    symbol table and returned alongside the theory.
    """
    m = _Morleyiser(ct.signature)
    translated_axioms = []
    for ax in ct.axioms:
        lhs = m.translate(ax.sequent.lhs)
        rhs = m.translate(ax.sequent.rhs)
        translated_axioms.append(
            Axiom(ax.name, Sequent(ax.sequent.context, lhs, rhs))
        )
    extras = tuple(m.translate(phi) for phi in extra_formulas)
    theory = Theory(
        m._signature(),
        tuple(m.schema_axioms) + tuple(translated_axioms),
        CLASSICAL,
    )
    return (
        MorleyisedTheory(
            theory,
            tuple(sorted(m.rel_pairs.items())),
            tuple(sorted(m.eq_pairs.items())),
        ),
        extras,
    )


@dataclass(frozen=True)
class ExistentialGoal:
    """Encodes ``|-_outer exists bound. matrix`` with matrix over bound x outer."""

    outer: Context
    bound: Context
    matrix: Formula

    def __post_init__(self):
        expected = concat(self.bound, self.outer)
        if self.matrix.ctx != expected:
            raise TheoryError(
                f"matrix context {self.matrix.ctx.sorts} != bound x outer {expected.sorts}"
            )


@dataclass(frozen=True)
class HerbrandCertificate:
    witnesses: tuple[TermTuple, ...]  # outer -> bound, closed when outer is empty
    derived_sequent: Sequent
    trace: tuple
    depth_used: int
    budget: SaturationBudget

    @property
    def n(self) -> int:
        return len(self.witnesses)


def default_schedule(
    max_depth: int, base: SaturationBudget = SaturationBudget()
) -> Iterator[tuple[int, SaturationBudget]]:
    """Dovetail term depth against saturation budget:
    (0, b), (1, b), (1, 2b), (2, b), (2, 2b), (2, 4b), ..."""
    for d in range(max_depth + 1):
        for i in range(d + 1):
            yield d, base.scaled(2**i)


def _validate_goal(theory: Theory, goal: ExistentialGoal) -> None:
    well_formed(theory.signature, goal.matrix)
    if theory.fragment == HORN and not is_horn(goal.matrix):
        raise FragmentError("Horn theories take Horn goal matrices")


def _derived_sequent(
    goal: ExistentialGoal, witnesses: Iterable[TermTuple]
) -> Sequent:
    c = goal.outer
    # matrix(t(y), y): substitute along <t, id_c>
    disjuncts = [
        substitute(goal.matrix, pairing(w, identity(c))) for w in witnesses
    ]
    return Sequent(c, Top(c), disj_all(c, disjuncts))


def find_witnesses(
    theory: Theory,
    goal: ExistentialGoal,
    schedule: Optional[Iterable[tuple[int, SaturationBudget]]] = None,
    max_depth: int = 4,
    budget: SaturationBudget = SaturationBudget(),
) -> Optional[HerbrandCertificate]:
    """Iterative-deepening Herbrand search.

    On success the witness list is minimised greedily against the entailment
    trace and the derived sequent is re-verified from a cold start; None
    means every schedule stage was exhausted.  Semi-complete: a provable
    goal succeeds at some stage of an unbounded schedule.
    """
    _validate_goal(theory, goal)
    if schedule is None:
        schedule = default_schedule(max_depth, budget)
    comp = Completion(theory)
    target = comp.exists_along(comp.unit(goal.matrix), goal.bound)
    top = comp.top(goal.outer)
    for depth, stage_budget in schedule:
        witness = comp.leq(top, target, depth, stage_budget)
        if witness is None:
            continue
        arrows = witness.per_pair[0].arrows
        terms = [
            TermTuple(goal.outer, goal.bound, r.components[: len(goal.bound)])
            for _, r in arrows
        ]
        if not terms:
            # proof by explosion (inconsistent theory): any instance works,
            # but the certificate still needs a nonempty witness list
            terms = _first_candidate(theory, goal, depth)
            if not terms:
                continue
        terms = _minimise(theory, goal, terms, stage_budget)
        derived = _derived_sequent(goal, terms)
        final = entails(theory, derived, stage_budget)
        if not final.proved:
            continue
        if theory.fragment == HORN and len(terms) != 1:
            raise TheoryError("Horn goal produced a non-singleton witness list")
        return HerbrandCertificate(
            tuple(terms), derived, final.trace, depth, stage_budget
        )
    return None


def _first_candidate(
    theory: Theory, goal: ExistentialGoal, depth: int
) -> list[TermTuple]:
    for t in enumerate_tuples(theory.signature, goal.outer, goal.bound, depth):
        return [t]
    return []


def _minimise(
    theory: Theory,
    goal: ExistentialGoal,
    terms: list[TermTuple],
    budget: SaturationBudget,
) -> list[TermTuple]:
    """Greedy single-removal pass over the trace-used witnesses."""
    kept = list(terms)
    for w in list(kept):
        if len(kept) == 1:
            break
        trial = [t for t in kept if t is not w]
        verdict = entails(theory, _derived_sequent(goal, trial), budget)
        if verdict.proved:
            kept = trial
    return kept


def reduce_forall_forall(
    mt: MorleyisedTheory, phi: Formula, psi: Formula
) -> ExistentialGoal:
    """Reduce ``forall x. phi(x) |- forall y. psi(y)`` to the existential goal
    ``|-_y exists x. Nphi(x) \\/ psi(y)`` over the Morleyised theory."""
    d = phi.ctx
    e = psi.ctx
    matrix_ctx = concat(d, e)
    nphi = mt.negate(phi)
    lift_d = select(matrix_ctx, range(len(d)), d)
    lift_e = select(matrix_ctx, range(len(d), len(matrix_ctx)), e)
    matrix = Or(
        matrix_ctx, substitute(nphi, lift_d), substitute(psi, lift_e)
    )
    return ExistentialGoal(e, d, matrix)


def conjunctive_form(
    mt: MorleyisedTheory,
    phi: Formula,
    psi: Formula,
    certificate: HerbrandCertificate,
) -> tuple[Sequent, EntailmentVerdict]:
    """Convert a forall/forall certificate into the equivalent conjunctive
    sequent phi(t_1(y)) /\\ ... /\\ phi(t_n(y)) |- psi(y) and re-verify it."""
    e = psi.ctx
    instances = [substitute(phi, w) for w in certificate.witnesses]
    seq = Sequent(e, conj_all(e, instances), psi)
    return seq, entails(mt.theory, seq, certificate.budget)


def certificate_to_dict(goal: ExistentialGoal, cert: HerbrandCertificate) -> dict:
    """Stable-order JSON payload for a certificate."""
    goal_str = (
        f"true |- exists {', '.join(f'{n}:{s}' for n, s in goal.bound)}. "
        f"{formula_to_str(goal.matrix)}"
    )
    if len(goal.outer):
        goal_str += f" [{', '.join(f'{n}:{s}' for n, s in goal.outer)}]"
    return {
        "goal": goal_str,
        "witnesses": [
            ", ".join(term_to_str(t, w.domain) for t in w.components)
            for w in cert.witnesses
        ],
        "derived_sequent": sequent_to_str(cert.derived_sequent),
        "depth_used": cert.depth_used,
        "budget": {
            "rounds": cert.budget.rounds,
            "splits": cert.budget.splits,
            "fresh": cert.budget.fresh,
        },
        "trace": [
            {
                "axiom": step.axiom,
                "instance": [
                    term_to_str(t, step.instance.domain)
                    for t in step.instance.components
                ],
                "branch": step.branch,
            }
            for step in cert.trace
        ],
    }


def replay(theory: Theory, cert: HerbrandCertificate) -> EntailmentVerdict:
    """Re-run the derived sequent at the recorded budget, from a cold start."""
    return entails(theory, cert.derived_sequent, cert.budget)
