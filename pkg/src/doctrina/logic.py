"""Quantifier-free coherent syntax and the bounded-saturation entailment oracle.

Formulas are trees over truth, falsity, equality, relation instances and the
binary connectives, each node tagged with its context.  ``entails`` decides
sequents modulo a universal theory by a datalog-style chase: context
variables become fresh constants, facts live in a congruence-closure
structure, axioms are forward-chained with instantiation restricted to the
known term universe, and disjunctive heads case-split.  The verdict is
Proved or Unknown, never Refuted.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence

from .errors import ContextMismatch, FragmentError, SortError
from .terms import (
    App,
    Context,
    Signature,
    Term,
    TermTuple,
    Var,
    context_to_str,
    subst_term,
    subterms,
    term_sort,
    term_to_str,
)

HORN = "horn"
COHERENT = "coherent"
CLASSICAL = "classical-morleyised"

PROVED = "proved"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class Formula:
    ctx: Context


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Bot(Formula):
    pass


@dataclass(frozen=True)
class Eq(Formula):
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Rel(Formula):
    symbol: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


def conj(a: Formula, b: Formula) -> Formula:
    if a.ctx != b.ctx:
        raise ContextMismatch("conjunction over different contexts")
    return And(a.ctx, a, b)


def disj(a: Formula, b: Formula) -> Formula:
    if a.ctx != b.ctx:
        raise ContextMismatch("disjunction over different contexts")
    return Or(a.ctx, a, b)


def conj_all(ctx: Context, fs: Sequence[Formula]) -> Formula:
    if not fs:
        return Top(ctx)
    out = fs[0]
    for f in fs[1:]:
        out = conj(out, f)
    return out


def disj_all(ctx: Context, fs: Sequence[Formula]) -> Formula:
    if not fs:
        return Bot(ctx)
    out = fs[0]
    for f in fs[1:]:
        out = disj(out, f)
    return out


def flatten_or(phi: Formula) -> list[Formula]:
    if isinstance(phi, Or):
        return flatten_or(phi.left) + flatten_or(phi.right)
    return [phi]


def flatten_and(phi: Formula) -> list[Formula]:
    if isinstance(phi, And):
        return flatten_and(phi.left) + flatten_and(phi.right)
    return [phi]


def well_formed(sig: Signature, phi: Formula) -> None:
    """Raise SortError/FragmentError unless ``phi`` is quantifier-free coherent
    syntax, well-sorted over its context."""
    if isinstance(phi, (Top, Bot)):
        return
    if isinstance(phi, Eq):
        ls = term_sort(sig, phi.ctx, phi.lhs)
        rs = term_sort(sig, phi.ctx, phi.rhs)
        if ls != rs:
            raise SortError(f"equality between sorts {ls} and {rs}")
        return
    if isinstance(phi, Rel):
        r = sig.relation(phi.symbol)
        if len(phi.args) != r.arity:
            raise SortError(f"{phi.symbol} expects {r.arity} arguments")
        for a, expected in zip(phi.args, r.arg_sorts):
            actual = term_sort(sig, phi.ctx, a)
            if actual != expected:
                raise SortError(f"argument of {phi.symbol} has sort {actual}, expected {expected}")
        return
    if isinstance(phi, (And, Or)):
        if phi.left.ctx != phi.ctx or phi.right.ctx != phi.ctx:
            raise ContextMismatch("connective children carry a different context")
        well_formed(sig, phi.left)
        well_formed(sig, phi.right)
        return
    raise FragmentError(f"connective {type(phi).__name__} is outside the coherent fragment")


def is_horn(phi: Formula) -> bool:
    """Horn formulas use only truth, equality, relation instances and conjunction."""
    if isinstance(phi, Top):
        return True
    if isinstance(phi, (Eq, Rel)):
        return True
    if isinstance(phi, And):
        return is_horn(phi.left) and is_horn(phi.right)
    return False


def substitute(phi: Formula, f: TermTuple) -> Formula:
    """Pull ``phi`` back along ``f``; commutes with all connectives."""
    if phi.ctx != f.codomain:
        raise ContextMismatch(
            f"formula context {phi.ctx.sorts} != tuple codomain {f.codomain.sorts}"
        )
    return _subst(phi, f.domain, f.components)


def _subst(phi: Formula, dom: Context, comps: tuple[Term, ...]) -> Formula:
    if isinstance(phi, Top):
        return Top(dom)
    if isinstance(phi, Bot):
        return Bot(dom)
    if isinstance(phi, Eq):
        return Eq(dom, subst_term(phi.lhs, comps), subst_term(phi.rhs, comps))
    if isinstance(phi, Rel):
        return Rel(dom, phi.symbol, tuple(subst_term(a, comps) for a in phi.args))
    if isinstance(phi, And):
        return And(dom, _subst(phi.left, dom, comps), _subst(phi.right, dom, comps))
    if isinstance(phi, Or):
        return Or(dom, _subst(phi.left, dom, comps), _subst(phi.right, dom, comps))
    raise FragmentError(f"cannot substitute into {type(phi).__name__}")


@dataclass(frozen=True)
class Sequent:
    context: Context
    lhs: Formula
    rhs: Formula

    def __post_init__(self):
        if self.lhs.ctx != self.context or self.rhs.ctx != self.context:
            raise ContextMismatch("sequent sides must live in the sequent context")


@dataclass(frozen=True)
class Axiom:
    name: str
    sequent: Sequent


@dataclass(frozen=True)
class Theory:
    signature: Signature
    axioms: tuple[Axiom, ...]
    fragment: str = COHERENT

    def __post_init__(self):
        if self.fragment not in (HORN, COHERENT, CLASSICAL):
            raise FragmentError(f"unknown fragment {self.fragment}")
        names = [a.name for a in self.axioms]
        if len(set(names)) != len(names):
            raise SortError("duplicate axiom names")
        for a in self.axioms:
            well_formed(self.signature, a.sequent.lhs)
            well_formed(self.signature, a.sequent.rhs)
            if self.fragment == HORN:
                if not (is_horn(a.sequent.lhs) and is_horn(a.sequent.rhs)):
                    raise FragmentError(f"axiom {a.name} is not Horn")

    def axiom(self, name: str) -> Axiom:
        for a in self.axioms:
            if a.name == name:
                return a
        raise SortError(f"unknown axiom {name}")


@dataclass(frozen=True)
class SaturationBudget:
    rounds: int = 64
    splits: int = 16
    fresh: int = 8

    def scaled(self, k: int) -> "SaturationBudget":
        return SaturationBudget(self.rounds * k, self.splits * k, self.fresh * k)


@dataclass(frozen=True)
class TraceStep:
    axiom: str
    instance: TermTuple
    branch: str


@dataclass(frozen=True)
class EntailmentVerdict:
    status: str
    trace: tuple[TraceStep, ...]
    bound_used: int
    used_rhs_disjuncts: tuple[int, ...] = ()

    @property
    def proved(self) -> bool:
        return self.status == PROVED


# ---------------------------------------------------------------------------
# canonical printing (used for hashing-free deterministic ordering)


def formula_to_str(phi: Formula) -> str:
    if isinstance(phi, Top):
        return "true"
    if isinstance(phi, Bot):
        return "false"
    if isinstance(phi, Eq):
        return f"{term_to_str(phi.lhs, phi.ctx)} = {term_to_str(phi.rhs, phi.ctx)}"
    if isinstance(phi, Rel):
        return f"{phi.symbol}({', '.join(term_to_str(a, phi.ctx) for a in phi.args)})"
    if isinstance(phi, And):
        return " /\\ ".join(_wrap_and(c) for c in flatten_and(phi))
    if isinstance(phi, Or):
        return " \\/ ".join(formula_to_str(c) for c in flatten_or(phi))
    return f"~{formula_to_str(phi.body)}"  # classical front end only


def _wrap_and(phi: Formula) -> str:
    s = formula_to_str(phi)
    return f"({s})" if isinstance(phi, Or) else s


def sequent_to_str(s: Sequent) -> str:
    core = f"{formula_to_str(s.lhs)} |- {formula_to_str(s.rhs)}"
    if len(s.context):
        core += f" {context_to_str(s.context)}"
    return core


def term_key(t: Term) -> tuple:
    if isinstance(t, Var):
        return (0, t.index)
    return (1, t.symbol, tuple(term_key(a) for a in t.args))


def formula_key(phi: Formula) -> tuple:
    if isinstance(phi, Top):
        return (0,)
    if isinstance(phi, Bot):
        return (1,)
    if isinstance(phi, Eq):
        return (2, term_key(phi.lhs), term_key(phi.rhs))
    if isinstance(phi, Rel):
        return (3, phi.symbol, tuple(term_key(a) for a in phi.args))
    if isinstance(phi, And):
        return (4, formula_key(phi.left), formula_key(phi.right))
    if isinstance(phi, Or):
        return (5, formula_key(phi.left), formula_key(phi.right))
    raise FragmentError(f"no canonical key for {type(phi).__name__}")


# ---------------------------------------------------------------------------
# normal form


def normalize(phi: Formula) -> Formula:
    """Flattened, sorted disjunctive normal form with unit laws applied.

    Equalities are oriented by the canonical term ordering, duplicate atoms
    and disjuncts are removed, and atoms/disjuncts are sorted, so that
    logically identical formulas built in different orders compare equal.
    """
    ctx = phi.ctx
    disjuncts = _dnf(phi)
    if any(len(d) == 0 for d in disjuncts):
        return Top(ctx)
    keyed = sorted(
        {tuple(sorted(d, key=formula_key)) for d in disjuncts},
        key=lambda atoms: tuple(formula_key(a) for a in atoms),
    )
    if not keyed:
        return Bot(ctx)
    return disj_all(ctx, [conj_all(ctx, list(atoms)) for atoms in keyed])


def _dnf(phi: Formula) -> list[frozenset[Formula]]:
    if isinstance(phi, Top):
        return [frozenset()]
    if isinstance(phi, Bot):
        return []
    if isinstance(phi, Eq):
        if term_key(phi.rhs) < term_key(phi.lhs):
            phi = Eq(phi.ctx, phi.rhs, phi.lhs)
        return [frozenset([phi])]
    if isinstance(phi, Rel):
        return [frozenset([phi])]
    if isinstance(phi, And):
        return [
            l | r for l in _dnf(phi.left) for r in _dnf(phi.right)
        ]
    if isinstance(phi, Or):
        return _dnf(phi.left) + _dnf(phi.right)
    raise FragmentError(f"cannot normalize {type(phi).__name__}")


# ---------------------------------------------------------------------------
# congruence closure over ground terms (context variables read as constants)


class Congruence:
    """Union-find congruence closure over a registered ground-term universe."""

    def __init__(self):
        self._ids: dict[Term, int] = {}
        self._terms: list[Term] = []
        self._parent: list[int] = []
        self.version = 0

    def clone(self) -> "Congruence":
        c = Congruence.__new__(Congruence)
        c._ids = dict(self._ids)
        c._terms = list(self._terms)
        c._parent = list(self._parent)
        c.version = self.version
        return c

    def register(self, t: Term) -> None:
        if t in self._ids:
            return
        if isinstance(t, App):
            for a in t.args:
                self.register(a)
        self._ids[t] = len(self._terms)
        self._terms.append(t)
        self._parent.append(len(self._parent))
        self.version += 1
        self._propagate()

    def _find(self, i: int) -> int:
        while self._parent[i] != i:
            self._parent[i] = self._parent[self._parent[i]]
            i = self._parent[i]
        return i

    def _union(self, i: int, j: int) -> bool:
        ri, rj = self._find(i), self._find(j)
        if ri == rj:
            return False
        # keep the smaller id as representative, for determinism
        if rj < ri:
            ri, rj = rj, ri
        self._parent[rj] = ri
        return True

    def merge(self, s: Term, t: Term) -> None:
        self.register(s)
        self.register(t)
        if self._union(self._ids[s], self._ids[t]):
            self.version += 1
            self._propagate()

    def _propagate(self):
        changed = True
        while changed:
            changed = False
            table: dict[tuple, int] = {}
            for t, i in self._ids.items():
                if isinstance(t, Var) or not t.args:
                    continue
                key = (t.symbol, tuple(self._find(self._ids[a]) for a in t.args))
                if key in table:
                    if self._union(table[key], i):
                        changed = True
                        self.version += 1
                else:
                    table[key] = self._find(i)

    def rep(self, t: Term) -> int:
        self.register(t)
        return self._find(self._ids[t])

    def equal(self, s: Term, t: Term) -> bool:
        return self.rep(s) == self.rep(t)


# ---------------------------------------------------------------------------
# the chase


_verdict_observers: list[Callable[[Theory, Sequent, SaturationBudget, EntailmentVerdict], None]] = []


def add_verdict_observer(fn) -> None:
    _verdict_observers.append(fn)


def remove_verdict_observer(fn) -> None:
    _verdict_observers.remove(fn)


class _Branch:
    def __init__(self, branch_id: str):
        self.id = branch_id
        self.cc = Congruence()
        self.rel_facts: list[tuple[str, tuple[Term, ...]]] = []
        self.universe: list[Term] = []
        self._universe_set: set[Term] = set()
        self.fresh_used = 0
        self._canon: set[tuple] = set()
        self._canon_version = -1

    def clone(self, branch_id: str) -> "_Branch":
        b = _Branch.__new__(_Branch)
        b.id = branch_id
        b.cc = self.cc.clone()
        b.rel_facts = list(self.rel_facts)
        b.universe = list(self.universe)
        b._universe_set = set(self._universe_set)
        b.fresh_used = self.fresh_used
        b._canon = set(self._canon)
        b._canon_version = self._canon_version
        return b

    def add_universe_term(self, t: Term) -> int:
        """Register a term (with its subterms) as instantiation candidates.
        Returns the number of genuinely new terms added."""
        new = 0
        for s in subterms(t):
            if s not in self._universe_set:
                self._universe_set.add(s)
                self.universe.append(s)
                self.cc.register(s)
                new += 1
        return new

    def fresh_cost(self, terms: Sequence[Term]) -> int:
        seen: set[Term] = set()
        for t in terms:
            for s in subterms(t):
                if s not in self._universe_set:
                    seen.add(s)
        return len(seen)

    def _facts_canon(self) -> set[tuple]:
        if self._canon_version != self.cc.version:
            self._canon = {
                (r, tuple(self.cc.rep(a) for a in args)) for r, args in self.rel_facts
            }
            self._canon_version = self.cc.version
        return self._canon

    def holds_atom(self, phi: Formula) -> bool:
        if isinstance(phi, Eq):
            return self.cc.equal(phi.lhs, phi.rhs)
        assert isinstance(phi, Rel)
        key = (phi.symbol, tuple(self.cc.rep(a) for a in phi.args))
        return key in self._facts_canon()

    def holds(self, phi: Formula) -> bool:
        if isinstance(phi, Top):
            return True
        if isinstance(phi, Bot):
            return False
        if isinstance(phi, And):
            return self.holds(phi.left) and self.holds(phi.right)
        if isinstance(phi, Or):
            return self.holds(phi.left) or self.holds(phi.right)
        return self.holds_atom(phi)

    def add_atom(self, phi: Formula) -> bool:
        """Add a ground atom as a fact.  Returns True if the state changed."""
        if isinstance(phi, Eq):
            if self.cc.equal(phi.lhs, phi.rhs):
                return False
            self.cc.merge(phi.lhs, phi.rhs)
            return True
        assert isinstance(phi, Rel)
        if self.holds_atom(phi):
            return False
        self.rel_facts.append((phi.symbol, phi.args))
        self._canon_version = -1
        return True


def _ground_dnf(phi: Formula) -> list[list[Formula]]:
    """Disjunction of atom lists, preserving the source disjunct order."""
    if isinstance(phi, Top):
        return [[]]
    if isinstance(phi, Bot):
        return []
    if isinstance(phi, (Eq, Rel)):
        return [[phi]]
    if isinstance(phi, And):
        return [
            l + r for l in _ground_dnf(phi.left) for r in _ground_dnf(phi.right)
        ]
    if isinstance(phi, Or):
        return _ground_dnf(phi.left) + _ground_dnf(phi.right)
    raise FragmentError(f"cannot chase over {type(phi).__name__}")


class _Chase:
    def __init__(self, theory: Theory, sequent: Sequent, budget: SaturationBudget):
        self.theory = theory
        self.sequent = sequent
        self.budget = budget
        self.steps: list[TraceStep] = []
        self.used_disjuncts: set[int] = set()
        self.rhs_disjuncts = flatten_or(sequent.rhs)
        self.max_round = 0

    def run(self) -> EntailmentVerdict:
        seeds: list[Term] = []
        # context variables of the goal are read as fresh constants
        for i in range(len(self.sequent.context)):
            seeds.append(Var(i))
        for phi in (self.sequent.lhs, self.sequent.rhs):
            seeds.extend(_formula_terms(phi))
        for ax in self.theory.axioms:
            for side in (ax.sequent.lhs, ax.sequent.rhs):
                for t in _formula_terms(side):
                    if _is_closed(t):
                        seeds.append(t)

        start_disjuncts = _ground_dnf(self.sequent.lhs)
        proved = True
        for b_idx, atoms in enumerate(start_disjuncts):
            branch = _Branch(str(b_idx))
            for t in seeds:
                branch.add_universe_term(t)
            for atom in atoms:
                branch.add_atom(atom)
            if not self._saturate(branch, 0, 0):
                proved = False
                break
        status = PROVED if proved else UNKNOWN
        verdict = EntailmentVerdict(
            status,
            tuple(self.steps),
            self.max_round,
            tuple(sorted(self.used_disjuncts)) if proved else (),
        )
        for fn in _verdict_observers:
            fn(self.theory, self.sequent, self.budget, verdict)
        return verdict

    def _goal_index(self, branch: _Branch) -> Optional[int]:
        for i, d in enumerate(self.rhs_disjuncts):
            if branch.holds(d):
                return i
        return None

    def _apply_atoms(self, branch: _Branch, atoms: list[Formula]) -> Optional[bool]:
        """Add a conjunction of ground atoms, fresh-budget permitting.

        Returns None when the fresh-term allowance would be exceeded,
        otherwise whether the branch state changed."""
        terms = [t for a in atoms for t in _formula_terms(a)]
        cost = branch.fresh_cost(terms)
        if branch.fresh_used + cost > self.budget.fresh:
            return None
        branch.fresh_used += cost
        changed = False
        for t in terms:
            branch.add_universe_term(t)
        for a in atoms:
            changed |= branch.add_atom(a)
        return changed

    def _saturate(self, branch: _Branch, rounds_used: int, depth: int) -> bool:
        while True:
            self.max_round = max(self.max_round, rounds_used)
            hit = self._goal_index(branch)
            if hit is not None:
                self.used_disjuncts.add(hit)
                return True
            if rounds_used >= self.budget.rounds:
                return False
            # applicability is judged against the round-start state: queue
            # all firings first, apply the definite ones afterwards
            queued: list[tuple[Axiom, TermTuple, list[Formula]]] = []
            pending_splits: list[tuple[Axiom, TermTuple, list[list[Formula]]]] = []
            by_sort: dict[str, list[Term]] = {}
            for t in branch.universe:
                s = term_sort(self.theory.signature, self.sequent.context, t)
                by_sort.setdefault(s, []).append(t)
            for ax in self.theory.axioms:
                for inst in self._instances(ax, by_sort):
                    lhs = substitute(ax.sequent.lhs, inst)
                    if not branch.holds(lhs):
                        continue
                    rhs = substitute(ax.sequent.rhs, inst)
                    dnf = _ground_dnf(rhs)
                    if any(all(branch.holds(a) for a in d) for d in dnf):
                        continue
                    if len(dnf) == 0:
                        # ex falso: the branch is inconsistent, hence closed
                        self.steps.append(TraceStep(ax.name, inst, branch.id))
                        return True
                    if len(dnf) == 1:
                        queued.append((ax, inst, dnf[0]))
                    else:
                        pending_splits.append((ax, inst, dnf))
            rounds_used += 1
            added_any = False
            for ax, inst, atoms in queued:
                if all(branch.holds(a) for a in atoms):
                    continue
                changed = self._apply_atoms(branch, atoms)
                if changed:
                    added_any = True
                    self.steps.append(TraceStep(ax.name, inst, branch.id))
            if added_any:
                continue
            # no definite progress: resolve the first still-unsatisfied split
            for ax, inst, dnf in pending_splits:
                if any(all(branch.holds(a) for a in d) for d in dnf):
                    continue
                if depth >= self.budget.splits:
                    return False
                self.steps.append(TraceStep(ax.name, inst, branch.id))
                for k, atoms in enumerate(dnf):
                    child = branch.clone(f"{branch.id}.{k}")
                    if self._apply_atoms(child, atoms) is None:
                        return False
                    if not self._saturate(child, rounds_used, depth + 1):
                        return False
                return True
            # saturated without reaching the goal
            return False

    def _instances(self, ax: Axiom, by_sort: dict[str, list[Term]]) -> Iterator[TermTuple]:
        ctx = ax.sequent.context
        pools = [by_sort.get(s, []) for s in ctx.sorts]
        for combo in itertools.product(*pools):
            yield TermTuple(self.sequent.context, ctx, tuple(combo))


def _formula_terms(phi: Formula) -> Iterator[Term]:
    if isinstance(phi, Eq):
        yield phi.lhs
        yield phi.rhs
    elif isinstance(phi, Rel):
        yield from phi.args
    elif isinstance(phi, (And, Or)):
        yield from _formula_terms(phi.left)
        yield from _formula_terms(phi.right)


def _is_closed(t: Term) -> bool:
    if isinstance(t, Var):
        return False
    return all(_is_closed(a) for a in t.args)


def entails(
    theory: Theory, sequent: Sequent, budget: SaturationBudget = SaturationBudget()
) -> EntailmentVerdict:
    """Sound semi-decision of ``T proves lhs |- rhs`` by bounded saturation.

    Proved verdicts carry a replayable trace of axiom firings; Unknown means
    some budget (rounds, split depth or fresh-term allowance) was exhausted
    or the chase saturated without reaching the goal.
    """
    well_formed(theory.signature, sequent.lhs)
    well_formed(theory.signature, sequent.rhs)
    return _Chase(theory, sequent, budget).run()
