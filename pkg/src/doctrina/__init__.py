"""Existential-completion engine for universal theories.

Builds the term category of a multi-sorted signature, decides quantifier-free
sequents modulo a universal theory by bounded saturation, constructs the free
existential completion of the induced syntactic doctrine, and extracts
Herbrand witnesses for existential goals as machine-checkable certificates.
"""

from .errors import (
    ContextMismatch,
    EngineError,
    EnumerationLimitError,
    FragmentError,
    ParseError,
    SortError,
    TheoryError,
)
from .terms import (
    App,
    Context,
    EMPTY,
    Signature,
    Term,
    TermTuple,
    Var,
    compose,
    concat,
    enumerate_terms,
    enumerate_tuples,
    identity,
    pairing,
    product,
    term_depth,
)
from .logic import (
    And,
    Axiom,
    Bot,
    COHERENT,
    CLASSICAL,
    EntailmentVerdict,
    Eq,
    Formula,
    HORN,
    Or,
    PROVED,
    Rel,
    SaturationBudget,
    Sequent,
    Theory,
    Top,
    UNKNOWN,
    entails,
    is_horn,
    normalize,
    substitute,
)
from .semantics import FiniteModel, ModelInterpretation, enumerate_models, evaluate, satisfies
from .completion import Completion, ExElement, ExPair, LeqWitness, PairWitness
from .herbrand import (
    ClassicalTheory,
    ExistentialGoal,
    HerbrandCertificate,
    MorleyisedTheory,
    Not,
    default_schedule,
    find_witnesses,
    morleyise,
    reduce_forall_forall,
)

__all__ = [name for name in dir() if not name.startswith("_")]
