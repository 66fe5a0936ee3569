"""Natural-logic operators, set-relation semantics, and the veracity automaton.

Six operators describe how a claim span relates to its aligned evidence span.
A proof is a sequence of such operators; folding the sequence through a
three-state automaton (S = Supports, R = Refutes, N = Not enough info,
starting at S, N absorbing) yields the verdict.

The automaton's transition table is not hand-waved: it is derivable from the
set-theoretic semantics of the operators.  Each relation is defined over
nonempty proper subsets of a finite universe, relation composition is
computed by brute-force witness search over small universes, and a state
transition is the class ({equivalence, forward entailment} -> S,
{negation, alternation} -> R, everything else -> N) that *all* composition
witnesses fall into.  The shipped table is hand-coded for runtime use and
validated against the derivation in the test suite.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache


class NatOp(Enum):
    """Operator assigned to an aligned (claim span, evidence span) pair.

    The rarely-used cover relation is not an operator; span pairs that fit
    no other operator receive ``INDEPENDENCE``.
    """

    EQUIVALENCE = "equivalence"
    FORWARD_ENTAILMENT = "forward_entailment"
    REVERSE_ENTAILMENT = "reverse_entailment"
    NEGATION = "negation"
    ALTERNATION = "alternation"
    INDEPENDENCE = "independence"

    @property
    def symbol(self) -> str:
        return _NATOP_SYMBOLS[self]

    @property
    def display(self) -> str:
        """CamelCase name used in the transition-table dump."""
        return _NATOP_DISPLAY[self]

    @classmethod
    def from_name(cls, name: str) -> "NatOp":
        """Parse either the snake_case or the CamelCase spelling."""
        try:
            return cls(name)
        except ValueError:
            pass
        for op, display in _NATOP_DISPLAY.items():
            if display == name:
                return op
        raise ValueError(f"unknown operator name: {name!r}")


_NATOP_SYMBOLS = {
    NatOp.EQUIVALENCE: "≡",
    NatOp.FORWARD_ENTAILMENT: "⊑",
    NatOp.REVERSE_ENTAILMENT: "⊒",
    NatOp.NEGATION: "¬",
    NatOp.ALTERNATION: "⇃↾",
    NatOp.INDEPENDENCE: "#",
}

_NATOP_DISPLAY = {
    NatOp.EQUIVALENCE: "Equivalence",
    NatOp.FORWARD_ENTAILMENT: "ForwardEntailment",
    NatOp.REVERSE_ENTAILMENT: "ReverseEntailment",
    NatOp.NEGATION: "Negation",
    NatOp.ALTERNATION: "Alternation",
    NatOp.INDEPENDENCE: "Independence",
}

SCORABLE_NATOPS = (
    NatOp.EQUIVALENCE,
    NatOp.FORWARD_ENTAILMENT,
    NatOp.REVERSE_ENTAILMENT,
    NatOp.NEGATION,
    NatOp.ALTERNATION,
)


class SetRelation(Enum):
    """The seven basic relations between nonempty proper subsets x, y of U.

    Mutually exclusive and jointly exhaustive:

    - EQUIVALENCE:         x = y
    - FORWARD_ENTAILMENT:  x strict subset of y
    - REVERSE_ENTAILMENT:  x strict superset of y
    - NEGATION:            disjoint and exhaustive (y is the complement of x)
    - ALTERNATION:         disjoint, not exhaustive
    - COVER:               overlapping, exhaustive
    - INDEPENDENCE:        overlapping, not exhaustive, no containment
    """

    EQUIVALENCE = "equivalence"
    FORWARD_ENTAILMENT = "forward_entailment"
    REVERSE_ENTAILMENT = "reverse_entailment"
    NEGATION = "negation"
    ALTERNATION = "alternation"
    COVER = "cover"
    INDEPENDENCE = "independence"


_NATOP_TO_RELATION = {
    NatOp.EQUIVALENCE: SetRelation.EQUIVALENCE,
    NatOp.FORWARD_ENTAILMENT: SetRelation.FORWARD_ENTAILMENT,
    NatOp.REVERSE_ENTAILMENT: SetRelation.REVERSE_ENTAILMENT,
    NatOp.NEGATION: SetRelation.NEGATION,
    NatOp.ALTERNATION: SetRelation.ALTERNATION,
    NatOp.INDEPENDENCE: SetRelation.INDEPENDENCE,
}


class VeracityState(Enum):
    S = "S"
    R = "R"
    N = "N"

    @property
    def label(self) -> str:
        return _STATE_LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "VeracityState":
        for state, text in _STATE_LABELS.items():
            if text == label:
                return state
        raise ValueError(f"unknown veracity label: {label!r}")


_STATE_LABELS = {
    VeracityState.S: "Supports",
    VeracityState.R: "Refutes",
    VeracityState.N: "Not enough info",
}

VERACITY_LABELS = tuple(_STATE_LABELS[s] for s in VeracityState)

# Relation classes the automaton states stand for.  A transition lands in S
# (resp. R) only when every composition witness stays inside the class.
_S_CLASS = frozenset({SetRelation.EQUIVALENCE, SetRelation.FORWARD_ENTAILMENT})
_R_CLASS = frozenset({SetRelation.NEGATION, SetRelation.ALTERNATION})


class RelationError(ValueError):
    """Raised for set pairs outside the domain of the basic relations."""


class DerivationError(RuntimeError):
    """Raised when the witness search cannot settle a transition cell."""


def relation_of_sets(x: frozenset, y: frozenset, universe: frozenset) -> SetRelation:
    """Classify the unique basic relation between x and y within universe.

    Both sets must be nonempty proper subsets of the universe; anything else
    is outside the domain of the seven relations and is rejected.
    """
    x, y, universe = frozenset(x), frozenset(y), frozenset(universe)
    for name, s in (("x", x), ("y", y)):
        if not s:
            raise RelationError(f"{name} must be nonempty")
        if not s <= universe:
            raise RelationError(f"{name} is not a subset of the universe")
        if s == universe:
            raise RelationError(f"{name} must be a proper subset of the universe")
    if x == y:
        return SetRelation.EQUIVALENCE
    if x < y:
        return SetRelation.FORWARD_ENTAILMENT
    if x > y:
        return SetRelation.REVERSE_ENTAILMENT
    disjoint = not (x & y)
    exhaustive = (x | y) == universe
    if disjoint and exhaustive:
        return SetRelation.NEGATION
    if disjoint:
        return SetRelation.ALTERNATION
    if exhaustive:
        return SetRelation.COVER
    return SetRelation.INDEPENDENCE


def _relation_of_masks(x: int, y: int, full: int) -> SetRelation:
    # Bitmask twin of relation_of_sets; domain checks are the caller's job.
    if x == y:
        return SetRelation.EQUIVALENCE
    if x & y == x:
        return SetRelation.FORWARD_ENTAILMENT
    if x & y == y:
        return SetRelation.REVERSE_ENTAILMENT
    disjoint = (x & y) == 0
    exhaustive = (x | y) == full
    if disjoint and exhaustive:
        return SetRelation.NEGATION
    if disjoint:
        return SetRelation.ALTERNATION
    if exhaustive:
        return SetRelation.COVER
    return SetRelation.INDEPENDENCE


@lru_cache(maxsize=None)
def _join_table(max_universe_size: int) -> dict:
    """All composition witnesses: (r1, r2) -> frozenset of result relations.

    Enumerates every ordered triple (x, y, z) of nonempty proper subsets of
    universes of size 4 through ``max_universe_size`` and records
    relation(x, z) under (relation(x, y), relation(y, z)).  Size 4 is the
    smallest universe realizing all seven relations together; going beyond
    size 6 has never produced a new witness class.
    """
    joins: dict = {}
    for n in range(4, max_universe_size + 1):
        full = (1 << n) - 1
        masks = range(1, full)
        rel = {}
        by_first: dict = {}
        for a in masks:
            for b in masks:
                r = _relation_of_masks(a, b, full)
                rel[(a, b)] = r
                by_first.setdefault(a, {}).setdefault(r, []).append(b)
        for x in masks:
            for y in masks:
                r1 = rel[(x, y)]
                for r2, zs in by_first.get(y, {}).items():
                    key = (r1, r2)
                    found = joins.setdefault(key, set())
                    for z in zs:
                        found.add(rel[(x, z)])
    return {key: frozenset(vals) for key, vals in joins.items()}


def join_oracle(r1: SetRelation, r2: SetRelation, max_universe_size: int = 6) -> frozenset:
    """Relations realizable between x and z when x r1 y and y r2 z.

    Brute-force witness search; see ``_join_table``.  An empty result means
    the composition is unrealizable at the searched universe sizes.
    """
    if max_universe_size < 4:
        raise ValueError("witness search needs universes of size >= 4")
    return _join_table(max_universe_size).get((r1, r2), frozenset())


def derive_dfa_table(max_universe_size: int = 6) -> "DfaTable":
    """Reconstruct the veracity transition table from set semantics.

    For a state's relation class C and operator o, the witness set is the
    union of join_oracle(r, o) over r in C.  The cell is S when every
    witness is in the S class, R when every witness is in the R class, and
    N otherwise.  N itself is absorbing.  A cell with no witnesses at all
    cannot be classified and raises DerivationError.
    """
    if max_universe_size < 5:
        raise ValueError("deriving the table needs universes of size >= 5")
    state_classes = {
        VeracityState.S: _S_CLASS,
        VeracityState.R: _R_CLASS,
    }
    transitions = {}
    for state, rel_class in state_classes.items():
        for op in NatOp:
            witnesses = frozenset().union(
                *(join_oracle(r, _NATOP_TO_RELATION[op], max_universe_size) for r in rel_class)
            )
            if not witnesses:
                raise DerivationError(
                    f"no composition witnesses for ({state.value}, {op.display}); "
                    f"increase max_universe_size"
                )
            if witnesses <= _S_CLASS:
                target = VeracityState.S
            elif witnesses <= _R_CLASS:
                target = VeracityState.R
            else:
                target = VeracityState.N
            transitions[(state, op)] = target
    for op in NatOp:
        transitions[(VeracityState.N, op)] = VeracityState.N
    return DfaTable(transitions)


@dataclass(frozen=True)
class DfaTable:
    """Total deterministic transition map (state, operator) -> state."""

    transitions: dict

    def __post_init__(self):
        expected = {(s, o) for s in VeracityState for o in NatOp}
        if set(self.transitions) != expected:
            missing = expected - set(self.transitions)
            extra = set(self.transitions) - expected
            raise ValueError(f"table must have exactly 18 cells (missing {missing}, extra {extra})")

    def step(self, state: VeracityState, op: NatOp) -> VeracityState:
        return self.transitions[(state, op)]

    def run(self, ops) -> VeracityState:
        state = VeracityState.S
        for op in ops:
            state = self.transitions[(state, op)]
        return state

    def trace(self, ops) -> list:
        """States visited, starting at S; length = len(ops) + 1."""
        states = [VeracityState.S]
        for op in ops:
            states.append(self.transitions[(states[-1], op)])
        return states

    def as_nested_dict(self) -> dict:
        """{"S": {"Equivalence": "S", ...}, ...} for serialization."""
        out: dict = {}
        for state in VeracityState:
            out[state.value] = {
                op.display: self.transitions[(state, op)].value for op in NatOp
            }
        return out


def _shipped_transitions() -> dict:
    S, R, N = VeracityState.S, VeracityState.R, VeracityState.N
    rows = {
        S: {
            NatOp.EQUIVALENCE: S,
            NatOp.FORWARD_ENTAILMENT: S,
            NatOp.REVERSE_ENTAILMENT: N,
            NatOp.NEGATION: R,
            NatOp.ALTERNATION: R,
            NatOp.INDEPENDENCE: N,
        },
        R: {
            NatOp.EQUIVALENCE: R,
            NatOp.FORWARD_ENTAILMENT: N,
            NatOp.REVERSE_ENTAILMENT: R,
            NatOp.NEGATION: S,
            NatOp.ALTERNATION: N,
            NatOp.INDEPENDENCE: N,
        },
        N: {op: N for op in NatOp},
    }
    return {(state, op): target for state, row in rows.items() for op, target in row.items()}


#: The table used at runtime.  Hand-coded for startup determinism; the test
#: suite checks it cell-by-cell against derive_dfa_table().
SHIPPED_DFA = DfaTable(_shipped_transitions())


def dfa_run(ops) -> VeracityState:
    """Fold an operator sequence from S through the shipped table."""
    return SHIPPED_DFA.run(ops)


def dfa_trace(ops) -> list:
    return SHIPPED_DFA.trace(ops)


def enumerate_proper_subsets(universe: frozenset):
    """All nonempty proper subsets, for tests that cross-check the oracle."""
    items = sorted(universe)
    for size in range(1, len(items)):
        for combo in itertools.combinations(items, size):
            yield frozenset(combo)
