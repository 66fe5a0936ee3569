from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from natproof.natlog import (
    SHIPPED_DFA,
    DfaTable,
    NatOp,
    RelationError,
    SetRelation,
    VeracityState,
    derive_dfa_table,
    dfa_run,
    dfa_trace,
    enumerate_proper_subsets,
    join_oracle,
    relation_of_sets,
)

U3 = frozenset("abc")
U4 = frozenset("abcd")


def fs(chars: str) -> frozenset:
    return frozenset(chars)


class TestRelationOfSets:
    def test_identity_is_equivalence(self):
        assert relation_of_sets(fs("a"), fs("a"), U3) is SetRelation.EQUIVALENCE

    def test_strict_subset_is_forward_entailment(self):
        assert relation_of_sets(fs("a"), fs("ab"), U3) is SetRelation.FORWARD_ENTAILMENT

    def test_strict_superset_is_reverse_entailment(self):
        assert relation_of_sets(fs("ab"), fs("a"), U3) is SetRelation.REVERSE_ENTAILMENT

    def test_disjoint_non_exhaustive_is_alternation(self):
        assert relation_of_sets(fs("a"), fs("b"), U3) is SetRelation.ALTERNATION

    def test_complement_is_negation(self):
        assert relation_of_sets(fs("a"), fs("bc"), U3) is SetRelation.NEGATION

    def test_overlapping_exhaustive_is_cover(self):
        assert relation_of_sets(fs("ab"), fs("bc"), U3) is SetRelation.COVER

    def test_overlap_without_containment_is_independence(self):
        assert relation_of_sets(fs("ab"), fs("bc"), U4) is SetRelation.INDEPENDENCE

    @pytest.mark.parametrize(
        "x, y",
        [(fs(""), fs("a")), (fs("a"), fs("")), (fs("abc"), fs("a")), (fs("a"), fs("abc"))],
    )
    def test_rejects_empty_and_universal(self, x, y):
        with pytest.raises(RelationError):
            relation_of_sets(x, y, U3)

    def test_rejects_non_subset(self):
        with pytest.raises(RelationError):
            relation_of_sets(fs("x"), fs("a"), U3)

    def test_exhaustive_and_exclusive_over_small_universes(self):
        # Independent oracle: classify by the raw definitions and cross-check.
        for n in (2, 3, 4):
            universe = frozenset(range(n))
            subsets = list(enumerate_proper_subsets(universe))
            for x, y in itertools.product(subsets, repeat=2):
                expected = self._classify_by_definition(x, y, universe)
                assert relation_of_sets(x, y, universe) is expected

    @staticmethod
    def _classify_by_definition(x, y, universe):
        matches = []
        if x == y:
            matches.append(SetRelation.EQUIVALENCE)
        if x < y:
            matches.append(SetRelation.FORWARD_ENTAILMENT)
        if x > y:
            matches.append(SetRelation.REVERSE_ENTAILMENT)
        if not (x & y) and (x | y) == universe:
            matches.append(SetRelation.NEGATION)
        if not (x & y) and (x | y) != universe:
            matches.append(SetRelation.ALTERNATION)
        if (x & y) and (x | y) == universe and x != y and not x < y and not x > y:
            matches.append(SetRelation.COVER)
        if (x & y) and (x | y) != universe and x != y and not x < y and not x > y:
            matches.append(SetRelation.INDEPENDENCE)
        assert len(matches) == 1, f"definitions not exclusive for {x}, {y}"
        return matches[0]


class TestJoinOracle:
    def test_double_negation_is_equivalence(self):
        assert join_oracle(SetRelation.NEGATION, SetRelation.NEGATION) == {
            SetRelation.EQUIVALENCE
        }

    def test_forward_entailment_then_negation_is_alternation(self):
        assert join_oracle(SetRelation.FORWARD_ENTAILMENT, SetRelation.NEGATION) == {
            SetRelation.ALTERNATION
        }

    @pytest.mark.parametrize("relation", list(SetRelation))
    def test_equivalence_is_identity_element(self, relation):
        assert join_oracle(SetRelation.EQUIVALENCE, relation) == {relation}

    def test_rejects_tiny_universes(self):
        with pytest.raises(ValueError):
            join_oracle(SetRelation.NEGATION, SetRelation.NEGATION, max_universe_size=3)

    def test_matches_set_based_enumeration_at_size_four(self):
        # Independent oracle for the bitmask search: plain frozenset triples.
        universe = frozenset(range(4))
        subsets = list(enumerate_proper_subsets(universe))
        expected: dict = {}
        for x, y, z in itertools.product(subsets, repeat=3):
            key = (relation_of_sets(x, y, universe), relation_of_sets(y, z, universe))
            expected.setdefault(key, set()).add(relation_of_sets(x, z, universe))
        for key, relations in expected.items():
            assert join_oracle(*key, max_universe_size=4) == relations


class TestDfaTable:
    def test_derivation_matches_shipped_table(self):
        assert derive_dfa_table().transitions == SHIPPED_DFA.transitions

    def test_has_exactly_18_cells(self):
        assert len(SHIPPED_DFA.transitions) == 18

    def test_rejects_partial_table(self):
        partial = dict(SHIPPED_DFA.transitions)
        partial.pop((VeracityState.S, NatOp.NEGATION))
        with pytest.raises(ValueError):
            DfaTable(partial)

    @pytest.mark.parametrize("op", list(NatOp))
    def test_n_is_absorbing(self, op):
        assert SHIPPED_DFA.step(VeracityState.N, op) is VeracityState.N

    @pytest.mark.parametrize(
        "state, op, target",
        [
            (VeracityState.S, NatOp.NEGATION, VeracityState.R),
            (VeracityState.R, NatOp.REVERSE_ENTAILMENT, VeracityState.R),
            (VeracityState.S, NatOp.ALTERNATION, VeracityState.R),
            (VeracityState.S, NatOp.INDEPENDENCE, VeracityState.N),
            (VeracityState.R, NatOp.NEGATION, VeracityState.S),
        ],
    )
    def test_known_cells(self, state, op, target):
        assert SHIPPED_DFA.step(state, op) is target

    def test_derivation_needs_universe_of_five(self):
        with pytest.raises(ValueError):
            derive_dfa_table(max_universe_size=4)


EQ, FE, RE = NatOp.EQUIVALENCE, NatOp.FORWARD_ENTAILMENT, NatOp.REVERSE_ENTAILMENT
NEG, ALT, IND = NatOp.NEGATION, NatOp.ALTERNATION, NatOp.INDEPENDENCE


class TestDfaRun:
    def test_equivalence_twice_then_negation_refutes(self):
        assert dfa_run([EQ, EQ, NEG]).label == "Refutes"
        assert [s.value for s in dfa_trace([EQ, EQ, NEG])] == ["S", "S", "S", "R"]

    def test_negation_then_reverse_entailments_refutes(self):
        ops = [NEG, RE, RE, EQ]
        assert dfa_run(ops).label == "Refutes"
        assert [s.value for s in dfa_trace(ops)] == ["S", "R", "R", "R", "R"]

    def test_alternation_sequence_refutes(self):
        assert dfa_run([EQ, EQ, ALT]).label == "Refutes"

    def test_empty_sequence_supports(self):
        assert dfa_run([]).label == "Supports"

    def test_independence_absorbs(self):
        assert dfa_run([EQ, IND]).label == "Not enough info"
        assert dfa_run([EQ, IND, NEG, EQ]).label == "Not enough info"

    @given(st.lists(st.sampled_from(list(NatOp)), max_size=12))
    @settings(max_examples=200, deadline=None)
    def test_trace_is_consistent_with_run(self, ops):
        trace = dfa_trace(ops)
        assert len(trace) == len(ops) + 1
        assert trace[0] is VeracityState.S
        assert trace[-1] is dfa_run(ops)


def test_natop_names_roundtrip():
    for op in NatOp:
        assert NatOp.from_name(op.value) is op
        assert NatOp.from_name(op.display) is op
    with pytest.raises(ValueError):
        NatOp.from_name("Cover")


def test_veracity_labels():
    assert VeracityState.S.label == "Supports"
    assert VeracityState.R.label == "Refutes"
    assert VeracityState.N.label == "Not enough info"
    assert VeracityState.from_label("Refutes") is VeracityState.R
