"""Proof selection over the span lattice.

Every segmentation of the claim into consecutive lattice spans induces one
candidate proof; its score is the mean operator probability (independence
contributes the boolean floor 0.5) plus the probability the veracity
distribution puts on the label of the proof's terminal automaton state.
Two equivalent searchers are provided: exhaustive enumeration, and a
dynamic program over (position, automaton state, step count) that stays
linear in backend work because span assignments are computed once outside
the search.  Ties in total score prefer the proof with more steps (the
finest reading), then the lexicographically earliest segmentation, longest
first span first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from natproof.alignment import AlignedSpan
from natproof.chunking import MergedSpan, SpanLattice, count_segmentations, iter_segmentations
from natproof.natlog import SHIPPED_DFA, NatOp, VeracityState
from natproof.qa import NatOpAssignment


@dataclass(frozen=True)
class ProofStep:
    claim_span: MergedSpan
    claim_text: str
    natop: NatOp
    yes_probability: float
    evidence_text: Optional[str] = None
    evidence_sentence_idx: Optional[int] = None

    def __post_init__(self):
        if self.natop is NatOp.INDEPENDENCE and self.yes_probability != 0.5:
            raise ValueError("independence steps carry probability 0.5")


@dataclass(frozen=True)
class Proof:
    steps: tuple
    s_p: float
    s_v: float
    final_state: VeracityState
    label: str

    @property
    def ops(self) -> list:
        return [step.natop for step in self.steps]

    def state_trace(self) -> list:
        """States visited, starting at S; length = len(steps) + 1."""
        return SHIPPED_DFA.trace(self.ops)

    def total_score(self, weights: tuple = (1.0, 1.0)) -> float:
        return weights[0] * self.s_p + weights[1] * self.s_v


def compute_s_p(steps: Sequence[ProofStep]) -> float:
    """Arithmetic mean of the steps' operator probabilities."""
    if not steps:
        raise ValueError("a proof needs at least one step")
    return sum(step.yes_probability for step in steps) / len(steps)


def compute_s_v(ops: Sequence[NatOp], veracity_dist: dict) -> float:
    """Probability mass on the label of the state the operators end in."""
    return veracity_dist[SHIPPED_DFA.run(ops).label]


def _lex_key(lengths: tuple) -> tuple:
    # Longest first span sorts earliest.
    return tuple(-x for x in lengths)


def _better(cand: tuple, best: Optional[tuple]) -> bool:
    # cand/best: (score, num_steps, lengths)
    if best is None:
        return True
    if cand[0] != best[0]:
        return cand[0] > best[0]
    if cand[1] != best[1]:
        return cand[1] > best[1]
    return _lex_key(cand[2]) < _lex_key(best[2])


def proof_from_segmentation(
    lengths: Sequence[int],
    lattice: SpanLattice,
    assignments: dict,
    veracity_dist: dict,
    aligned: Optional[dict] = None,
) -> Proof:
    steps = []
    pos = 0
    for length in lengths:
        span = MergedSpan(pos, length)
        assignment: NatOpAssignment = assignments[span]
        aligned_span: Optional[AlignedSpan] = (aligned or {}).get(span)
        steps.append(
            ProofStep(
                claim_span=span,
                claim_text=lattice.span_text(span),
                natop=assignment.natop,
                yes_probability=assignment.yes_probability,
                evidence_text=aligned_span.evidence_text if aligned_span else None,
                evidence_sentence_idx=(
                    aligned_span.evidence_sentence_idx if aligned_span else None
                ),
            )
        )
        pos += length
    steps = tuple(steps)
    ops = [s.natop for s in steps]
    final_state = SHIPPED_DFA.run(ops)
    return Proof(
        steps=steps,
        s_p=compute_s_p(steps),
        s_v=veracity_dist[final_state.label],
        final_state=final_state,
        label=final_state.label,
    )


def _search_enumerate(lattice, assignments, veracity_dist, weights, allowed_states):
    l = len(lattice.base_chunks)
    best = None
    for lengths in iter_segmentations(l, lattice.max_merge):
        state = VeracityState.S
        total_prob = 0.0
        pos = 0
        for length in lengths:
            assignment = assignments[MergedSpan(pos, length)]
            state = SHIPPED_DFA.step(state, assignment.natop)
            total_prob += assignment.yes_probability
            pos += length
        if allowed_states is not None and state not in allowed_states:
            continue
        score = (
            weights[0] * (total_prob / len(lengths))
            + weights[1] * veracity_dist[state.label]
        )
        cand = (score, len(lengths), lengths)
        if _better(cand, best):
            best = cand
    return best


def _search_dp(lattice, assignments, veracity_dist, weights, allowed_states):
    l = len(lattice.base_chunks)
    m = lattice.max_merge
    # cells[(pos, state, count)] = (prob_sum, lengths); step count is part of
    # the state because the proof score averages (is non-additive).
    cells = {(0, VeracityState.S, 0): (0.0, ())}
    for pos in range(l):
        for (p, state, count), (prob_sum, lengths) in list(cells.items()):
            if p != pos:
                continue
            for length in range(1, min(m, l - pos) + 1):
                assignment = assignments[MergedSpan(pos, length)]
                nxt = (
                    pos + length,
                    SHIPPED_DFA.step(state, assignment.natop),
                    count + 1,
                )
                entry = (prob_sum + assignment.yes_probability, lengths + (length,))
                old = cells.get(nxt)
                if (
                    old is None
                    or entry[0] > old[0]
                    or (entry[0] == old[0] and _lex_key(entry[1]) < _lex_key(old[1]))
                ):
                    cells[nxt] = entry
    best = None
    for (pos, state, count), (prob_sum, lengths) in cells.items():
        if pos != l or count == 0:
            continue
        if allowed_states is not None and state not in allowed_states:
            continue
        score = weights[0] * (prob_sum / count) + weights[1] * veracity_dist[state.label]
        cand = (score, count, lengths)
        if _better(cand, best):
            best = cand
    return best


def select_proof(
    lattice: SpanLattice,
    assignments: dict,
    veracity_dist: dict,
    mode: str = "auto",
    weights: tuple = (1.0, 1.0),
    enumeration_cutoff: int = 4096,
    label_mode: str = "three_way",
    aligned: Optional[dict] = None,
) -> Proof:
    """Return the highest-scoring proof over all segmentations.

    ``mode`` is "enumerate", "dp", or "auto" (enumerate while the number of
    segmentations stays within ``enumeration_cutoff``).  In binary label
    mode, proofs terminating in N are skipped during selection; when every
    proof terminates in N the three-way winner is returned and the caller
    decides the verdict from the veracity distribution.
    """
    l = len(lattice.base_chunks)
    for span in lattice.spans:
        if span not in assignments:
            raise ValueError(f"missing assignment for lattice span {span}")
    if mode == "auto":
        mode = "enumerate" if count_segmentations(l, lattice.max_merge) <= enumeration_cutoff else "dp"
    if mode not in ("enumerate", "dp"):
        raise ValueError(f"unknown search mode {mode!r}")
    allowed = None
    if label_mode == "binary":
        allowed = (VeracityState.S, VeracityState.R)
    elif label_mode != "three_way":
        raise ValueError(f"unknown label mode {label_mode!r}")

    search = _search_enumerate if mode == "enumerate" else _search_dp
    best = search(lattice, assignments, veracity_dist, weights, allowed)
    if best is None and allowed is not None:
        best = search(lattice, assignments, veracity_dist, weights, None)
    assert best is not None
    return proof_from_segmentation(best[2], lattice, assignments, veracity_dist, aligned)


def proof_to_dict(proof: Proof) -> dict:
    """JSON form; the states row mirrors the rendered proof table."""
    return {
        "steps": [
            {
                "claim_span": step.claim_text,
                "evidence_span": step.evidence_text,
                "evidence_sentence": step.evidence_sentence_idx,
                "natop": step.natop.value,
                "prob": step.yes_probability,
            }
            for step in proof.steps
        ],
        "s_p": proof.s_p,
        "s_v": proof.s_v,
        "label": proof.label,
        "states": [state.value for state in proof.state_trace()[1:]],
    }
