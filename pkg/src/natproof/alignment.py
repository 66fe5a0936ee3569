"""Claim-to-evidence span alignment.

Word-level links are computed per evidence sentence (by a pluggable aligner;
the built-in one is lexical), projected onto each lattice span as the
contiguous evidence token range covering all linked tokens, and the best
evidence span across sentences is chosen by similarity, down-weighted
multiplicatively by retrieval rank.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import httpx

from natproof.chunking import MergedSpan, SpanLattice, TokenizedText


@dataclass(frozen=True)
class WordAlignment:
    """Links (claim_token_idx, evidence_token_idx) for one evidence sentence."""

    evidence_sentence_idx: int
    links: frozenset

    def evidence_indices_for(self, claim_token_range: tuple) -> list:
        lo, hi = claim_token_range
        return sorted(e for c, e in self.links if lo <= c < hi)


@dataclass(frozen=True)
class AlignedSpan:
    """A claim span paired with its chosen evidence span from one sentence."""

    claim_span: MergedSpan
    claim_text: str
    evidence_text: str
    evidence_sentence_idx: int
    similarity: float
    weighted_score: float = float("nan")


class AlignerBackend(Protocol):
    def align(self, claim: TokenizedText, evidence: TokenizedText) -> WordAlignment: ...


class SimilarityBackend(Protocol):
    def similarity(self, a: str, b: str) -> float: ...


# --- built-in lexical aligner -----------------------------------------------

_IRREGULAR_LEMMAS = {
    "wrote": "write",
    "written": "write",
    "spoke": "speak",
    "spoken": "speak",
    "broke": "break",
    "broken": "break",
    "chose": "choose",
    "chosen": "choose",
    "drove": "drive",
    "driven": "drive",
    "gave": "give",
    "given": "give",
    "took": "take",
    "taken": "take",
    "made": "make",
    "began": "begin",
    "begun": "begin",
    "sang": "sing",
    "sung": "sing",
    "won": "win",
    "held": "hold",
    "found": "find",
    "built": "build",
    "sold": "sell",
    "told": "tell",
    "bought": "buy",
    "brought": "bring",
    "taught": "teach",
    "caught": "catch",
    "ran": "run",
    "children": "child",
    "men": "man",
    "women": "woman",
    "people": "person",
}

_SUFFIXES = ("ing", "ed", "ies", "es", "s", "e")


def stem(token: str) -> str:
    """Light, deterministic stem: irregular lemma lookup then one suffix strip."""
    word = token.casefold()
    word = _IRREGULAR_LEMMAS.get(word, word)
    for suffix in _SUFFIXES:
        if word.endswith(suffix) and len(word) - len(suffix) >= 3:
            word = word[: -len(suffix)]
            break
    return word


class LexicalAligner:
    """Links each claim token to its best evidence token.

    Match priority: exact surface, then case-folded surface, then shared
    stem of length >= 4.  The leftmost evidence token wins ties, and a claim
    token gets at most one link.
    """

    MIN_STEM_LEN = 4

    def align(self, claim: TokenizedText, evidence: TokenizedText) -> WordAlignment:
        ev_surfaces = evidence.surfaces()
        ev_folded = [s.casefold() for s in ev_surfaces]
        ev_stems = [stem(s) for s in ev_surfaces]
        links = set()
        for ci, tok in enumerate(claim.tokens):
            target = self._best_match(tok.surface, ev_surfaces, ev_folded, ev_stems)
            if target is not None:
                links.add((ci, target))
        return WordAlignment(evidence_sentence_idx=0, links=frozenset(links))

    def _best_match(self, surface, ev_surfaces, ev_folded, ev_stems) -> Optional[int]:
        for ei, ev in enumerate(ev_surfaces):
            if ev == surface:
                return ei
        folded = surface.casefold()
        for ei, ev in enumerate(ev_folded):
            if ev == folded:
                return ei
        stemmed = stem(surface)
        if len(stemmed) >= self.MIN_STEM_LEN:
            for ei, ev in enumerate(ev_stems):
                if ev == stemmed:
                    return ei
        return None


def builtin_lexical_align(claim: TokenizedText, evidence: TokenizedText) -> WordAlignment:
    return LexicalAligner().align(claim, evidence)


class HttpAlignerBackend:
    """Client for an external aligner service speaking the /v1/align protocol."""

    def __init__(self, endpoint: str, client: Optional[httpx.Client] = None, timeout: float = 30.0):
        self.endpoint = endpoint.rstrip("/")
        self._client = client or httpx.Client(timeout=timeout)

    def align(self, claim: TokenizedText, evidence: TokenizedText) -> WordAlignment:
        payload = {"source": claim.surfaces(), "target": evidence.surfaces()}
        response = self._client.post(f"{self.endpoint}/v1/align", json=payload)
        response.raise_for_status()
        links = frozenset((int(i), int(j)) for i, j in response.json()["links"])
        return WordAlignment(evidence_sentence_idx=0, links=links)


# --- similarity ---------------------------------------------------------------

class LexicalSimilarity:
    """Dice coefficient over case-folded token sets; 1.0 for identical texts."""

    def similarity(self, a: str, b: str) -> float:
        ta = set(s.casefold() for s in TokenizedText.from_text(a).surfaces())
        tb = set(s.casefold() for s in TokenizedText.from_text(b).surfaces())
        if not ta and not tb:
            return 1.0
        if not ta or not tb:
            return 0.0
        return 2.0 * len(ta & tb) / (len(ta) + len(tb))


# --- span projection and evidence selection -----------------------------------

def project_span(
    claim_span: MergedSpan,
    lattice: SpanLattice,
    wa: WordAlignment,
    evidence: TokenizedText,
) -> Optional[tuple]:
    """Contiguous evidence token range [lo, hi) covering all linked tokens.

    None when no token of the claim span is linked.  The contiguous cover is
    deliberate: evidence spans must read as text for question templates.
    """
    token_range = lattice.span_token_range(claim_span)
    linked = wa.evidence_indices_for(token_range)
    if not linked:
        return None
    return (min(linked), max(linked) + 1)


def evidence_span_text(evidence: TokenizedText, token_range: tuple) -> str:
    lo, hi = token_range
    return evidence.text[evidence.tokens[lo].start : evidence.tokens[hi - 1].end]


def select_evidence_span(
    candidates: Sequence[AlignedSpan],
    rank_decay: float = 0.8,
) -> Optional[AlignedSpan]:
    """Best candidate by similarity * rank_decay ** rank.

    The rank is the candidate's evidence sentence index (evidence arrives in
    retrieval order).  Ranks weight multiplicatively so a later sentence
    must beat an earlier one by a margin; ties fall to the lower rank.
    """
    if not 0.0 < rank_decay <= 1.0:
        raise ValueError("rank_decay must be in (0, 1]")
    best: Optional[AlignedSpan] = None
    for cand in candidates:
        weighted = cand.similarity * rank_decay ** cand.evidence_sentence_idx
        scored = AlignedSpan(
            claim_span=cand.claim_span,
            claim_text=cand.claim_text,
            evidence_text=cand.evidence_text,
            evidence_sentence_idx=cand.evidence_sentence_idx,
            similarity=cand.similarity,
            weighted_score=weighted,
        )
        if best is None or scored.weighted_score > best.weighted_score or (
            scored.weighted_score == best.weighted_score
            and scored.evidence_sentence_idx < best.evidence_sentence_idx
        ):
            best = scored
    return best


def align_lattice(
    lattice: SpanLattice,
    evidence_sentences: Sequence[TokenizedText],
    aligner: Optional[AlignerBackend] = None,
    sim: Optional[SimilarityBackend] = None,
    rank_decay: float = 0.8,
) -> dict:
    """Choose an evidence span (or None) for every lattice span.

    Word alignment runs once per evidence sentence; each lattice span then
    projects those links and competes its per-sentence candidates on
    rank-weighted similarity.
    """
    claim = lattice.base_chunks[0].source
    aligner = aligner or LexicalAligner()
    sim = sim or LexicalSimilarity()
    alignments = []
    for j, sentence in enumerate(evidence_sentences):
        wa = aligner.align(claim, sentence)
        alignments.append(WordAlignment(evidence_sentence_idx=j, links=wa.links))

    chosen: dict = {}
    for span in lattice.spans:
        span_text = lattice.span_text(span)
        candidates = []
        for j, (sentence, wa) in enumerate(zip(evidence_sentences, alignments)):
            token_range = project_span(span, lattice, wa, sentence)
            if token_range is None:
                continue
            ev_text = evidence_span_text(sentence, token_range)
            candidates.append(
                AlignedSpan(
                    claim_span=span,
                    claim_text=span_text,
                    evidence_text=ev_text,
                    evidence_sentence_idx=j,
                    similarity=sim.similarity(span_text, ev_text),
                )
            )
        chosen[span] = select_evidence_span(candidates, rank_decay=rank_decay)
    return chosen
