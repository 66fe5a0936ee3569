"""Claim chunking and the multi-granular span lattice.

A claim is first split into non-overlapping consecutive chunks by a
rule-based chunker (any callable with the same signature can be injected
instead).  Chunks without a content word are merged forward into their
successor, a trailing function-word-only chunk backward into its
predecessor, so that every chunk carries meaning.  The lattice then adds
every merge of up to ``max_merge`` consecutive chunks; a proof picks one
non-overlapping covering path through these spans.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Callable, NamedTuple, Optional, Sequence

_TOKEN_RE = re.compile(r"\w+(?:'\w+)*|[^\w\s]", re.UNICODE)


class ChunkingError(ValueError):
    pass


class Token(NamedTuple):
    surface: str
    start: int
    end: int


@dataclass(frozen=True)
class TokenizedText:
    """Raw text plus its token spans (non-overlapping, increasing offsets)."""

    text: str
    tokens: tuple

    def __post_init__(self):
        last = 0
        for tok in self.tokens:
            if not (last <= tok.start < tok.end <= len(self.text)):
                raise ChunkingError(f"token offsets out of order or out of bounds: {tok}")
            if self.text[tok.start : tok.end] != tok.surface:
                raise ChunkingError(f"token surface does not match text slice: {tok}")
            last = tok.end

    @classmethod
    def from_text(cls, text: str) -> "TokenizedText":
        tokens = tuple(
            Token(m.group(0), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)
        )
        return cls(text=text, tokens=tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def surfaces(self) -> list:
        return [t.surface for t in self.tokens]


@dataclass(frozen=True)
class Chunk:
    """Half-open token range [token_start, token_end) of a source text."""

    source: TokenizedText
    token_start: int
    token_end: int

    def __post_init__(self):
        if not (0 <= self.token_start < self.token_end <= len(self.source.tokens)):
            raise ChunkingError(
                f"invalid chunk bounds [{self.token_start}, {self.token_end})"
            )

    @property
    def text(self) -> str:
        toks = self.source.tokens
        return self.source.text[toks[self.token_start].start : toks[self.token_end - 1].end]

    @property
    def token_surfaces(self) -> list:
        return [t.surface for t in self.source.tokens[self.token_start : self.token_end]]


class MergedSpan(NamedTuple):
    """A run of ``chunk_len`` consecutive base chunks starting at ``chunk_start``."""

    chunk_start: int
    chunk_len: int


@dataclass(frozen=True)
class SpanLattice:
    """All candidate claim spans: every merge of 1..max_merge consecutive chunks."""

    base_chunks: tuple
    max_merge: int
    spans: tuple = field(init=False)

    def __post_init__(self):
        l = len(self.base_chunks)
        spans = tuple(
            MergedSpan(i, length)
            for i in range(l)
            for length in range(1, min(self.max_merge, l - i) + 1)
        )
        object.__setattr__(self, "spans", spans)

    def __len__(self) -> int:
        return len(self.spans)

    def span_chunks(self, span: MergedSpan) -> tuple:
        return self.base_chunks[span.chunk_start : span.chunk_start + span.chunk_len]

    def span_token_range(self, span: MergedSpan) -> tuple:
        chunks = self.span_chunks(span)
        return chunks[0].token_start, chunks[-1].token_end

    def span_text(self, span: MergedSpan) -> str:
        chunks = self.span_chunks(span)
        source = chunks[0].source
        start = source.tokens[chunks[0].token_start].start
        end = source.tokens[chunks[-1].token_end - 1].end
        return source.text[start:end]


# --- content-word predicate -------------------------------------------------

_WORD_CHAR_RE = re.compile(r"[^\W_]", re.UNICODE)


@lru_cache(maxsize=8)
def load_stopwords(path: Optional[str] = None) -> frozenset:
    """One token per line, UTF-8; blank lines and leading '#' comments skipped."""
    if path is None:
        text = resources.files("natproof.data").joinpath("stopwords.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.casefold())
    return frozenset(words)


def make_content_predicate(stopwords: Optional[frozenset] = None) -> Callable[[str], bool]:
    """A token is content iff it has a word character and is not a stopword."""
    if stopwords is None:
        stopwords = load_stopwords()

    def is_content_word(token: str) -> bool:
        if not _WORD_CHAR_RE.search(token):
            return False
        return token.casefold() not in stopwords

    return is_content_word


def content_tokens(text: str, stopwords: Optional[frozenset] = None) -> list:
    """Lowercased content tokens of a raw string, in order."""
    predicate = make_content_predicate(stopwords)
    return [
        t.surface.casefold()
        for t in TokenizedText.from_text(text).tokens
        if predicate(t.surface)
    ]


# --- rule-based chunker -----------------------------------------------------

_AUX_VERBS = frozenset(
    """am is are was were be been being has have had do does did
    will would shall should can could may might must""".split()
)
_PREPOSITIONS = frozenset(
    """in on at of to from by with for as into onto over under about
    after before between during through against without within across
    along around behind beneath beside beyond near than toward towards
    upon per off""".split()
)
_COORD_CONJ = frozenset("and but or nor yet so".split())


def _is_boundary_cue(surface: str) -> bool:
    lowered = surface.casefold()
    if not _WORD_CHAR_RE.search(surface):
        return True  # punctuation
    return lowered in _AUX_VERBS or lowered in _PREPOSITIONS or lowered in _COORD_CONJ


def rule_chunker(claim: TokenizedText) -> list:
    """Split before every boundary cue: auxiliary/copular verbs, prepositions,
    coordinating conjunctions, and punctuation."""
    boundaries = [0]
    for idx in range(1, len(claim.tokens)):
        if _is_boundary_cue(claim.tokens[idx].surface):
            boundaries.append(idx)
    boundaries.append(len(claim.tokens))
    return [
        Chunk(claim, start, end)
        for start, end in zip(boundaries, boundaries[1:])
        if start < end
    ]


ChunkerBackend = Callable[[TokenizedText], list]


def chunk_claim(claim: TokenizedText, chunker: Optional[ChunkerBackend] = None) -> list:
    """Initial chunking; non-overlapping, consecutive, exhaustive."""
    if len(claim.tokens) == 0:
        raise ChunkingError("cannot chunk an empty claim")
    chunks = (chunker or rule_chunker)(claim)
    if not chunks:
        raise ChunkingError("chunker returned no chunks")
    pos = 0
    for chunk in chunks:
        if chunk.token_start != pos:
            raise ChunkingError("chunker output is not consecutive and exhaustive")
        pos = chunk.token_end
    if pos != len(claim.tokens):
        raise ChunkingError("chunker output does not cover the claim")
    return chunks


def merge_function_word_chunks(
    chunks: Sequence[Chunk], is_content_word: Optional[Callable[[str], bool]] = None
) -> list:
    """Merge chunks without a content word into their subsequent chunk.

    Merges chain until the combined chunk contains a content word.  A
    trailing function-word-only chunk has no successor and is merged
    backward instead; only a claim with no content words at all stays a
    single content-free chunk.
    """
    if is_content_word is None:
        is_content_word = make_content_predicate()
    merged: list = []
    carry: Optional[Chunk] = None
    for chunk in chunks:
        if carry is not None:
            chunk = Chunk(chunk.source, carry.token_start, chunk.token_end)
            carry = None
        if any(is_content_word(s) for s in chunk.token_surfaces):
            merged.append(chunk)
        else:
            carry = chunk
    if carry is not None:
        if merged:
            last = merged.pop()
            merged.append(Chunk(last.source, last.token_start, carry.token_end))
        else:
            merged.append(carry)
    return merged


def build_lattice(chunks: Sequence[Chunk], max_merge: int = 4) -> SpanLattice:
    if not chunks:
        raise ChunkingError("cannot build a lattice from zero chunks")
    if max_merge < 1:
        raise ValueError("max_merge must be >= 1")
    return SpanLattice(base_chunks=tuple(chunks), max_merge=max_merge)


def count_segmentations(l: int, m: int = 4) -> int:
    """Number of ways to cover l chunks with consecutive spans of length <= m.

    counts[i] = sum of counts[i - j] for j in 1..m, counts[0] = 1.
    """
    if l < 0:
        return 0
    counts = [0] * (l + 1)
    counts[0] = 1
    for i in range(1, l + 1):
        counts[i] = sum(counts[i - j] for j in range(1, min(m, i) + 1))
    return counts[l]


def iter_segmentations(l: int, m: int = 4):
    """Yield every segmentation as a tuple of span lengths summing to l."""
    if l == 0:
        yield ()
        return
    for first in range(1, min(m, l) + 1):
        for rest in iter_segmentations(l - first, m):
            yield (first,) + rest
