"""Question scoring: templates, backends, and operator assignment.

Every scorable operator is predicted by filling its boolean question
templates with the claim and evidence span and asking a backend for
length-normalized log-probabilities of each answer choice.  The operator a
span pair receives is the one whose questions come back Yes (highest
probability wins when several do); a pair answering No everywhere, or a
claim span with no aligned evidence, falls through to independence.

Backends are interchangeable behind the same two-method surface: the rule
oracle is a deterministic offline scorer, the replay backend serves scores
recorded from a live run, and the HTTP backend speaks a small JSON protocol
to an external model service.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import re
import threading
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Protocol, Sequence

import httpx

from natproof.chunking import content_tokens, load_stopwords
from natproof.natlog import SCORABLE_NATOPS, NatOp, VERACITY_LABELS

YES_NO = ("Yes", "No")

#: Precedence for breaking exact probability ties among Yes-answered
#: operators: surface cues (string equality, negation words, one-token swap)
#: are more specific signals than bag-of-words containment.
_TIE_ORDER = (
    NatOp.EQUIVALENCE,
    NatOp.NEGATION,
    NatOp.ALTERNATION,
    NatOp.FORWARD_ENTAILMENT,
    NatOp.REVERSE_ENTAILMENT,
)


class QaError(Exception):
    pass


class UnrecordedPromptError(QaError):
    """Replay store has no entry for the requested prompt."""


@dataclass(frozen=True)
class QuestionTemplate:
    id: str
    target: str  # a scorable operator name, or "veracity"
    pattern: str
    choices: tuple

    def __post_init__(self):
        if self.target == "veracity":
            if tuple(self.choices) != VERACITY_LABELS:
                raise ValueError(
                    f"veracity template {self.id!r} must offer choices {list(VERACITY_LABELS)}"
                )
        else:
            op = NatOp(self.target)
            if op not in SCORABLE_NATOPS:
                raise ValueError(f"template {self.id!r} targets unscorable operator {self.target!r}")
            if tuple(self.choices) != YES_NO:
                raise ValueError(f"operator template {self.id!r} must offer choices ['Yes', 'No']")

    def fill(self, **spans: str) -> str:
        text = self.pattern
        for name, value in spans.items():
            text = text.replace("{" + name + "}", value)
        return text


@dataclass(frozen=True)
class TemplateSet:
    templates: tuple

    def for_natop(self, op: NatOp) -> list:
        return [t for t in self.templates if t.target == op.value]

    def veracity(self) -> list:
        return [t for t in self.templates if t.target == "veracity"]

    def __post_init__(self):
        for op in SCORABLE_NATOPS:
            if not self.for_natop(op):
                raise ValueError(f"template set has no question for {op.display}")
        if not self.veracity():
            raise ValueError("template set has no veracity template")


def load_templates(path: Optional[str] = None) -> TemplateSet:
    """Template file: UTF-8 JSON list of {id?, target, pattern, choices}."""
    if path is None:
        raw = resources.files("natproof.data").joinpath("templates.json").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read()
    entries = json.loads(raw)
    templates = []
    for i, entry in enumerate(entries):
        templates.append(
            QuestionTemplate(
                id=entry.get("id", f"{entry['target']}-{i}"),
                target=entry["target"],
                pattern=entry["pattern"],
                choices=tuple(entry["choices"]),
            )
        )
    return TemplateSet(templates=tuple(templates))


class QaBackend(Protocol):
    def score(self, input: str, choices: Sequence[str]) -> list: ...


@dataclass(frozen=True)
class NatOpAssignment:
    """Outcome of operator prediction for one aligned span pair."""

    natop: NatOp
    yes_probability: float
    per_template_scores: tuple = ()

    def __post_init__(self):
        if self.natop is NatOp.INDEPENDENCE and self.yes_probability != 0.5:
            raise ValueError("independence carries the boolean floor probability 0.5")


def evidence_block(evidence_sentences: Sequence[tuple]) -> str:
    """`[title] sentence </s> [title] sentence ...`; empty titles drop the brackets."""
    parts = [f"[{title}] {text}" if title else text for title, text in evidence_sentences]
    return " </s> ".join(parts)


def build_evidence_input(claim: str, evidence_sentences: Sequence[tuple]) -> str:
    """The claim followed by the evidence block, separated by end-of-sentence tokens."""
    block = evidence_block(evidence_sentences)
    return f"{claim} </s> {block}" if block else claim


def score_natop(
    claim_span: str,
    evidence_span: str,
    op: NatOp,
    backend: QaBackend,
    templates: Optional[TemplateSet] = None,
) -> tuple:
    """Average per-answer log-probabilities over the operator's templates."""
    if op is NatOp.INDEPENDENCE:
        raise ValueError("independence has no questions; it is assigned by fallthrough")
    templates = templates or load_templates()
    op_templates = templates.for_natop(op)
    sum_yes = 0.0
    sum_no = 0.0
    details = []
    for template in op_templates:
        filled = template.fill(claim_span=claim_span, evidence_span=evidence_span)
        log_yes, log_no = backend.score(filled, list(YES_NO))
        sum_yes += log_yes
        sum_no += log_no
        details.append((op.value, template.id, log_yes, log_no))
    n = len(op_templates)
    return sum_yes / n, sum_no / n, tuple(details)


def normalized_yes_probability(avg_log_yes: float, avg_log_no: float) -> float:
    """Softmax of the two averaged log-probabilities, i.e. P(Yes)."""
    return 1.0 / (1.0 + math.exp(avg_log_no - avg_log_yes))


def assign_natop(
    claim_span: str,
    evidence_span: Optional[str],
    backend: QaBackend,
    templates: Optional[TemplateSet] = None,
) -> NatOpAssignment:
    """Predict the operator for a span pair.

    No aligned evidence forces independence.  Otherwise all five scorable
    operators are asked; among those whose argmax answer is Yes the one with
    the highest normalized yes-probability wins, and an empty Yes set falls
    through to independence at the boolean floor of 0.5.
    """
    if evidence_span is None:
        return NatOpAssignment(natop=NatOp.INDEPENDENCE, yes_probability=0.5)
    templates = templates or load_templates()
    details = []
    yes_candidates = []
    for op in SCORABLE_NATOPS:
        try:
            avg_yes, avg_no, op_details = score_natop(
                claim_span, evidence_span, op, backend, templates
            )
        except QaError:
            raise
        except Exception as exc:
            raise QaError(
                f"backend failed scoring {op.display} for claim span {claim_span!r} "
                f"/ evidence span {evidence_span!r}: {exc}"
            ) from exc
        details.extend(op_details)
        if avg_yes >= avg_no:  # argmax over ("Yes", "No"); first index wins ties
            yes_candidates.append((op, normalized_yes_probability(avg_yes, avg_no)))
    if not yes_candidates:
        return NatOpAssignment(
            natop=NatOp.INDEPENDENCE, yes_probability=0.5, per_template_scores=tuple(details)
        )
    yes_candidates.sort(key=lambda pair: (-pair[1], _TIE_ORDER.index(pair[0])))
    op, prob = yes_candidates[0]
    return NatOpAssignment(natop=op, yes_probability=prob, per_template_scores=tuple(details))


def score_veracity(
    claim: str,
    evidence_sentences: Sequence[tuple],
    backend: QaBackend,
    templates: Optional[TemplateSet] = None,
) -> dict:
    """Distribution over the three veracity labels for the whole claim.

    Per-label length-normalized log-probabilities are averaged over the
    veracity templates and softmaxed; the result sums to one.
    """
    if not evidence_sentences:
        raise ValueError("veracity scoring needs at least one evidence sentence")
    templates = templates or load_templates()
    veracity_templates = templates.veracity()
    block = evidence_block(evidence_sentences)
    sums = [0.0] * len(VERACITY_LABELS)
    for template in veracity_templates:
        filled = template.fill(claim=claim, evidence_block=block)
        scores = backend.score(filled, list(VERACITY_LABELS))
        if len(scores) != len(VERACITY_LABELS):
            raise QaError(
                f"backend returned {len(scores)} scores for {len(VERACITY_LABELS)} choices"
            )
        sums = [s + x for s, x in zip(sums, scores)]
    avg = [s / len(veracity_templates) for s in sums]
    peak = max(avg)
    exp = [math.exp(a - peak) for a in avg]
    total = sum(exp)
    return {label: e / total for label, e in zip(VERACITY_LABELS, exp)}


# --- rule oracle ---------------------------------------------------------------

NEGATION_CUES = ("not", "no", "never", "incapable", "cannot", "unable")
_NEGATION_WORD_RE = re.compile(r"\b(?:%s)\b" % "|".join(NEGATION_CUES))
_NEGATION_NT_RE = re.compile(r"n't\b")
_NEGATION_OTHER_THAN_RE = re.compile(r"\bother\s+than\b")
_BRACKET_TITLE_RE = re.compile(r"\[[^\]]*\]\s*")


def has_negation_cue(text: str) -> bool:
    lowered = text.casefold()
    return bool(
        _NEGATION_WORD_RE.search(lowered)
        or _NEGATION_NT_RE.search(lowered)
        or _NEGATION_OTHER_THAN_RE.search(lowered)
    )


def normalize_span(text: str) -> str:
    """Casefold, strip punctuation, collapse whitespace."""
    lowered = text.casefold()
    cleaned = re.sub(r"[^\w\s]|_", " ", lowered)
    return " ".join(cleaned.split())


class RuleOracleBackend:
    """Deterministic offline scorer driven by surface rules.

    The oracle recognizes the filled form of each template it was built
    with (placeholders become capture groups), recovers the two spans, and
    answers from lexical evidence:

    - equivalence: normalized spans are identical
    - forward entailment: evidence content tokens are a nonempty subset of
      the claim span's content tokens
    - reverse entailment: the converse
    - negation: exactly one side carries a negation cue
    - alternation: the sides swap exactly one content token and share the rest

    Veracity questions are answered by the same vocabulary: a one-sided
    negation cue refutes, full claim-token coverage supports, coverage of at
    least half the claim tokens refutes (a contradicted detail), anything
    weaker is undecidable.  The chosen answer scores log-probability 0.0,
    every other one -20.0.  Prompts that match no known template raise; the
    oracle only understands questions built from its own template set.
    """

    CHOSEN = 0.0
    REJECTED = -20.0

    def __init__(self, templates: Optional[TemplateSet] = None, stopword_path: Optional[str] = None):
        self._templates = templates or load_templates()
        self._stopwords = load_stopwords(stopword_path)
        # Most literal text first, so a generic pattern (e.g. the bare
        # "{claim} </s> {evidence_block}" form) cannot shadow a specific one.
        ordered = sorted(
            self._templates.templates,
            key=lambda t: len(re.sub(r"\{\w+\}", "", t.pattern)),
            reverse=True,
        )
        self._matchers = [
            (template, self._pattern_regex(template.pattern)) for template in ordered
        ]

    @staticmethod
    def _pattern_regex(pattern: str) -> re.Pattern:
        placeholder = re.compile(r"\\\{(\w+)\\\}")
        escaped = re.escape(pattern)
        names = placeholder.findall(escaped)
        for i, name in enumerate(names):
            greediness = "" if i == len(names) - 1 else "?"
            escaped = escaped.replace(
                re.escape("{" + name + "}"), f"(?P<{name}>.*{greediness})", 1
            )
        return re.compile("^" + escaped + "$", re.DOTALL)

    def score(self, input: str, choices: Sequence[str]) -> list:
        choices = list(choices)
        for template, regex in self._matchers:
            match = regex.match(input)
            if match is None:
                continue
            if template.target == "veracity":
                if choices != list(VERACITY_LABELS):
                    raise QaError(f"veracity question got unexpected choices {choices}")
                label = self._veracity_label(match["claim"], match["evidence_block"])
                return [self.CHOSEN if c == label else self.REJECTED for c in choices]
            if choices != list(YES_NO):
                raise QaError(f"operator question got unexpected choices {choices}")
            yes = self._answer_natop(
                NatOp(template.target), match["claim_span"], match["evidence_span"]
            )
            return [self.CHOSEN, self.REJECTED] if yes else [self.REJECTED, self.CHOSEN]
        raise QaError(f"rule oracle cannot parse prompt: {input!r}")

    def _content(self, text: str) -> frozenset:
        return frozenset(content_tokens(text, self._stopwords))

    def _answer_natop(self, op: NatOp, claim_span: str, evidence_span: str) -> bool:
        if op is NatOp.EQUIVALENCE:
            return normalize_span(claim_span) == normalize_span(evidence_span)
        claim_content = self._content(claim_span)
        evidence_content = self._content(evidence_span)
        if op is NatOp.FORWARD_ENTAILMENT:
            return bool(evidence_content) and evidence_content <= claim_content
        if op is NatOp.REVERSE_ENTAILMENT:
            return bool(claim_content) and claim_content <= evidence_content
        if op is NatOp.NEGATION:
            return has_negation_cue(claim_span) != has_negation_cue(evidence_span)
        if op is NatOp.ALTERNATION:
            return (
                len(claim_content - evidence_content) == 1
                and len(evidence_content - claim_content) == 1
            )
        raise ValueError(f"no rule for {op}")

    def _veracity_label(self, claim: str, evidence: str) -> str:
        evidence_text = _BRACKET_TITLE_RE.sub("", evidence)
        if has_negation_cue(claim) != has_negation_cue(evidence_text):
            return "Refutes"
        claim_content = self._content(claim)
        if not claim_content:
            return "Not enough info"
        evidence_content = self._content(evidence_text)
        if claim_content <= evidence_content:
            return "Supports"
        coverage = len(claim_content & evidence_content) / len(claim_content)
        if coverage >= 0.5:
            return "Refutes"
        return "Not enough info"


def rule_oracle_backend(
    templates: Optional[TemplateSet] = None, stopword_path: Optional[str] = None
) -> RuleOracleBackend:
    return RuleOracleBackend(templates=templates, stopword_path=stopword_path)


# --- record / replay -----------------------------------------------------------

def _prompt_key(input: str, choices: Sequence[str]) -> str:
    payload = json.dumps([input, list(choices)], ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ReplayBackend:
    """Serves scores recorded by RecordingBackend, keyed by prompt hash."""

    def __init__(self, store_path: str):
        self.store_path = store_path
        with open(store_path, encoding="utf-8") as fh:
            store = json.load(fh)
        self._entries = store["entries"]

    def score(self, input: str, choices: Sequence[str]) -> list:
        key = _prompt_key(input, choices)
        entry = self._entries.get(key)
        if entry is None:
            raise UnrecordedPromptError(
                f"unrecorded prompt (choices {list(choices)}): {input!r}"
            )
        return list(entry["log_probs"])


def replay_backend(store_path: str) -> ReplayBackend:
    return ReplayBackend(store_path)


class RecordingBackend:
    """Wraps a live backend and persists every response for later replay.

    The store is rewritten atomically on each new prompt; replaying an
    existing entry is served from memory without touching the inner backend.
    """

    def __init__(self, inner: QaBackend, store_path: str):
        self.inner = inner
        self.store_path = store_path
        self._entries: dict = {}
        self._lock = threading.Lock()
        if os.path.exists(store_path):
            with open(store_path, encoding="utf-8") as fh:
                self._entries = json.load(fh)["entries"]

    def score(self, input: str, choices: Sequence[str]) -> list:
        key = _prompt_key(input, choices)
        with self._lock:
            if key in self._entries:
                return list(self._entries[key]["log_probs"])
        log_probs = [float(x) for x in self.inner.score(input, choices)]
        with self._lock:
            self._entries[key] = {
                "input": input,
                "choices": list(choices),
                "log_probs": log_probs,
            }
            self._flush()
        return list(log_probs)

    def _flush(self):
        tmp_path = self.store_path + ".tmp"
        with open(tmp_path, "w", encoding="utf-8") as fh:
            json.dump({"entries": self._entries}, fh, ensure_ascii=False, indent=1, sort_keys=True)
            fh.write("\n")
        os.replace(tmp_path, self.store_path)


# --- HTTP backend ---------------------------------------------------------------

class HttpScoreBackend:
    """Client for the /v1/score protocol.

    Single form: POST {"input": str, "choices": [str]} -> {"log_probs": [float]}.
    Batch form: POST {"items": [...]} -> {"results": [{"log_probs": [...]}]}.
    Scores are length-normalized per choice on the server side.
    """

    def __init__(self, endpoint: str, client: Optional[httpx.Client] = None, timeout: float = 60.0):
        self.endpoint = endpoint.rstrip("/")
        self._client = client or httpx.Client(timeout=timeout)

    def score(self, input: str, choices: Sequence[str]) -> list:
        payload = {"input": input, "choices": list(choices)}
        data = self._post(payload)
        log_probs = data["log_probs"]
        if len(log_probs) != len(choices):
            raise QaError(
                f"scoring service returned {len(log_probs)} log-probs for {len(choices)} choices"
            )
        return [float(x) for x in log_probs]

    def score_batch(self, items: Sequence[tuple]) -> list:
        payload = {"items": [{"input": i, "choices": list(c)} for i, c in items]}
        data = self._post(payload)
        return [[float(x) for x in result["log_probs"]] for result in data["results"]]

    def _post(self, payload: dict) -> dict:
        try:
            response = self._client.post(f"{self.endpoint}/v1/score", json=payload)
            response.raise_for_status()
        except httpx.HTTPError as exc:
            raise QaError(f"scoring service request failed: {exc}") from exc
        return response.json()


# --- instrumentation and caching ------------------------------------------------

class CountingBackend:
    """Delegating wrapper that counts scoring calls (thread-safe)."""

    def __init__(self, inner: QaBackend):
        self.inner = inner
        self.calls = 0
        self._lock = threading.Lock()

    def score(self, input: str, choices: Sequence[str]) -> list:
        with self._lock:
            self.calls += 1
        return self.inner.score(input, choices)


class AssignmentCache:
    """Insert-or-read cache for span-pair assignments, safe under concurrency."""

    def __init__(self):
        self._data: dict = {}
        self._lock = threading.Lock()

    def get_or_compute(self, key, compute):
        with self._lock:
            if key in self._data:
                return self._data[key]
        value = compute()
        with self._lock:
            return self._data.setdefault(key, value)
