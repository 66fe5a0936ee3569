"""End-to-end orchestration: chunk, align, assign operators, search, render.

A claim record flows through chunking, lattice construction, evidence
alignment, per-span operator assignment (cached, so backend work stays
linear in the number of lattice spans), whole-claim veracity scoring, and
proof search.  The emitted verdict carries the winning proof and its state
trace; re-running the proof's operators through the automaton reproduces
the label.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Optional, Sequence

from natproof import alignment as alignment_mod
from natproof.alignment import LexicalAligner, LexicalSimilarity
from natproof.chunking import (
    ChunkingError,
    TokenizedText,
    build_lattice,
    chunk_claim,
    load_stopwords,
    make_content_predicate,
    merge_function_word_chunks,
)
from natproof.datasets import ClaimRecord, DatasetError, evaluate
from natproof.natlog import NatOp, VeracityState
from natproof.proofsearch import Proof, proof_to_dict, select_proof
from natproof.qa import (
    AssignmentCache,
    HttpScoreBackend,
    QaError,
    ReplayBackend,
    TemplateSet,
    assign_natop,
    load_templates,
    rule_oracle_backend,
    score_veracity,
)

ENDPOINT_ENV_VAR = "NATPROOF_SCORE_ENDPOINT"

#: Operator descriptions used for the human-readable inline rendering.
NATOP_DESCRIPTIONS = {
    NatOp.EQUIVALENCE: "Equivalent Spans",
    NatOp.FORWARD_ENTAILMENT: "Claim span follows from the evidence span",
    NatOp.NEGATION: "Claim span is negated by the evidence",
    NatOp.ALTERNATION: "Evidence span contradicts the claim span",
    NatOp.REVERSE_ENTAILMENT: "Incomplete Evidence",
    NatOp.INDEPENDENCE: "Unrelated claim span and evidence span",
}


class PipelineError(RuntimeError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    max_merge: int = 4
    evidence_limit: int = 5
    rank_decay: float = 0.8
    enumeration_cutoff: int = 4096
    backend: str = "oracle"  # oracle | replay | http
    endpoint: Optional[str] = None
    replay_store: Optional[str] = None
    template_path: Optional[str] = None
    stopword_path: Optional[str] = None
    label_mode: str = "three_way"  # three_way | binary
    weight_s_p: float = 1.0
    weight_s_v: float = 1.0
    jobs: int = 1

    def __post_init__(self):
        if self.max_merge < 1:
            raise ValueError("max_merge must be >= 1")
        if self.evidence_limit < 1:
            raise ValueError("evidence_limit must be >= 1")
        if not 0.0 < self.rank_decay <= 1.0:
            raise ValueError("rank_decay must be in (0, 1]")
        if self.backend not in ("oracle", "replay", "http"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.label_mode not in ("three_way", "binary"):
            raise ValueError(f"unknown label_mode {self.label_mode!r}")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    @classmethod
    def from_file(cls, path: str, **overrides) -> "EngineConfig":
        """Flat `key = value` lines; '#' starts a comment; flags override."""
        known = {f.name: f.type for f in fields(cls)}
        values: dict = {}
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{line_no}: expected 'key = value'")
                key, raw = (part.strip() for part in line.split("=", 1))
                if key not in known:
                    raise ValueError(f"{path}:{line_no}: unknown config key {key!r}")
                values[key] = _coerce(key, raw)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def with_overrides(self, **overrides) -> "EngineConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


_INT_KEYS = {"max_merge", "evidence_limit", "enumeration_cutoff", "jobs"}
_FLOAT_KEYS = {"rank_decay", "weight_s_p", "weight_s_v"}


def _coerce(key: str, raw: str):
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    return raw


@dataclass
class Backends:
    qa: object
    templates: TemplateSet
    aligner: object
    similarity: object
    chunker: Optional[object] = None
    content_predicate: Optional[object] = None
    assignment_cache: AssignmentCache = field(default_factory=AssignmentCache)


def make_backends(config: EngineConfig) -> Backends:
    templates = load_templates(config.template_path)
    if config.backend == "oracle":
        qa = rule_oracle_backend(templates=templates, stopword_path=config.stopword_path)
    elif config.backend == "replay":
        if not config.replay_store:
            raise ValueError("replay backend needs replay_store")
        qa = ReplayBackend(config.replay_store)
    else:
        endpoint = config.endpoint or os.environ.get(ENDPOINT_ENV_VAR)
        if not endpoint:
            raise ValueError(
                f"http backend needs an endpoint (flag/config or ${ENDPOINT_ENV_VAR})"
            )
        qa = HttpScoreBackend(endpoint)
    stopwords = load_stopwords(config.stopword_path)
    return Backends(
        qa=qa,
        templates=templates,
        aligner=LexicalAligner(),
        similarity=LexicalSimilarity(),
        content_predicate=make_content_predicate(stopwords),
    )


@dataclass(frozen=True)
class Verdict:
    label: str
    proof: Proof
    state_trace: tuple
    label_from_fallback: bool = False


def verify(record: ClaimRecord, config: EngineConfig, backends: Optional[Backends] = None) -> Verdict:
    """Run the full pipeline on one claim record."""
    backends = backends or make_backends(config)
    if not record.evidence:
        raise PipelineError(f"claim {record.id!r}: no evidence sentences")
    try:
        claim_text = TokenizedText.from_text(record.claim)
        chunks = merge_function_word_chunks(
            chunk_claim(claim_text, backends.chunker), backends.content_predicate
        )
        lattice = build_lattice(chunks, config.max_merge)
        evidence = record.evidence[: config.evidence_limit]
        evidence_texts = [TokenizedText.from_text(text) for _, text in evidence]
        aligned = alignment_mod.align_lattice(
            lattice,
            evidence_texts,
            aligner=backends.aligner,
            sim=backends.similarity,
            rank_decay=config.rank_decay,
        )
        assignments = {}
        for span in lattice.spans:
            best = aligned[span]
            claim_span_text = lattice.span_text(span)
            evidence_span_text = best.evidence_text if best else None
            assignments[span] = backends.assignment_cache.get_or_compute(
                (claim_span_text, evidence_span_text),
                lambda c=claim_span_text, e=evidence_span_text: assign_natop(
                    c, e, backends.qa, backends.templates
                ),
            )
        veracity_dist = score_veracity(record.claim, evidence, backends.qa, backends.templates)
        proof = select_proof(
            lattice,
            assignments,
            veracity_dist,
            mode="auto",
            weights=(config.weight_s_p, config.weight_s_v),
            enumeration_cutoff=config.enumeration_cutoff,
            label_mode=config.label_mode,
            aligned=aligned,
        )
    except (ChunkingError, QaError) as exc:
        raise PipelineError(f"claim {record.id!r}: {exc}") from exc

    label = proof.label
    fallback = False
    if config.label_mode == "binary" and proof.final_state is VeracityState.N:
        # Every proof ended undecided; fall back to the veracity distribution
        # restricted to the two decisive labels.
        label = max(("Supports", "Refutes"), key=lambda lab: veracity_dist[lab])
        fallback = True
    return Verdict(
        label=label,
        proof=proof,
        state_trace=tuple(proof.state_trace()),
        label_from_fallback=fallback,
    )


def render_proof(proof: Proof, style: str = "table") -> str:
    """Human-readable proof.

    "table" mirrors the four-row proof layout (claim span / evidence span /
    operator / automaton state per step); "inline" writes one sentence per
    step using the operator descriptions.
    """
    if style == "table":
        return _render_table(proof)
    if style == "inline":
        return _render_inline(proof)
    raise ValueError(f"unknown render style {style!r}")


_TABLE_ROWS = ("Claim Span", "Evidence Span", "NatOp", "DFA State")


def _render_table(proof: Proof) -> str:
    states = proof.state_trace()[1:]
    columns = []
    for step, state in zip(proof.steps, states):
        columns.append(
            (
                step.claim_text,
                step.evidence_text if step.evidence_text is not None else "-",
                step.natop.symbol,
                state.value,
            )
        )
    col_widths = [max(len(cell) for cell in col) for col in columns]
    label_width = max(len(r) for r in _TABLE_ROWS)
    lines = []
    for i, row_name in enumerate(_TABLE_ROWS):
        cells = [col[i].ljust(col_widths[j]) for j, col in enumerate(columns)]
        lines.append(" | ".join([row_name.ljust(label_width)] + cells).rstrip())
    return "\n".join(lines)


def _render_inline(proof: Proof) -> str:
    states = proof.state_trace()[1:]
    lines = []
    for i, (step, state) in enumerate(zip(proof.steps, states), start=1):
        description = NATOP_DESCRIPTIONS[step.natop]
        evidence = f" / {step.evidence_text!r}" if step.evidence_text is not None else ""
        lines.append(f"{i}. {step.claim_text!r}{evidence}: {description} [{state.value}]")
    return "\n".join(lines)


def verdict_to_dict(record: ClaimRecord, verdict: Verdict) -> dict:
    out = {"id": record.id, "label": verdict.label}
    out.update(proof_to_dict(verdict.proof))
    if verdict.label_from_fallback:
        out["label_from_fallback"] = True
    return out


def verdict_json_line(record: ClaimRecord, verdict: Verdict) -> str:
    return json.dumps(verdict_to_dict(record, verdict), ensure_ascii=False, sort_keys=True)


@dataclass
class EvalResult:
    verdict_lines: list
    failures: list  # [{"id": ..., "error": ...}]
    metrics: Optional[dict]
    metrics_error: Optional[str]

    @property
    def accuracy(self) -> Optional[float]:
        return self.metrics["accuracy"] if self.metrics else None


def run_eval(
    records: Sequence[ClaimRecord], config: EngineConfig, backends: Optional[Backends] = None
) -> EvalResult:
    """Verify every record, then score predictions against the labels.

    Per-claim failures are collected, not fatal; the run aborts only when
    every claim fails.  Verdict lines are produced even when metrics cannot
    be computed (e.g. unlabeled records).
    """
    if not records:
        raise DatasetError("empty dataset")
    backends = backends or make_backends(config)

    def work(record: ClaimRecord):
        return verify(record, config, backends)

    outcomes: list = [None] * len(records)
    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            futures = {i: pool.submit(work, record) for i, record in enumerate(records)}
            for i, future in futures.items():
                try:
                    outcomes[i] = ("ok", future.result())
                except Exception as exc:
                    outcomes[i] = ("error", str(exc))
    else:
        for i, record in enumerate(records):
            try:
                outcomes[i] = ("ok", work(record))
            except Exception as exc:
                outcomes[i] = ("error", str(exc))

    verdict_lines = []
    failures = []
    predictions = []
    for record, (status, payload) in zip(records, outcomes):
        if status == "ok":
            verdict_lines.append(verdict_json_line(record, payload))
            predictions.append((record.id, payload.label))
        else:
            failures.append({"id": record.id, "error": payload})
    if not predictions:
        raise PipelineError(f"all {len(records)} claims failed; first: {failures[0]['error']}")

    metrics = None
    metrics_error = None
    try:
        labeled = [(r.id, r.label) for r in records if r.label is not None]
        if len(labeled) != len(records):
            raise DatasetError("dataset has records without labels")
        gold_ids = {claim_id for claim_id, _ in labeled}
        metrics = evaluate([p for p in predictions if p[0] in gold_ids], labeled)
    except DatasetError as exc:
        metrics_error = str(exc)
    return EvalResult(
        verdict_lines=verdict_lines,
        failures=failures,
        metrics=metrics,
        metrics_error=metrics_error,
    )
