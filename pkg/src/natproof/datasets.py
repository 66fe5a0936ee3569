"""Claim/evidence ingestion, training-pair export, and evaluation metrics."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Optional, Sequence

from natproof.natlog import SCORABLE_NATOPS, NatOp, VERACITY_LABELS
from natproof.qa import TemplateSet, evidence_block, load_templates

_LABEL_ALIASES = {
    "SUPPORTS": "Supports",
    "REFUTES": "Refutes",
    "NOT ENOUGH INFO": "Not enough info",
    "Supports": "Supports",
    "Refutes": "Refutes",
    "Not enough info": "Not enough info",
}


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class ClaimRecord:
    id: object
    claim: str
    evidence: tuple  # ((title, sentence), ...) in retrieval rank order
    label: Optional[str] = None


@dataclass(frozen=True)
class GoldProofStep:
    claim_span: str
    evidence_span: str
    natop: NatOp


@dataclass(frozen=True)
class GoldProof:
    claim_id: object
    steps: tuple


@dataclass(frozen=True)
class QaTrainingPair:
    input: str
    answer: str
    polarity: str  # "positive" | "negative"
    source_claim_id: object


def load_claims(path: str, format: str = "fever_jsonl", k: int = 5) -> list:
    """One JSON object per line: {id, claim, label?, evidence: [[title, text], ...]}.

    Evidence arrives in retrieval rank order and is truncated to the top k.
    """
    if format != "fever_jsonl":
        raise DatasetError(f"unknown dataset format {format!r}")
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{line_no}: malformed JSON: {exc}") from exc
            try:
                raw_label = obj.get("label")
                label = None
                if raw_label is not None:
                    if raw_label not in _LABEL_ALIASES:
                        raise DatasetError(f"{path}:{line_no}: unknown label {raw_label!r}")
                    label = _LABEL_ALIASES[raw_label]
                evidence = tuple(
                    (str(title), str(text)) for title, text in obj["evidence"][:k]
                )
                records.append(
                    ClaimRecord(id=obj["id"], claim=obj["claim"], evidence=evidence, label=label)
                )
            except DatasetError:
                raise
            except (KeyError, TypeError, ValueError) as exc:
                raise DatasetError(f"{path}:{line_no}: bad record: {exc}") from exc
    return records


def dump_claims(records: Sequence[ClaimRecord], path: str):
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            obj = {"id": record.id, "claim": record.claim, "evidence": [list(e) for e in record.evidence]}
            if record.label is not None:
                obj["label"] = record.label
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_gold_proofs(path: str) -> list:
    """JSONL of {claim_id, steps: [{claim_span, evidence_span, natop}]}."""
    proofs = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                steps = tuple(
                    GoldProofStep(
                        claim_span=s["claim_span"],
                        evidence_span=s["evidence_span"],
                        natop=NatOp(s["natop"]),
                    )
                    for s in obj["steps"]
                )
                proofs.append(GoldProof(claim_id=obj["claim_id"], steps=steps))
            except (KeyError, TypeError, ValueError) as exc:
                raise DatasetError(f"{path}:{line_no}: bad gold proof: {exc}") from exc
    return proofs


def export_training_pairs(
    golds: Sequence[GoldProof],
    negatives_per_step: int,
    seed: int,
    templates: Optional[TemplateSet] = None,
    claims: Optional[Sequence[ClaimRecord]] = None,
) -> list:
    """Question-answer pairs from gold proofs.

    Each gold step yields one positive pair per template of its operator
    (independence steps have no question and yield none) and
    ``negatives_per_step`` negatives asking a uniformly random wrong
    scorable operator, answered No.  Labeled claims, when given, also yield
    one positive veracity pair per veracity template.
    """
    if negatives_per_step < 0:
        raise ValueError("negatives_per_step must be >= 0")
    templates = templates or load_templates()
    rng = random.Random(seed)
    pairs = []
    for gold in golds:
        for step in gold.steps:
            if step.natop is not NatOp.INDEPENDENCE:
                for template in templates.for_natop(step.natop):
                    pairs.append(
                        QaTrainingPair(
                            input=template.fill(
                                claim_span=step.claim_span, evidence_span=step.evidence_span
                            ),
                            answer="Yes",
                            polarity="positive",
                            source_claim_id=gold.claim_id,
                        )
                    )
            wrong_pool = [op for op in SCORABLE_NATOPS if op is not step.natop]
            for _ in range(negatives_per_step):
                wrong = rng.choice(wrong_pool)
                template = rng.choice(templates.for_natop(wrong))
                pairs.append(
                    QaTrainingPair(
                        input=template.fill(
                            claim_span=step.claim_span, evidence_span=step.evidence_span
                        ),
                        answer="No",
                        polarity="negative",
                        source_claim_id=gold.claim_id,
                    )
                )
    for record in claims or ():
        if record.label is None or not record.evidence:
            continue
        block = evidence_block(record.evidence)
        for template in templates.veracity():
            pairs.append(
                QaTrainingPair(
                    input=template.fill(claim=record.claim, evidence_block=block),
                    answer=record.label,
                    polarity="positive",
                    source_claim_id=record.id,
                )
            )
    return pairs


def dump_training_pairs(pairs: Sequence[QaTrainingPair], path: str):
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(
                json.dumps(
                    {
                        "input": pair.input,
                        "answer": pair.answer,
                        "polarity": pair.polarity,
                        "source_claim_id": pair.source_claim_id,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def evaluate(predictions: Sequence[tuple], gold: Sequence[tuple]) -> dict:
    """Accuracy, macro-averaged F1, and a 3x3 confusion table.

    Macro F1 is the unweighted mean over the three labels; a label with no
    gold and no predicted instances contributes an F1 of zero.
    """
    if not predictions:
        raise DatasetError("no predictions to evaluate")
    gold_by_id = dict(gold)
    if len(gold_by_id) != len(gold):
        raise DatasetError("duplicate ids in gold labels")
    total = 0
    correct = 0
    confusion = {g: {p: 0 for p in VERACITY_LABELS} for g in VERACITY_LABELS}
    for claim_id, predicted in predictions:
        if claim_id not in gold_by_id:
            raise DatasetError(f"prediction for unknown id {claim_id!r}")
        expected = gold_by_id[claim_id]
        if expected not in confusion or predicted not in confusion:
            raise DatasetError(f"unknown label in evaluation: {expected!r} / {predicted!r}")
        confusion[expected][predicted] += 1
        total += 1
        if predicted == expected:
            correct += 1
    f1_scores = []
    for label in VERACITY_LABELS:
        tp = confusion[label][label]
        fn = sum(confusion[label][p] for p in VERACITY_LABELS) - tp
        fp = sum(confusion[g][label] for g in VERACITY_LABELS) - tp
        denom = 2 * tp + fp + fn
        f1_scores.append(2 * tp / denom if denom else 0.0)
    return {
        "accuracy": correct / total,
        "macro_f1": sum(f1_scores) / len(f1_scores),
        "confusion": confusion,
    }
