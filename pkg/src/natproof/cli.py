"""Command-line entry points.

Subcommands: ``verify`` (single claim or batch), ``eval`` (metrics plus
verdict JSONL), ``export-qa`` (training-pair export from gold proofs), and
``dump-dfa`` (the transition table as text or JSON).  Exit codes: 0 success,
1 any claim failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

from natproof.datasets import (
    ClaimRecord,
    DatasetError,
    dump_training_pairs,
    export_training_pairs,
    load_claims,
    load_gold_proofs,
)
from natproof.natlog import SHIPPED_DFA, NatOp, VeracityState
from natproof.pipeline import (
    EngineConfig,
    PipelineError,
    make_backends,
    render_proof,
    run_eval,
    verdict_json_line,
    verify,
)
from natproof.qa import QaError


def _add_engine_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--backend", choices=["oracle", "replay", "http"])
    parser.add_argument("--endpoint", help="scoring service URL (http backend)")
    parser.add_argument("--store", dest="replay_store", help="replay store path")
    parser.add_argument("--templates", dest="template_path", help="question template file")
    parser.add_argument("--stopwords", dest="stopword_path", help="stopword file")
    parser.add_argument("--label-mode", choices=["three_way", "binary"], dest="label_mode")
    parser.add_argument("--jobs", type=int, help="parallel claims (default 1)")


def _build_config(args: argparse.Namespace) -> EngineConfig:
    overrides = {
        "backend": args.backend,
        "endpoint": args.endpoint,
        "replay_store": args.replay_store,
        "template_path": args.template_path,
        "stopword_path": args.stopword_path,
        "label_mode": args.label_mode,
        "jobs": args.jobs,
    }
    if args.config:
        return EngineConfig.from_file(args.config, **overrides)
    return EngineConfig().with_overrides(**overrides)


def _load_evidence_file(path: str) -> tuple:
    """One sentence per line; an optional title is separated by a tab."""
    sentences = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if "\t" in line:
                title, text = line.split("\t", 1)
            else:
                title, text = "", line
            sentences.append((title, text))
    return tuple(sentences)


def cmd_verify(args: argparse.Namespace) -> int:
    config = _build_config(args)
    if args.claim:
        if not args.evidence:
            print("error: --claim needs --evidence", file=sys.stderr)
            return 2
        records = [
            ClaimRecord(id=0, claim=args.claim, evidence=_load_evidence_file(args.evidence))
        ]
    else:
        records = load_claims(args.input, k=config.evidence_limit)
        if not records:
            print("error: no claims in input", file=sys.stderr)
            return 2
    backends = make_backends(config)
    failures = 0
    for i, record in enumerate(records):
        try:
            verdict = verify(record, config, backends)
        except (PipelineError, QaError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            failures += 1
            continue
        if args.render == "json":
            print(verdict_json_line(record, verdict))
        else:
            if i:
                print()
            print(f"Claim: {record.claim}")
            print(f"Verdict: {verdict.label}")
            print(render_proof(verdict.proof, args.render))
    return 1 if failures else 0


def cmd_eval(args: argparse.Namespace) -> int:
    config = _build_config(args)
    records = load_claims(args.data, k=config.evidence_limit)
    if not records:
        print("error: empty dataset", file=sys.stderr)
        return 2
    backends = make_backends(config)
    result = run_eval(records, config, backends)
    os.makedirs(args.out, exist_ok=True)
    verdicts_path = os.path.join(args.out, "verdicts.jsonl")
    with open(verdicts_path, "w", encoding="utf-8") as fh:
        for line in result.verdict_lines:
            fh.write(line + "\n")
    print(f"wrote {len(result.verdict_lines)} verdicts to {verdicts_path}")
    for failure in result.failures:
        print(f"claim {failure['id']!r} failed: {failure['error']}", file=sys.stderr)
    if result.metrics is None:
        print(f"error: metrics unavailable: {result.metrics_error}", file=sys.stderr)
        return 1
    metrics_path = os.path.join(args.out, "metrics.json")
    with open(metrics_path, "w", encoding="utf-8") as fh:
        json.dump(result.metrics, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"accuracy {result.metrics['accuracy']:.4f}  macro-F1 {result.metrics['macro_f1']:.4f}")
    return 1 if result.failures else 0


def cmd_export_qa(args: argparse.Namespace) -> int:
    from natproof.qa import load_templates

    golds = load_gold_proofs(args.gold)
    claims = load_claims(args.claims) if args.claims else None
    templates = load_templates(args.template_path) if args.template_path else None
    pairs = export_training_pairs(
        golds,
        negatives_per_step=args.negatives,
        seed=args.seed,
        claims=claims,
        templates=templates,
    )
    dump_training_pairs(pairs, args.out)
    print(f"wrote {len(pairs)} pairs to {args.out}")
    return 0


def cmd_dump_dfa(args: argparse.Namespace) -> int:
    table = SHIPPED_DFA.as_nested_dict()
    if args.format == "json":
        print(json.dumps(table, indent=2, sort_keys=True))
        return 0
    ops = [op.display for op in NatOp]
    width = max(len(o) for o in ops)
    print(" " * 6 + "  ".join(o.rjust(width) for o in ops))
    for state in VeracityState:
        row = [table[state.value][op].rjust(width) for op in ops]
        print(f"{state.value:<6}" + "  ".join(row))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="natproof", description="Natural-logic fact verification"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="verify one claim or a JSONL batch")
    group = p_verify.add_mutually_exclusive_group(required=True)
    group.add_argument("--claim", help="claim text")
    group.add_argument("--input", help="claims JSONL file")
    p_verify.add_argument("--evidence", help="evidence file (one sentence per line)")
    p_verify.add_argument(
        "--render", choices=["table", "inline", "json"], default="table"
    )
    _add_engine_flags(p_verify)
    p_verify.set_defaults(func=cmd_verify)

    p_eval = sub.add_parser("eval", help="batch evaluation with metrics")
    p_eval.add_argument("--data", required=True, help="labeled claims JSONL")
    p_eval.add_argument("--out", required=True, help="output directory")
    _add_engine_flags(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_export = sub.add_parser("export-qa", help="export QA training pairs")
    p_export.add_argument("--gold", required=True, help="gold proofs JSONL")
    p_export.add_argument("--claims", help="claims JSONL for veracity pairs")
    p_export.add_argument("--negatives", type=int, default=1)
    p_export.add_argument("--seed", type=int, default=0)
    p_export.add_argument("--templates", dest="template_path", help="question template file")
    p_export.add_argument("--out", required=True)
    p_export.set_defaults(func=cmd_export_qa)

    p_dump = sub.add_parser("dump-dfa", help="print the veracity transition table")
    p_dump.add_argument("--format", choices=["text", "json"], default="text")
    p_dump.set_defaults(func=cmd_dump_dfa)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DatasetError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (PipelineError, QaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
