#!/usr/bin/env python3
"""Regenerate the shipped replay store from the fixture claims.

Runs the pipeline over data/fixtures/claims.jsonl with the rule oracle
wrapped in a recorder, so a replay backend can later serve the exact same
scores offline.  Run from the repository root after changing fixtures,
templates, or oracle rules:

    python scripts/build_fixtures.py
"""

import os
import sys

from natproof.datasets import load_claims
from natproof.pipeline import EngineConfig, make_backends, verify
from natproof.qa import RecordingBackend

FIXTURE_DIR = os.path.join(
    os.path.dirname(__file__), "..", "src", "natproof", "data", "fixtures"
)


def main() -> int:
    claims_path = os.path.abspath(os.path.join(FIXTURE_DIR, "claims.jsonl"))
    store_path = os.path.abspath(os.path.join(FIXTURE_DIR, "replay_store.json"))
    if os.path.exists(store_path):
        os.remove(store_path)

    config = EngineConfig(backend="oracle")
    backends = make_backends(config)
    backends.qa = RecordingBackend(backends.qa, store_path)

    records = load_claims(claims_path)
    mismatches = 0
    for record in records:
        verdict = verify(record, config, backends)
        ops = " ".join(step.natop.symbol for step in verdict.proof.steps)
        marker = "ok" if verdict.label == record.label else "MISMATCH"
        if verdict.label != record.label:
            mismatches += 1
        print(f"{marker:8s} {record.id}: {verdict.label:16s} [{ops}]")
    print(f"recorded store: {store_path}")
    if mismatches:
        print(f"{mismatches} verdicts disagree with fixture labels", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
