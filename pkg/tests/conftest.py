from __future__ import annotations

from importlib import resources

import pytest

from natproof.datasets import load_claims
from natproof.pipeline import EngineConfig, make_backends
from natproof.qa import load_templates, rule_oracle_backend

FIXTURES = resources.files("natproof.data").joinpath("fixtures")
CLAIMS_PATH = str(FIXTURES / "claims.jsonl")
REPLAY_STORE_PATH = str(FIXTURES / "replay_store.json")
GOLD_PROOFS_PATH = str(FIXTURES / "gold_proofs.jsonl")


@pytest.fixture(scope="session")
def templates():
    return load_templates()


@pytest.fixture(scope="session")
def oracle(templates):
    return rule_oracle_backend(templates=templates)


@pytest.fixture(scope="session")
def fixture_records():
    return load_claims(CLAIMS_PATH)


@pytest.fixture()
def oracle_config():
    return EngineConfig(backend="oracle")


@pytest.fixture()
def replay_config():
    return EngineConfig(backend="replay", replay_store=REPLAY_STORE_PATH)


@pytest.fixture()
def oracle_backends(oracle_config):
    return make_backends(oracle_config)
