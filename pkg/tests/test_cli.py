from __future__ import annotations

import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from natproof.cli import main
from tests.conftest import CLAIMS_PATH, GOLD_PROOFS_PATH, REPLAY_STORE_PATH


def load_schema(name: str) -> dict:
    return json.loads(
        resources.files("natproof.data").joinpath(f"schemas/{name}").read_text("utf-8")
    )


@pytest.fixture()
def fig1_evidence(tmp_path):
    path = tmp_path / "evidence.txt"
    path.write_text("Anne Rice\tAnne Rice was born in New Orleans.\n", encoding="utf-8")
    return str(path)


class TestVerifyCommand:
    def test_single_claim_with_oracle(self, capsys, fig1_evidence):
        code = main(
            [
                "verify",
                "--claim",
                "Anne Rice was born in New Jersey.",
                "--evidence",
                fig1_evidence,
                "--backend",
                "oracle",
            ]
        )
        out = capsys.readouterr().out
        assert code == 0
        assert "Verdict: Refutes" in out
        assert "Claim Span" in out and "DFA State" in out
        claim_row = next(l for l in out.splitlines() if l.startswith("Claim Span"))
        assert claim_row.count(" | ") == 3  # three proof steps

    def test_json_render_is_schema_valid(self, capsys, fig1_evidence):
        code = main(
            [
                "verify",
                "--claim",
                "Anne Rice was born in New Jersey.",
                "--evidence",
                fig1_evidence,
                "--render",
                "json",
            ]
        )
        assert code == 0
        line = json.loads(capsys.readouterr().out.strip())
        jsonschema.validate(line, load_schema("verdict.schema.json"))
        assert line["label"] == "Refutes"
        assert len(line["steps"]) == 3

    def test_batch_input(self, capsys):
        code = main(["verify", "--input", CLAIMS_PATH, "--render", "json"])
        assert code == 0
        lines = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
        assert len(lines) == 10

    def test_missing_input_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["verify"])
        assert excinfo.value.code == 2

    def test_claim_without_evidence_is_usage_error(self, capsys):
        assert main(["verify", "--claim", "x"]) == 2

    def test_replay_with_unrecorded_prompt_fails_naming_it(self, capsys, tmp_path):
        evidence = tmp_path / "evidence.txt"
        evidence.write_text("T\tSomething entirely new.\n", encoding="utf-8")
        code = main(
            [
                "verify",
                "--claim",
                "A prompt the store has never seen.",
                "--evidence",
                str(evidence),
                "--backend",
                "replay",
                "--store",
                REPLAY_STORE_PATH,
            ]
        )
        err = capsys.readouterr().err
        assert code == 1
        assert "unrecorded prompt" in err
        assert "never seen" in err

    def test_inline_render(self, capsys, fig1_evidence):
        code = main(
            [
                "verify",
                "--claim",
                "Anne Rice was born in New Jersey.",
                "--evidence",
                fig1_evidence,
                "--render",
                "inline",
            ]
        )
        assert code == 0
        assert "Evidence span contradicts the claim span" in capsys.readouterr().out


class TestEvalCommand:
    def test_fixture_set_reaches_full_accuracy(self, capsys, tmp_path):
        out_dir = tmp_path / "run"
        code = main(
            [
                "eval",
                "--data",
                CLAIMS_PATH,
                "--out",
                str(out_dir),
                "--backend",
                "replay",
                "--store",
                REPLAY_STORE_PATH,
            ]
        )
        assert code == 0
        metrics = json.loads((out_dir / "metrics.json").read_text("utf-8"))
        jsonschema.validate(metrics, load_schema("metrics.schema.json"))
        assert metrics["accuracy"] == 1.0
        verdict_schema = load_schema("verdict.schema.json")
        lines = (out_dir / "verdicts.jsonl").read_text("utf-8").splitlines()
        assert len(lines) == 10
        for line in lines:
            jsonschema.validate(json.loads(line), verdict_schema)

    def test_parallel_eval_writes_identical_verdicts(self, capsys, tmp_path):
        outputs = []
        for jobs, name in ((1, "seq"), (4, "par")):
            out_dir = tmp_path / name
            code = main(
                [
                    "eval",
                    "--data",
                    CLAIMS_PATH,
                    "--out",
                    str(out_dir),
                    "--backend",
                    "replay",
                    "--store",
                    REPLAY_STORE_PATH,
                    "--jobs",
                    str(jobs),
                ]
            )
            assert code == 0
            outputs.append((out_dir / "verdicts.jsonl").read_bytes())
        assert outputs[0] == outputs[1]

    def test_empty_dataset_is_usage_error(self, capsys, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("", encoding="utf-8")
        assert main(["eval", "--data", str(empty), "--out", str(tmp_path / "o")]) == 2

    def test_known_macro_f1_case(self, capsys, tmp_path):
        # All-Supports predictions: 4 of 6 gold Supports, one Refutes, one NEI.
        data = tmp_path / "data.jsonl"
        rows = []
        for i in range(4):
            rows.append(
                {"id": i, "claim": f"Star {i} is bright.", "label": "SUPPORTS",
                 "evidence": [["T", f"Star {i} is bright."]]}
            )
        rows.append(
            {"id": 4, "claim": "Star 4 is bright.", "label": "REFUTES",
             "evidence": [["T", "Star 4 is bright."]]}
        )
        rows.append(
            {"id": 5, "claim": "Star 5 is bright.", "label": "NOT ENOUGH INFO",
             "evidence": [["T", "Star 5 is bright."]]}
        )
        data.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
        out_dir = tmp_path / "run"
        code = main(["eval", "--data", str(data), "--out", str(out_dir), "--backend", "oracle"])
        assert code == 0
        metrics = json.loads((out_dir / "metrics.json").read_text("utf-8"))
        assert metrics["accuracy"] == pytest.approx(4 / 6)
        assert metrics["macro_f1"] == pytest.approx(0.26666666, abs=1e-6)

    def test_config_file_with_flag_overrides_and_jobs(self, capsys, tmp_path):
        config = tmp_path / "engine.conf"
        config.write_text(
            "backend = oracle\njobs = 4\nmax_merge = 4\n", encoding="utf-8"
        )
        out_dir = tmp_path / "run"
        code = main(
            [
                "eval",
                "--data",
                CLAIMS_PATH,
                "--out",
                str(out_dir),
                "--config",
                str(config),
                "--backend",
                "replay",
                "--store",
                REPLAY_STORE_PATH,
            ]
        )
        assert code == 0
        metrics = json.loads((out_dir / "metrics.json").read_text("utf-8"))
        assert metrics["accuracy"] == 1.0

    def test_unlabeled_data_writes_verdicts_but_fails_metrics(self, capsys, tmp_path):
        data = tmp_path / "data.jsonl"
        data.write_text(
            json.dumps({"id": 1, "claim": "Pluto is a planet.",
                        "evidence": [["Pluto", "Pluto is not a planet."]]}) + "\n",
            encoding="utf-8",
        )
        out_dir = tmp_path / "run"
        code = main(["eval", "--data", str(data), "--out", str(out_dir)])
        assert code == 1
        assert (out_dir / "verdicts.jsonl").exists()
        assert not (out_dir / "metrics.json").exists()


class TestExportCommand:
    def make_templates(self, tmp_path) -> str:
        entries = [
            {"target": op, "pattern": f'{op}: "{{claim_span}}" vs "{{evidence_span}}"?',
             "choices": ["Yes", "No"]}
            for op in ["equivalence", "forward_entailment", "reverse_entailment",
                       "negation", "alternation"]
        ]
        entries.append(
            {"target": "veracity", "pattern": "{claim} | {evidence_block}",
             "choices": ["Supports", "Refutes", "Not enough info"]}
        )
        path = tmp_path / "templates.json"
        path.write_text(json.dumps(entries), encoding="utf-8")
        return str(path)

    def test_three_step_proof_with_one_negative_each(self, capsys, tmp_path):
        gold = tmp_path / "gold.jsonl"
        gold.write_text(
            json.dumps(
                {
                    "claim_id": 1,
                    "steps": [
                        {"claim_span": "a", "evidence_span": "x", "natop": "equivalence"},
                        {"claim_span": "b", "evidence_span": "y", "natop": "negation"},
                        {"claim_span": "c", "evidence_span": "z", "natop": "alternation"},
                    ],
                }
            )
            + "\n",
            encoding="utf-8",
        )
        out = tmp_path / "pairs.jsonl"
        code = main(
            [
                "export-qa",
                "--gold",
                str(gold),
                "--negatives",
                "1",
                "--seed",
                "7",
                "--templates",
                self.make_templates(tmp_path),
                "--out",
                str(out),
            ]
        )
        assert code == 0
        pairs = [json.loads(l) for l in out.read_text("utf-8").splitlines()]
        assert len(pairs) == 6  # 3 positives + 3 negatives with one template per op
        assert sum(1 for p in pairs if p["polarity"] == "positive") == 3

    def test_same_seed_writes_identical_files(self, capsys, tmp_path):
        templates = self.make_templates(tmp_path)
        args = [
            "export-qa", "--gold", GOLD_PROOFS_PATH, "--negatives", "2", "--seed", "11",
            "--templates", templates,
        ]
        out_a = tmp_path / "a.jsonl"
        out_b = tmp_path / "b.jsonl"
        assert main(args + ["--out", str(out_a)]) == 0
        assert main(args + ["--out", str(out_b)]) == 0
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_zero_negatives_writes_positives_only(self, capsys, tmp_path):
        out = tmp_path / "pairs.jsonl"
        code = main(
            ["export-qa", "--gold", GOLD_PROOFS_PATH, "--negatives", "0", "--out", str(out)]
        )
        assert code == 0
        pairs = [json.loads(l) for l in out.read_text("utf-8").splitlines()]
        assert pairs and all(p["polarity"] == "positive" for p in pairs)


class TestDumpDfaCommand:
    def test_json_has_all_18_transitions(self, capsys):
        assert main(["dump-dfa", "--format", "json"]) == 0
        table = json.loads(capsys.readouterr().out)
        jsonschema.validate(table, load_schema("dfa.schema.json"))
        assert sum(len(row) for row in table.values()) == 18
        assert table["S"]["Negation"] == "R"
        assert all(target == "N" for target in table["N"].values())

    def test_text_table(self, capsys):
        assert main(["dump-dfa"]) == 0
        out = capsys.readouterr().out
        assert "Equivalence" in out
        assert out.strip().splitlines()[1].startswith("S")


def test_console_script_smoke():
    proc = subprocess.run(
        [sys.executable, "-m", "natproof.cli", "dump-dfa", "--format", "json"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["S"]["Equivalence"] == "S"
