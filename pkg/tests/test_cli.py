import hashlib
import json
from pathlib import Path

import pytest

from cotbench.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def tree_digest(directory: Path) -> str:
    digest = hashlib.sha256()
    for path in sorted(directory.iterdir()):
        digest.update(path.name.encode())
        digest.update(path.read_bytes())
    return digest.hexdigest()


GEN = ["generate", "--task", "lis", "--train", "4:60,8:60", "--eval", "6:30",
       "--cot", "1.0", "--seed", "42"]


def test_generate_validate_analyze_cycle(tmp_path, capsys):
    out = tmp_path / "d"
    code, stdout, _ = run(capsys, *GEN, "--out", str(out))
    assert code == EXIT_OK
    assert "150 records" in stdout
    for name in ("train.jsonl", "eval.jsonl", "manifest.json", "vocab.txt"):
        assert (out / name).exists()
    assert run(capsys, "validate", str(out))[0] == EXIT_OK
    ana = tmp_path / "a"
    code, stdout, _ = run(capsys, "analyze", str(out), "--out", str(ana))
    assert code == EXIT_OK
    assert (ana / "coverage.csv").exists() and (ana / "kl.csv").exists()


def test_generate_is_idempotent(tmp_path, capsys):
    d1, d2 = tmp_path / "1", tmp_path / "2"
    run(capsys, *GEN, "--out", str(d1))
    run(capsys, *GEN, "--out", str(d2))
    assert tree_digest(d1) == tree_digest(d2)


def test_generate_counts_in_manifest(tmp_path, capsys):
    out = tmp_path / "d"
    run(capsys, *GEN, "--out", str(out))
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["counts"] == {"train": {"4": 60, "8": 60},
                                  "eval": {"6": 30}}


def test_cot_zero_gives_qa_targets(tmp_path, capsys):
    out = tmp_path / "d"
    run(capsys, "generate", "--task", "lis", "--train", "4:10", "--eval",
        "6:5", "--cot", "0.0", "--seed", "1", "--out", str(out))
    for line in (out / "train.jsonl").read_text().splitlines():
        record = json.loads(line)
        assert len(record["target"]) == 2
        assert record["target"][1] == "<eos>"


def test_ervc_level_syntax(tmp_path, capsys):
    out = tmp_path / "d"
    code, _, _ = run(capsys, "generate", "--task", "ervc", "--train",
                     "2x1:10,4x3:10", "--eval", "3x2:5", "--no-dedup",
                     "--seed", "2", "--out", str(out))
    assert code == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["counts"]["train"] == {"2x1": 10, "4x3": 10}


def test_bad_level_spec_is_usage_error(tmp_path, capsys):
    code, _, err = run(capsys, "generate", "--task", "lis", "--train",
                       "bogus", "--eval", "6:1", "--out", str(tmp_path))
    assert code == EXIT_USAGE
    assert "bogus" in err


def test_unknown_flag_is_usage_error(capsys):
    assert run(capsys, "--nope")[0] == EXIT_USAGE


def test_validate_empty_directory_is_usage_error(tmp_path, capsys):
    assert run(capsys, "validate", str(tmp_path))[0] == EXIT_USAGE


def test_validate_reports_corrupted_record(tmp_path, capsys):
    out = tmp_path / "d"
    run(capsys, *GEN, "--out", str(out))
    path = out / "eval.jsonl"
    lines = path.read_text().splitlines()
    record = json.loads(lines[0])
    record["target"][-2] = "0" if record["target"][-2] != "0" else "1"
    lines[0] = json.dumps(record, separators=(",", ":"))
    path.write_text("\n".join(lines) + "\n")
    code, _, err = run(capsys, "validate", str(out))
    assert code == EXIT_FAILURE
    assert record["id"] in err


def test_theory_drop_rows(tmp_path, capsys):
    code, _, _ = run(capsys, "theory", "drop", "--eps", "0.1", "--l", "0..10",
                     "--out", str(tmp_path))
    assert code == EXIT_OK
    rows = (tmp_path / "drop.csv").read_text().splitlines()
    assert len(rows) == 12
    assert rows[1] == "0,1"


def test_theory_attention_tau_column(tmp_path, capsys):
    code, stdout, _ = run(capsys, "theory", "attention", "--d-model", "64",
                          "--d-max", "100", "--eps", "1e-3",
                          "--out", str(tmp_path))
    assert code == EXIT_OK
    header = (tmp_path / "attention.csv").read_text().splitlines()[0]
    assert "tau" in header.split(",")


def test_theory_gradient_columns(tmp_path, capsys):
    code, stdout, _ = run(capsys, "theory", "gradient", "--dim", "8", "--n",
                          "16", "--sigma", "0.5", "--trials", "200",
                          "--out", str(tmp_path))
    assert code == EXIT_OK
    header = (tmp_path / "gradient.csv").read_text().splitlines()[0].split(",")
    assert "gap" in header and "ci_low" in header and "ci_high" in header


def test_stats_summary(tmp_path, capsys):
    out = tmp_path / "d"
    run(capsys, *GEN, "--out", str(out))
    code, stdout, _ = run(capsys, "stats", str(out))
    assert code == EXIT_OK
    assert "train: 120 records" in stdout
    assert "vocab size" in stdout


def test_analyze_is_deterministic(tmp_path, capsys):
    out = tmp_path / "d"
    run(capsys, *GEN, "--out", str(out))
    a1, a2 = tmp_path / "a1", tmp_path / "a2"
    run(capsys, "analyze", str(out), "--out", str(a1))
    run(capsys, "analyze", str(out), "--out", str(a2))
    assert tree_digest(a1) == tree_digest(a2)
