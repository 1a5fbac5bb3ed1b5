import json
import logging
import random

import pytest

from cotbench import dataset, tasks, trace
from cotbench.core import ContractViolation
from cotbench.tasks import ErvcLevel, LisLevel, MpcLevel


def lis_spec(**kw):
    defaults = dict(task_id="lis",
                    train_levels=((LisLevel(4), 40), (LisLevel(8), 40)),
                    eval_levels=((LisLevel(6), 20),),
                    cot_rate=1.0, seed=7)
    defaults.update(kw)
    return dataset.DatasetSpec(**defaults)


def test_parallel_output_equals_serial():
    spec = lis_spec()
    serial = dataset.build_dataset(spec, jobs=1)
    parallel = dataset.build_dataset(spec, jobs=8)
    assert serial == parallel


def test_reruns_are_identical():
    spec = lis_spec(cot_rate=0.5)
    assert dataset.build_dataset(spec) == dataset.build_dataset(spec)


def test_seed_changes_output():
    a, _ = dataset.build_dataset(lis_spec(seed=1))
    b, _ = dataset.build_dataset(lis_spec(seed=2))
    assert a != b


def test_jsonl_round_trip(tmp_path):
    records, manifest = dataset.build_dataset(lis_spec())
    dataset.write_jsonl(records, manifest, tmp_path)
    loaded, loaded_manifest = dataset.read_jsonl(tmp_path)
    assert loaded == records
    assert loaded_manifest == manifest


def test_manifest_counts_and_hashes(tmp_path):
    records, manifest = dataset.build_dataset(lis_spec())
    assert manifest.counts == {"train": {"4": 40, "8": 40},
                               "eval": {"6": 20}}
    again = dataset.build_dataset(lis_spec())[1]
    assert manifest.hashes == again.hashes


def test_dedup_makes_questions_unique():
    spec = dataset.DatasetSpec(task_id="mpc",
                               train_levels=((MpcLevel(6), 40),),
                               eval_levels=((MpcLevel(7), 20),),
                               seed=0, dedup=True)
    records, _ = dataset.build_dataset(spec)
    questions = [r.question for r in records]
    assert len(set(questions)) == len(questions)


def test_dedup_exhaustion_names_level():
    spec = dataset.DatasetSpec(task_id="mpc",
                               train_levels=((MpcLevel(2), 10),),
                               eval_levels=((MpcLevel(3), 1),),
                               seed=0, dedup=True)
    with pytest.raises(dataset.DedupExhausted, match="level 2"):
        dataset.build_dataset(spec)


def test_vocab_specials_first_and_line_numbers(tmp_path):
    records, manifest = dataset.build_dataset(lis_spec())
    paths = dataset.write_jsonl(records, manifest, tmp_path)
    vocab = dataset.read_vocab(tmp_path)
    assert vocab.tokens[:len(trace.SPECIAL_TOKENS)] == trace.SPECIAL_TOKENS
    lines = paths["vocab"].read_text().splitlines()
    for i, tok in enumerate(lines):
        assert vocab.id_of(tok) == i


def test_eval_only_tokens_reported(caplog):
    records, _ = dataset.build_dataset(lis_spec())
    with caplog.at_level(logging.WARNING, logger="cotbench.dataset"):
        vocab = dataset.build_vocab(records)
    if vocab.eval_only_tokens:
        assert any("eval-only" in r.message for r in caplog.records)


def test_corrupted_line_reports_position(tmp_path):
    records, manifest = dataset.build_dataset(lis_spec())
    dataset.write_jsonl(records, manifest, tmp_path)
    path = tmp_path / "train.jsonl"
    lines = path.read_text().splitlines()
    lines[3] = lines[3][:-5]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(dataset.DatasetReadError, match=":4:"):
        dataset.read_jsonl(tmp_path)


def test_schema_version_mismatch_rejected(tmp_path):
    records, manifest = dataset.build_dataset(lis_spec())
    dataset.write_jsonl(records, manifest, tmp_path)
    payload = json.loads((tmp_path / "manifest.json").read_text())
    payload["schema_version"] = 99
    (tmp_path / "manifest.json").write_text(json.dumps(payload))
    with pytest.raises(dataset.DatasetReadError, match="schema version"):
        dataset.read_jsonl(tmp_path)


def test_every_record_validates():
    records, _ = dataset.build_dataset(lis_spec(cot_rate=0.5))
    for record in records:
        level = dataset.parse_level("lis", record.level)
        parsed = trace.parse_trace("lis", record.question + record.target)
        report = trace.validate_trace(tasks.task_spec("lis", level),
                                      record.question, parsed)
        assert report.valid, (record.id, report)


def test_ervc_records_validate():
    spec = dataset.DatasetSpec(task_id="ervc",
                               train_levels=((ErvcLevel(2, 1), 10),),
                               eval_levels=((ErvcLevel(3, 2), 5),),
                               seed=3, dedup=False)
    records, _ = dataset.build_dataset(spec)
    for record in records:
        parsed = trace.parse_trace("ervc", record.question + record.target)
        report = trace.validate_trace(None, record.question, parsed)
        assert report.valid, (record.id, report)


def test_level_tag_round_trip():
    assert dataset.level_tag(LisLevel(4)) == "4"
    assert dataset.level_tag(ErvcLevel(3, 2)) == "3x2"
    assert dataset.parse_level("ervc", "3x2") == ErvcLevel(3, 2)
    assert dataset.parse_level("mpc", "7", modulus=50) == MpcLevel(7, 50)


def test_rejects_duplicate_levels_within_split():
    with pytest.raises(ContractViolation):
        dataset.DatasetSpec(task_id="lis",
                            train_levels=((LisLevel(4), 5), (LisLevel(4), 5)),
                            eval_levels=((LisLevel(6), 5),))
