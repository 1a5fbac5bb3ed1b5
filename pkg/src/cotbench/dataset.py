"""Dataset assembly: seeded record generation, vocab, JSONL round-trip.

Every record's randomness is derived from (seed, split, level tag, index,
salt) through SHA-256, so generation order and worker count never change
the output bytes.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import __version__, tasks, trace
from .core import ContractViolation
from .tasks import ERVC, LIS, MPC, ErvcLevel, LisLevel, MpcLevel

SCHEMA_VERSION = 1
DEDUP_SALT_BUDGET = 64

log = logging.getLogger(__name__)


class DatasetReadError(ValueError):
    pass


class DedupExhausted(RuntimeError):
    pass


def level_tag(level) -> str:
    if isinstance(level, ErvcLevel):
        return f"{level.n}x{level.m}"
    return str(level.n)


def parse_level(task_id: str, tag: str, modulus: int = 100,
                value_range: Tuple[int, int] = (0, 99)):
    if task_id == LIS:
        return LisLevel(int(tag), value_range)
    if task_id == MPC:
        return MpcLevel(int(tag), modulus)
    if task_id == ERVC:
        n, m = tag.split("x")
        return ErvcLevel(int(n), int(m))
    raise ContractViolation(f"unknown task {task_id!r}")


@dataclass(frozen=True)
class DatasetSpec:
    task_id: str
    train_levels: Tuple[Tuple[object, int], ...]
    eval_levels: Tuple[Tuple[object, int], ...]
    cot_rate: float = 1.0
    recap: bool = True
    seed: int = 0
    dedup: bool = True

    def __post_init__(self):
        for _, count in self.train_levels + self.eval_levels:
            if count < 1:
                raise ContractViolation("level counts must be >= 1")
        for split_levels in (self.train_levels, self.eval_levels):
            tags = [level_tag(level) for level, _ in split_levels]
            if len(tags) != len(set(tags)):
                raise ContractViolation("duplicate level within a split")


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    split: str
    level: str
    question: Tuple[str, ...]
    target: Tuple[str, ...]
    cot_rate: float
    retained_mask: Tuple[bool, ...]
    seed: int
    index: int


@dataclass(frozen=True)
class DatasetManifest:
    task_id: str
    cot_rate: float
    recap: bool
    seed: int
    dedup: bool
    counts: Dict[str, Dict[str, int]]
    vocab_size: int
    hashes: Dict[str, str]
    generator_version: str = __version__
    schema_version: int = SCHEMA_VERSION


@dataclass(frozen=True)
class Vocab:
    tokens: Tuple[str, ...]
    eval_only_tokens: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "token_to_id",
                           {tok: i for i, tok in enumerate(self.tokens)})

    def id_of(self, token: str) -> int:
        return self.token_to_id[token]


def _record_rng(seed: int, split: str, tag: str, index: int, salt: int) -> random.Random:
    key = f"{seed}:{split}:{tag}:{index}:{salt}".encode()
    return random.Random(int.from_bytes(hashlib.sha256(key).digest()[:8], "big"))


def _make_record(task_id: str, level, split: str, tag: str, index: int,
                 seed: int, cot_rate: float, recap: bool, salt: int) -> DatasetRecord:
    rng = _record_rng(seed, split, tag, index, salt)
    problem = tasks.sample_instance(task_id, level, rng, seed=seed, index=index)
    if task_id == ERVC:
        full = trace.render_instance(None, problem.inputs[0],
                                     trace.RecapPolicy(recap))
    else:
        task = tasks.task_spec(task_id, level)
        full = trace.render_instance(task, problem, trace.RecapPolicy(recap))
    dropped = trace.apply_dropout(full, trace.DropoutPolicy(cot_rate), rng)
    serialized = trace.serialize(dropped)
    q_len = len(dropped.question_tokens)
    return DatasetRecord(
        id=f"{split}-{tag}-{index:06d}",
        split=split,
        level=tag,
        question=serialized[:q_len],
        target=serialized[q_len:],
        cot_rate=cot_rate,
        retained_mask=dropped.retained_mask,
        seed=seed,
        index=index,
    )


def _worker(args) -> DatasetRecord:
    return _make_record(*args)


def build_dataset(spec: DatasetSpec, jobs: int = 1
                  ) -> Tuple[List[DatasetRecord], DatasetManifest]:
    """Generate all records deterministically; output is independent of jobs."""
    plan = []
    for split, levels in (("train", spec.train_levels), ("eval", spec.eval_levels)):
        for level, count in levels:
            tag = level_tag(level)
            for index in range(count):
                plan.append((spec.task_id, level, split, tag, index,
                             spec.seed, spec.cot_rate, spec.recap, 0))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_worker, plan, chunksize=256))
    else:
        records = [_make_record(*args) for args in plan]

    if spec.dedup:
        records = _dedup(spec, records)

    counts: Dict[str, Dict[str, int]] = {"train": {}, "eval": {}}
    for record in records:
        counts[record.split][record.level] = counts[record.split].get(record.level, 0) + 1
    vocab = build_vocab(records)
    hashes = {
        split: _content_hash([r for r in records if r.split == split])
        for split in ("train", "eval")
    }
    manifest = DatasetManifest(
        task_id=spec.task_id,
        cot_rate=spec.cot_rate,
        recap=spec.recap,
        seed=spec.seed,
        dedup=spec.dedup,
        counts=counts,
        vocab_size=len(vocab.tokens),
        hashes=hashes,
    )
    return records, manifest


def _dedup(spec: DatasetSpec, records: List[DatasetRecord]) -> List[DatasetRecord]:
    """Resample colliding questions in canonical order via the salt channel."""
    level_by_tag = {level_tag(level): level
                    for level, _ in spec.train_levels + spec.eval_levels}
    seen: set = set()
    out = []
    for record in records:
        candidate = record
        salt = 0
        while candidate.question in seen:
            salt += 1
            if salt > DEDUP_SALT_BUDGET:
                raise DedupExhausted(
                    f"could not find a fresh question for level {record.level} "
                    f"({record.split}) within {DEDUP_SALT_BUDGET} resamples"
                )
            candidate = _make_record(
                spec.task_id, level_by_tag[record.level], record.split,
                record.level, record.index, spec.seed, spec.cot_rate,
                spec.recap, salt,
            )
        seen.add(candidate.question)
        out.append(candidate)
    return out


def build_vocab(records: Sequence[DatasetRecord]) -> Vocab:
    """Vocabulary over train and eval tokens; eval-only tokens are reported."""
    if not records:
        raise ContractViolation("cannot build a vocabulary from zero records")
    train_tokens, eval_tokens = set(), set()
    for record in records:
        bucket = train_tokens if record.split == "train" else eval_tokens
        bucket.update(record.question)
        bucket.update(record.target)
    ordered = list(trace.SPECIAL_TOKENS)
    ordered.extend(sorted((train_tokens | eval_tokens) - set(ordered)))
    eval_only = tuple(sorted(eval_tokens - train_tokens - set(trace.SPECIAL_TOKENS)))
    if eval_only:
        log.warning("eval-only tokens present: %s", ", ".join(eval_only))
    return Vocab(tokens=tuple(ordered), eval_only_tokens=eval_only)


def _record_to_json(record: DatasetRecord) -> str:
    payload = {
        "id": record.id,
        "split": record.split,
        "level": record.level,
        "question": list(record.question),
        "target": list(record.target),
        "cot_rate": record.cot_rate,
        "retained_mask": [int(b) for b in record.retained_mask],
        "seed": record.seed,
        "index": record.index,
    }
    return json.dumps(payload, separators=(",", ":"))


def _record_from_json(line: str, lineno: int, path: str) -> DatasetRecord:
    try:
        payload = json.loads(line)
        return DatasetRecord(
            id=payload["id"],
            split=payload["split"],
            level=payload["level"],
            question=tuple(payload["question"]),
            target=tuple(payload["target"]),
            cot_rate=payload["cot_rate"],
            retained_mask=tuple(bool(b) for b in payload["retained_mask"]),
            seed=payload["seed"],
            index=payload["index"],
        )
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DatasetReadError(f"{path}:{lineno}: corrupted record ({exc})")


def _content_hash(records: Sequence[DatasetRecord]) -> str:
    digest = hashlib.sha256()
    for record in records:
        digest.update(_record_to_json(record).encode())
        digest.update(b"\n")
    return digest.hexdigest()


def write_jsonl(records: Sequence[DatasetRecord], manifest: DatasetManifest,
                out_dir) -> Dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: Dict[str, Path] = {}
    for split in ("train", "eval"):
        path = out / f"{split}.jsonl"
        with path.open("w") as fh:
            for record in records:
                if record.split == split:
                    fh.write(_record_to_json(record))
                    fh.write("\n")
        paths[split] = path
    vocab = build_vocab(records)
    vocab_path = out / "vocab.txt"
    vocab_path.write_text("".join(tok + "\n" for tok in vocab.tokens))
    paths["vocab"] = vocab_path
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps({
        "schema_version": manifest.schema_version,
        "generator_version": manifest.generator_version,
        "task_id": manifest.task_id,
        "cot_rate": manifest.cot_rate,
        "recap": manifest.recap,
        "seed": manifest.seed,
        "dedup": manifest.dedup,
        "counts": manifest.counts,
        "vocab_size": manifest.vocab_size,
        "hashes": manifest.hashes,
    }, indent=2) + "\n")
    paths["manifest"] = manifest_path
    return paths


def read_jsonl(in_dir) -> Tuple[List[DatasetRecord], DatasetManifest]:
    src = Path(in_dir)
    manifest_path = src / "manifest.json"
    if not manifest_path.exists():
        raise DatasetReadError(f"{manifest_path}: missing manifest")
    payload = json.loads(manifest_path.read_text())
    if payload.get("schema_version") != SCHEMA_VERSION:
        raise DatasetReadError(
            f"{manifest_path}: schema version {payload.get('schema_version')} "
            f"!= {SCHEMA_VERSION}"
        )
    manifest = DatasetManifest(
        task_id=payload["task_id"],
        cot_rate=payload["cot_rate"],
        recap=payload["recap"],
        seed=payload["seed"],
        dedup=payload["dedup"],
        counts=payload["counts"],
        vocab_size=payload["vocab_size"],
        hashes=payload["hashes"],
        generator_version=payload["generator_version"],
    )
    records: List[DatasetRecord] = []
    for split in ("train", "eval"):
        path = src / f"{split}.jsonl"
        if not path.exists():
            raise DatasetReadError(f"{path}: missing split file")
        with path.open() as fh:
            for lineno, line in enumerate(fh, start=1):
                if line.strip():
                    records.append(_record_from_json(line, lineno, str(path)))
    return records, manifest


def read_vocab(in_dir) -> Vocab:
    path = Path(in_dir) / "vocab.txt"
    tokens = tuple(path.read_text().splitlines())
    return Vocab(tokens=tokens)
