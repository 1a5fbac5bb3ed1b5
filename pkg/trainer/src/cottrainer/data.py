"""File-level interface to dataset directories.

Reads train.jsonl / eval.jsonl / vocab.txt / manifest.json produced by the
dataset generator; no code is shared with it, only the file formats.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import torch

EOS = "<eos>"


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class Record:
    id: str
    split: str
    level: str
    question: Tuple[str, ...]
    target: Tuple[str, ...]


@dataclass(frozen=True)
class Vocab:
    tokens: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "_ids", {t: i for i, t in enumerate(self.tokens)})

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def pad_id(self) -> int:
        return len(self.tokens)

    @property
    def eos_id(self) -> int:
        return self._ids[EOS]

    def encode(self, tokens: Sequence[str]) -> List[int]:
        try:
            return [self._ids[t] for t in tokens]
        except KeyError as exc:
            raise DataError(f"token {exc.args[0]!r} not in vocabulary")

    def decode(self, ids: Sequence[int]) -> List[str]:
        return [self.tokens[i] for i in ids]


@dataclass(frozen=True)
class Dataset:
    train: Tuple[Record, ...]
    eval: Tuple[Record, ...]
    vocab: Vocab
    manifest: Dict
    content_hash: str


def _load_split(path: Path) -> Tuple[Record, ...]:
    records = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
                records.append(Record(
                    id=payload["id"], split=payload["split"],
                    level=payload["level"],
                    question=tuple(payload["question"]),
                    target=tuple(payload["target"])))
            except (json.JSONDecodeError, KeyError) as exc:
                raise DataError(f"{path}:{lineno}: bad record ({exc})")
    return tuple(records)


def load_dataset(directory) -> Dataset:
    src = Path(directory)
    manifest_path = src / "manifest.json"
    if not manifest_path.exists():
        raise DataError(f"{src}: missing manifest.json")
    manifest = json.loads(manifest_path.read_text())
    vocab = Vocab(tuple((src / "vocab.txt").read_text().splitlines()))
    if manifest.get("vocab_size") != len(vocab):
        raise DataError(
            f"vocab.txt has {len(vocab)} tokens but the manifest declares "
            f"{manifest.get('vocab_size')}")
    digest = hashlib.sha256()
    for split in ("train", "eval"):
        digest.update((src / f"{split}.jsonl").read_bytes())
    return Dataset(
        train=_load_split(src / "train.jsonl"),
        eval=_load_split(src / "eval.jsonl"),
        vocab=vocab,
        manifest=manifest,
        content_hash=digest.hexdigest(),
    )


def pack_batch(records: Sequence[Record], vocab: Vocab,
               context: int) -> Tuple[torch.Tensor, torch.Tensor]:
    """Token and loss-mask tensors for a batch of full sequences.

    Positions covering question tokens carry mask 0 so only target tokens
    contribute to the loss; padding also carries mask 0.
    """
    sequences = []
    masks = []
    for record in records:
        ids = vocab.encode(record.question + record.target)
        if len(ids) > context:
            raise DataError(f"record {record.id} exceeds context {context}")
        mask = [0] * len(record.question) + [1] * len(record.target)
        sequences.append(ids)
        masks.append(mask)
    width = max(len(s) for s in sequences)
    tokens = torch.full((len(sequences), width), vocab.pad_id, dtype=torch.long)
    loss_mask = torch.zeros((len(sequences), width), dtype=torch.bool)
    for row, (ids, mask) in enumerate(zip(sequences, masks)):
        tokens[row, :len(ids)] = torch.tensor(ids)
        loss_mask[row, :len(ids)] = torch.tensor(mask, dtype=torch.bool)
    return tokens, loss_mask
