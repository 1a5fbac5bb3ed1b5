"""Greedy decoding and the two accuracy protocols.

QA: the single decoded token immediately preceding <eos> must equal the
gold answer token. CoT: the full decoded target (every intermediate token
plus the answer) must match exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import torch

from .data import EOS, Record, Vocab
from .model import DecoderModel

QA = "qa"
COT = "cot"


@dataclass(frozen=True)
class EvalProtocol:
    mode: str  # QA or COT

    def __post_init__(self):
        if self.mode not in (QA, COT):
            raise ValueError(f"unknown protocol {self.mode!r}")


@dataclass(frozen=True)
class EvalResult:
    accuracy: float
    per_record: Tuple[Tuple[str, bool], ...]
    overflow_count: int


def answer_token(tokens: Sequence[str]) -> str:
    """The token immediately preceding <eos>."""
    if len(tokens) < 2 or tokens[-1] != EOS:
        return ""
    return tokens[-2]


def record_passes(decoded: Sequence[str], gold_target: Sequence[str],
                  protocol: EvalProtocol) -> bool:
    if protocol.mode == COT:
        return tuple(decoded) == tuple(gold_target)
    got = answer_token(decoded)
    return bool(got) and got == answer_token(gold_target)


@torch.no_grad()
def greedy_decode(model: DecoderModel, vocab: Vocab,
                  question_tokens: Sequence[str],
                  max_new: int) -> Tuple[List[str], bool]:
    """Decode until <eos>; returns (generated tokens, overflowed)."""
    model.eval()
    ids = vocab.encode(question_tokens)
    generated: List[int] = []
    for _ in range(max_new):
        window = (ids + generated)[-model.config.context:]
        logits = model.forward(torch.tensor([window]))
        next_id = int(logits[0, -1].argmax())
        generated.append(next_id)
        if next_id == vocab.eos_id:
            return vocab.decode(generated), False
    return vocab.decode(generated), True


@torch.no_grad()
def greedy_decode_batch(model: DecoderModel, vocab: Vocab,
                        questions: Sequence[Sequence[str]],
                        max_new: int) -> List[Tuple[List[str], bool]]:
    """Batched greedy decoding with left-padded prompts."""
    model.eval()
    encoded = [vocab.encode(q) for q in questions]
    longest = max(len(e) for e in encoded)
    pad = vocab.pad_id
    rows = [[pad] * (longest - len(e)) + e for e in encoded]
    tokens = torch.tensor(rows)
    done = torch.zeros(len(rows), dtype=torch.bool)
    outputs: List[List[int]] = [[] for _ in rows]
    for _ in range(max_new):
        window = tokens[:, -model.config.context:]
        logits = model.forward(window)
        next_ids = logits[:, -1].argmax(dim=-1)
        for row, nid in enumerate(next_ids.tolist()):
            if not done[row]:
                outputs[row].append(nid)
                if nid == vocab.eos_id:
                    done[row] = True
        if bool(done.all()):
            break
        tokens = torch.cat([tokens, next_ids[:, None]], dim=1)
    return [(vocab.decode(out), not bool(done[row]))
            for row, out in enumerate(outputs)]


def evaluate(model: DecoderModel, vocab: Vocab, records: Sequence[Record],
             protocol: EvalProtocol, max_new: int = 256,
             batch_size: int = 64) -> EvalResult:
    """Accuracy under a protocol; decode overflow counts as failure."""
    per_record: List[Tuple[str, bool]] = []
    overflow = 0
    for start in range(0, len(records), batch_size):
        chunk = records[start:start + batch_size]
        decoded = greedy_decode_batch(model, vocab,
                                      [r.question for r in chunk], max_new)
        for record, (tokens, overflowed) in zip(chunk, decoded):
            if overflowed:
                overflow += 1
                per_record.append((record.id, False))
                continue
            per_record.append(
                (record.id, record_passes(tokens, record.target, protocol)))
    passed = sum(ok for _, ok in per_record)
    return EvalResult(accuracy=passed / len(per_record) if per_record else 0.0,
                      per_record=tuple(per_record),
                      overflow_count=overflow)
