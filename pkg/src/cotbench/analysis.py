"""Numeric analyses over generated datasets.

Covers prefix-substructure checking, exact coverage probability, smoothed
KL estimates with the coverage bound, the step-dropout accuracy curve,
rotary-attention score decay over distance, and a least-squares simulation
of how irrelevant input features slow gradient alignment.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import tasks, trace
from .core import ContractViolation, RangeError, TaskDefinition, states_of
from .dataset import DatasetManifest, DatasetRecord, parse_level
from .tasks import ERVC, LIS, MPC


# ---------------------------------------------------------------------------
# Prefix substructure
# ---------------------------------------------------------------------------

def check_prefix_substructure(task: TaskDefinition, long_input: Sequence,
                              n3: int) -> bool:
    """True iff solving the length-n3 prefix yields the first n3 states of
    the full solve. Holds exactly for causal dependency selectors."""
    if not 1 <= n3 <= len(long_input):
        raise RangeError(f"n3={n3} outside 1..{len(long_input)}")
    prefix_task = tasks.task_spec(task.task_id, _truncated_level(task.level, n3))
    short = states_of(prefix_task, tuple(long_input[:n3]))
    full = states_of(task, tuple(long_input))
    return short == tuple(full[:n3])


def _truncated_level(level, n3: int):
    if isinstance(level, tasks.LisLevel):
        return tasks.LisLevel(n3, level.value_range)
    if isinstance(level, tasks.MpcLevel):
        return tasks.MpcLevel(n3, level.modulus)
    raise ContractViolation("prefix substructure applies to sequence tasks only")


# ---------------------------------------------------------------------------
# Coverage
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoverageReport:
    m2: int
    m3: int
    k: int
    n3: int
    p_cover: Fraction
    matched_prefixes: Optional[int] = None

    def __post_init__(self):
        if not 0 <= self.p_cover <= 1:
            raise RangeError(f"p_cover={self.p_cover} outside [0,1]")


def coverage_from_counts(m2: int, m3: int, k: int, n3: int,
                         matched_prefixes: Optional[int] = None) -> CoverageReport:
    """Exact rational coverage probability m2 / (m3 * k**n3)."""
    if min(m2, k) < 0 or m3 < 1 or n3 < 1:
        raise RangeError("counts must be non-negative, m3 and n3 positive")
    cap = m3 * k ** n3
    if m2 > cap:
        raise RangeError(f"m2={m2} exceeds m3*k^n3={cap}")
    return CoverageReport(m2=m2, m3=m3, k=k, n3=n3,
                          p_cover=Fraction(m2, cap),
                          matched_prefixes=matched_prefixes)


def input_alphabet_size(task_id: str, level) -> int:
    """Per-position input alphabet size used in the coverage formula."""
    if task_id == LIS:
        lo, hi = level.value_range
        return hi - lo + 1
    if task_id == MPC:
        return 2
    raise ContractViolation("coverage is defined for sequence tasks only")


def _record_inputs(task_id: str, record: DatasetRecord):
    return trace.question_inputs(task_id, record.question)


def _state_prefix(task_id: str, record: DatasetRecord, n3: int) -> Tuple[int, ...]:
    level = parse_level(task_id, record.level)
    task = tasks.task_spec(task_id, level)
    inputs = _record_inputs(task_id, record)
    return tuple(states_of(task, inputs)[:n3])


def prefix_coverage(train_records: Sequence[DatasetRecord],
                    eval_records: Sequence[DatasetRecord],
                    task_id: str,
                    k_override: Optional[int] = None) -> CoverageReport:
    """Coverage of eval state prefixes by longer training sequences.

    m2 counts training records whose level exceeds the eval level n3;
    matched_prefixes counts eval records whose length-n3 state prefix
    appears among those training records' state prefixes.
    """
    if task_id == ERVC:
        raise ContractViolation("coverage is defined for sequence tasks only")
    if not eval_records:
        raise ContractViolation("eval records required")
    eval_ns = {int(r.level) for r in eval_records}
    if len(eval_ns) != 1:
        raise ContractViolation(f"expected a single eval level, got {sorted(eval_ns)}")
    n3 = eval_ns.pop()
    long_train = [r for r in train_records if int(r.level) > n3]
    if not long_train:
        raise ContractViolation(f"no training level longer than eval n3={n3}")
    level = parse_level(task_id, eval_records[0].level)
    k = k_override if k_override is not None else input_alphabet_size(task_id, level)

    train_prefixes = {_state_prefix(task_id, r, n3) for r in long_train}
    matched = sum(_state_prefix(task_id, r, n3) in train_prefixes
                  for r in eval_records)
    return coverage_from_counts(m2=len(long_train), m3=len(eval_records),
                                k=k, n3=n3, matched_prefixes=matched)


# ---------------------------------------------------------------------------
# KL estimation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KlEstimate:
    kl_qa: float
    kl_qcot: float
    bound: float
    smoothing: float

    def __post_init__(self):
        for name in ("kl_qa", "kl_qcot", "bound"):
            if getattr(self, name) < 0:
                raise RangeError(f"{name} must be non-negative")


def _smoothed_kl(p_counts: Counter, q_counts: Counter, smoothing: float) -> float:
    """KL(p || q) over the union support with add-constant smoothing."""
    support = sorted(set(p_counts) | set(q_counts), key=repr)
    p_total = sum(p_counts.values()) + smoothing * len(support)
    q_total = sum(q_counts.values()) + smoothing * len(support)
    out = 0.0
    for item in support:
        p = (p_counts[item] + smoothing) / p_total
        q = (q_counts[item] + smoothing) / q_total
        out += p * math.log(p / q)
    return max(out, 0.0)


def _answer_token(record: DatasetRecord) -> str:
    if record.target[-1] != trace.EOS:
        raise ContractViolation(f"record {record.id} target does not end with {trace.EOS}")
    return record.target[-2]


def estimate_kl(train_records: Sequence[DatasetRecord],
                eval_records: Sequence[DatasetRecord],
                task_id: str,
                smoothing: float = 1e-6,
                k_override: Optional[int] = None) -> KlEstimate:
    """Divergence of eval from train over answers and state prefixes,
    plus the coverage-weighted bound (1 - p_cover) * kl_qa."""
    if not train_records or not eval_records:
        raise ContractViolation("nonempty record sets required")
    cover = prefix_coverage(train_records, eval_records, task_id, k_override)
    kl_qa = _smoothed_kl(Counter(_answer_token(r) for r in eval_records),
                         Counter(_answer_token(r) for r in train_records),
                         smoothing)
    n3 = cover.n3
    long_train = [r for r in train_records if int(r.level) > n3]
    kl_qcot = _smoothed_kl(
        Counter(_state_prefix(task_id, r, n3) for r in eval_records),
        Counter(_state_prefix(task_id, r, n3) for r in long_train),
        smoothing)
    return KlEstimate(kl_qa=kl_qa, kl_qcot=kl_qcot,
                      bound=float(1 - cover.p_cover) * kl_qa,
                      smoothing=smoothing)


# ---------------------------------------------------------------------------
# Dropout accuracy curve
# ---------------------------------------------------------------------------

def drop_accuracy(epsilon: float, l: int) -> float:
    """Probability that an l-step chain survives independent per-step
    corruption at rate epsilon: exactly (1 - epsilon)**l."""
    if not 0.0 <= epsilon <= 1.0:
        raise RangeError(f"epsilon={epsilon} outside [0,1]")
    if l < 0 or not isinstance(l, int):
        raise RangeError(f"l={l} must be a non-negative integer")
    return (1.0 - epsilon) ** l


# ---------------------------------------------------------------------------
# Rotary attention decay
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecayProfile:
    d_model: int
    theta: Tuple[float, ...]
    samples: Tuple[float, ...]
    tau: Optional[int]
    epsilon: float


def rotary_angles(d_model: int) -> np.ndarray:
    if d_model < 2 or d_model % 2:
        raise RangeError("d_model must be even and >= 2")
    j = np.arange(d_model // 2)
    return 10000.0 ** (-2.0 * j / d_model)


def rotary_score(query: np.ndarray, key: np.ndarray, distance: float,
                 theta: Optional[np.ndarray] = None) -> float:
    """Attention score of a query/key pair at a relative distance, computed
    from pairwise 2-d rotations: Re[sum_j h_j e^{i d theta_j}]."""
    if theta is None:
        theta = rotary_angles(len(query))
    q = query[0::2] + 1j * query[1::2]
    k = key[0::2] + 1j * key[1::2]
    return float(np.real(np.sum(q * np.conj(k) * np.exp(1j * distance * theta))))


def attention_decay_profile(d_model: int, d_max: int, trials: int,
                            rng: random.Random,
                            epsilon: float = 1e-3) -> DecayProfile:
    """Max |score| over random unit query/key pairs at each distance 0..d_max.

    tau is the smallest distance beyond which every sampled |score| stays
    under epsilon for the rest of the sweep, or None if never.
    """
    theta = rotary_angles(d_model)
    np_rng = np.random.default_rng(rng.getrandbits(64))
    pairs = np_rng.standard_normal((trials, 2, d_model))
    pairs /= np.linalg.norm(pairs, axis=2, keepdims=True)
    q = pairs[:, 0, 0::2] + 1j * pairs[:, 0, 1::2]
    k = pairs[:, 1, 0::2] + 1j * pairs[:, 1, 1::2]
    h = q * np.conj(k)
    distances = np.arange(d_max + 1)
    phases = np.exp(1j * np.outer(distances, theta))
    scores = np.abs(np.real(phases @ h.T))
    samples = scores.max(axis=1)
    above = np.flatnonzero(samples >= epsilon)
    if above.size == 0:
        tau = 0
    elif above[-1] == d_max:
        tau = None
    else:
        tau = int(above[-1]) + 1
    return DecayProfile(d_model=d_model, theta=tuple(theta.tolist()),
                        samples=tuple(samples.tolist()), tau=tau,
                        epsilon=epsilon)


# ---------------------------------------------------------------------------
# Irrelevant-feature gradient simulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GradientSimReport:
    trials: int
    sample_size: int
    noise_sigma: float
    mean_alignment_relevant: float
    mean_alignment_augmented: float
    gap: float
    ci_low: Optional[float]
    ci_high: Optional[float]

    @property
    def ci_defined(self) -> bool:
        return self.ci_low is not None


def _fit(features: np.ndarray, targets: np.ndarray) -> np.ndarray:
    return np.linalg.lstsq(features, targets, rcond=None)[0]


def _alignment(features: np.ndarray, targets: np.ndarray, w_true: np.ndarray,
               fitted: np.ndarray, at: float) -> float:
    """Inner product between the descent direction at an intermediate
    iterate and the offset from that iterate to the true weights."""
    w = at * fitted
    grad = 2.0 / len(targets) * features.T @ (features @ w - targets)
    return float(-grad @ (w_true - w))


def gradient_alignment_sim(dim: int, sample_size: int, noise_sigma: float,
                           trials: int, rng: random.Random,
                           at: float = 0.5) -> GradientSimReport:
    """Compare gradient alignment toward the true weights when fitting on
    relevant features alone versus relevant plus irrelevant features.

    Each trial draws a fresh design, fits both models by least squares,
    and evaluates the descent-direction alignment at the convex-combination
    iterate `at` between the zero initialization and the fitted weights.
    """
    if dim < 1 or sample_size < dim + 1 or trials < 1:
        raise RangeError("need dim >= 1, sample_size >= dim+1, trials >= 1")
    np_rng = np.random.default_rng(rng.getrandbits(64))
    diffs = np.empty(trials)
    sum_rel = sum_aug = 0.0
    for t in range(trials):
        while True:
            relevant = np_rng.standard_normal((sample_size, dim))
            irrelevant = np_rng.standard_normal((sample_size, dim))
            augmented = np.hstack([relevant, irrelevant])
            if (np.linalg.matrix_rank(relevant) == dim
                    and np.linalg.matrix_rank(augmented) == min(sample_size, 2 * dim)):
                break
        w_true = np_rng.standard_normal(dim)
        targets = relevant @ w_true + noise_sigma * np_rng.standard_normal(sample_size)
        w_true_aug = np.concatenate([w_true, np.zeros(dim)])
        a_rel = _alignment(relevant, targets, w_true,
                           _fit(relevant, targets), at)
        a_aug = _alignment(augmented, targets, w_true_aug,
                           _fit(augmented, targets), at)
        sum_rel += a_rel
        sum_aug += a_aug
        diffs[t] = a_rel - a_aug
    gap = float(diffs.mean())
    if trials > 1:
        half = 1.96 * float(diffs.std(ddof=1)) / math.sqrt(trials)
        ci = (gap - half, gap + half)
    else:
        ci = (None, None)
    return GradientSimReport(trials=trials, sample_size=sample_size,
                             noise_sigma=noise_sigma,
                             mean_alignment_relevant=sum_rel / trials,
                             mean_alignment_augmented=sum_aug / trials,
                             gap=gap, ci_low=ci[0], ci_high=ci[1])
