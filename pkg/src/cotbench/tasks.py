"""Concrete task definitions and samplers for LIS, MPC, and ERVC."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from .core import ContractViolation, ProblemInstance, TaskDefinition

LIS = "lis"
MPC = "mpc"
ERVC = "ervc"

TASK_IDS = (LIS, MPC, ERVC)


@dataclass(frozen=True)
class LisLevel:
    n: int
    value_range: Tuple[int, int] = (0, 99)

    def __post_init__(self):
        lo, hi = self.value_range
        if self.n < 1:
            raise ContractViolation("LIS level needs n >= 1")
        if not (0 <= lo <= hi <= 99):
            raise ContractViolation("LIS value range must sit inside [0, 99]")


@dataclass(frozen=True)
class MpcLevel:
    n: int
    modulus: int = 100

    def __post_init__(self):
        if self.n < 1:
            raise ContractViolation("MPC level needs n >= 1")
        if self.modulus < 2:
            raise ContractViolation("MPC modulus must be >= 2")


@dataclass(frozen=True)
class ErvcLevel:
    n: int  # total variables
    m: int  # equations / unknowns

    def __post_init__(self):
        if not 1 <= self.m < self.n:
            raise ContractViolation("ERVC level needs 1 <= m < n")


def _lis_scan(inputs: Sequence[int], upto: int, tie_break: str) -> Tuple[list, list]:
    """States q_1..q_upto and the chosen predecessor index per step (0 = none)."""
    states: list = []
    chosen: list = []
    for i in range(1, upto + 1):
        best_j, best_q = 0, 0
        for j in range(1, i):
            if inputs[j - 1] < inputs[i - 1]:
                qj = states[j - 1]
                take = qj > best_q or (qj == best_q and best_j and tie_break == "latest")
                if take:
                    best_j, best_q = j, qj
        states.append(best_q + 1)
        chosen.append(best_j)
    return states, chosen


def lis_spec(level: LisLevel, tie_break: str = "latest") -> TaskDefinition:
    """Longest increasing subsequence: B picks the best smaller predecessor,
    F counts one past it, H keeps the running maximum."""
    if tie_break not in ("latest", "earliest"):
        raise ContractViolation(f"unknown tie_break {tie_break!r}")
    lo, hi = level.value_range

    def dependency_fn(inputs, i):
        _, chosen = _lis_scan(inputs, i, tie_break)
        j = chosen[i - 1]
        return (j,) if j else ()

    def transition_fn(dep_states, s):
        if not dep_states:
            return 1
        return max(dep_states) + 1

    def sampler(rng: random.Random, seed: int = 0, index: int = 0) -> ProblemInstance:
        inputs = tuple(rng.randint(lo, hi) for _ in range(level.n))
        return ProblemInstance(LIS, level, inputs, seed, index)

    return TaskDefinition(
        task_id=LIS,
        level=level,
        alphabet=lambda s: isinstance(s, int) and lo <= s <= hi,
        dependency_fn=dependency_fn,
        transition_fn=transition_fn,
        aggregate_fn=max,
        empty_transition_constant=1,
        boundary_state=None,
        sampler=sampler,
        input_alphabet_size=hi - lo + 1,
    )


def mpc_spec(level: MpcLevel) -> TaskDefinition:
    """Multi-step path counting with steps {1,2,3}: B takes the previous three
    positions (including the virtual start q_0 = 1), F gates their sum by the
    availability bit modulo the level modulus, H replaces."""
    mod = level.modulus

    def dependency_fn(inputs, i):
        return tuple(range(max(0, i - 3), i))

    def transition_fn(dep_states, s):
        return (s * sum(dep_states)) % mod

    def sampler(rng: random.Random, seed: int = 0, index: int = 0) -> ProblemInstance:
        inputs = tuple(rng.randint(0, 1) for _ in range(level.n))
        return ProblemInstance(MPC, level, inputs, seed, index)

    return TaskDefinition(
        task_id=MPC,
        level=level,
        alphabet=lambda s: s in (0, 1),
        dependency_fn=dependency_fn,
        transition_fn=transition_fn,
        aggregate_fn=lambda prev, q: q,
        empty_transition_constant=0,
        boundary_state=1,
        sampler=sampler,
        input_alphabet_size=2,
    )


def task_spec(task_id: str, level) -> TaskDefinition:
    if task_id == LIS:
        return lis_spec(level)
    if task_id == MPC:
        return mpc_spec(level)
    raise ContractViolation(f"no recurrent task definition for {task_id!r}")


def sample_instance(task_id: str, level, rng: random.Random,
                    seed: int = 0, index: int = 0) -> ProblemInstance:
    """Uniform sampling over the level's input space, deterministic in rng state."""
    if task_id in (LIS, MPC):
        return task_spec(task_id, level).sampler(rng, seed, index)
    if task_id == ERVC:
        from . import ervc

        inst = ervc.ervc_generate(level.n, level.m, rng)
        return ProblemInstance(ERVC, level, (inst,), seed, index)
    raise ContractViolation(f"unknown task {task_id!r}")
