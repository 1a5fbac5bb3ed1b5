"""Enumeration oracles, deliberately sharing no code with the recurrent solver."""

from __future__ import annotations

from itertools import combinations
from typing import Sequence

from .core import ProblemInstance
from .tasks import ERVC, LIS, MPC

LIS_ORACLE_CAP = 18
MPC_ORACLE_CAP = 20


class OracleSizeError(ValueError):
    """Instance exceeds the exhaustive-enumeration size cap."""


def lis_by_enumeration(values: Sequence[int]) -> int:
    """Longest strictly increasing subsequence length via subset enumeration."""
    n = len(values)
    if n > LIS_ORACLE_CAP:
        raise OracleSizeError(f"LIS oracle capped at n <= {LIS_ORACLE_CAP}, got {n}")
    best = 0
    for length in range(n, best, -1):
        for idxs in combinations(range(n), length):
            sub = [values[i] for i in idxs]
            if all(a < b for a, b in zip(sub, sub[1:])):
                best = length
                break
        if best:
            break
    return best


def mpc_by_enumeration(bits: Sequence[int]) -> int:
    """Exact path count to position n with steps {1,2,3}, every landing available."""
    n = len(bits)
    if n > MPC_ORACLE_CAP:
        raise OracleSizeError(f"MPC oracle capped at n <= {MPC_ORACLE_CAP}, got {n}")

    def count_from(pos: int) -> int:
        if pos == n:
            return 1
        total = 0
        for step in (1, 2, 3):
            nxt = pos + step
            if nxt <= n and bits[nxt - 1] == 1:
                total += count_from(nxt)
        return total

    return count_from(0)


def brute_force_answer(task_id: str, instance: ProblemInstance) -> int:
    """Exhaustive / direct-substitution answer for a sampled instance.

    MPC returns the exact unreduced count; callers comparing against the
    modular solver must apply the level modulus themselves.
    """
    if task_id == LIS:
        return lis_by_enumeration(instance.inputs)
    if task_id == MPC:
        return mpc_by_enumeration(instance.inputs)
    if task_id == ERVC:
        from . import ervc

        return ervc.substitution_answer(instance.inputs[0])
    raise ValueError(f"unknown task {task_id!r}")
