import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cotbench.core import ContractViolation, ProblemInstance, solve, states_of
from cotbench.oracles import lis_by_enumeration, mpc_by_enumeration
from cotbench.tasks import (ERVC, LIS, MPC, ErvcLevel, LisLevel, MpcLevel,
                            lis_spec, mpc_spec, sample_instance, task_spec)


def test_lis_worked_example_states_and_aggregates():
    task = lis_spec(LisLevel(4))
    sol = solve(task, ProblemInstance(LIS, LisLevel(4), (48, 49, 26, 47), 0, 0))
    assert [s.state for s in sol.steps] == [1, 2, 1, 2]
    assert [s.aggregate_after for s in sol.steps] == [1, 2, 2, 2]
    assert sol.final_answer == 2
    assert sol.steps[1].dependency_indices == (1,)
    assert sol.steps[3].dependency_indices == (3,)


def test_lis_tie_break_prefers_most_recent():
    # Predecessors 10 and 10 both give state 2 for the final 20; the later
    # index must win under the default tie break.
    task = lis_spec(LisLevel(3))
    sol = solve(task, ProblemInstance(LIS, LisLevel(3), (10, 10, 20), 0, 0))
    assert sol.steps[2].dependency_indices == (2,)
    task_first = lis_spec(LisLevel(3), tie_break="earliest")
    sol_first = solve(task_first,
                      ProblemInstance(LIS, LisLevel(3), (10, 10, 20), 0, 0))
    assert sol_first.steps[2].dependency_indices == (1,)


def test_mpc_worked_example_states():
    task = mpc_spec(MpcLevel(8))
    bits = (0, 1, 1, 0, 0, 1, 1, 0)
    sol = solve(task, ProblemInstance(MPC, MpcLevel(8), bits, 0, 0))
    assert [s.state for s in sol.steps] == [0, 1, 2, 0, 0, 2, 2, 0]
    assert sol.final_answer == 0


def test_mpc_boundary_index_zero_in_dependencies():
    task = mpc_spec(MpcLevel(3))
    sol = solve(task, ProblemInstance(MPC, MpcLevel(3), (1, 1, 1), 0, 0))
    assert sol.steps[0].dependency_indices == (0,)
    assert sol.steps[0].state == 1


@given(st.lists(st.integers(0, 99), min_size=1, max_size=12))
@settings(max_examples=80, deadline=None)
def test_lis_final_answer_matches_enumeration(values):
    task = lis_spec(LisLevel(len(values)))
    sol = solve(task, ProblemInstance(LIS, LisLevel(len(values)),
                                      tuple(values), 0, 0))
    assert sol.final_answer == lis_by_enumeration(values)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=14))
@settings(max_examples=80, deadline=None)
def test_mpc_final_answer_matches_enumeration(bits):
    modulus = 10 ** 9
    task = mpc_spec(MpcLevel(len(bits), modulus))
    sol = solve(task, ProblemInstance(MPC, MpcLevel(len(bits), modulus),
                                      tuple(bits), 0, 0))
    assert sol.final_answer == mpc_by_enumeration(bits) % modulus


def test_path_counting_compositions():
    # All-available sequences count compositions of n into parts of size <= 3.
    assert mpc_by_enumeration((1, 1, 1)) == 4
    assert mpc_by_enumeration((1, 1, 1, 1, 1)) == 13


def test_sampler_respects_ranges():
    rng = random.Random(0)
    for _ in range(50):
        inst = sample_instance(LIS, LisLevel(6), rng)
        assert len(inst.inputs) == 6
        assert all(0 <= v <= 99 for v in inst.inputs)
        inst = sample_instance(MPC, MpcLevel(7), rng)
        assert len(inst.inputs) == 7
        assert all(b in (0, 1) for b in inst.inputs)


def test_level_validation():
    with pytest.raises(ContractViolation):
        LisLevel(0)
    with pytest.raises(ContractViolation):
        MpcLevel(3, modulus=0)
    with pytest.raises(ContractViolation):
        ErvcLevel(1, 2)


def test_task_spec_rejects_unknown_task():
    with pytest.raises(ContractViolation):
        task_spec("nope", LisLevel(3))
