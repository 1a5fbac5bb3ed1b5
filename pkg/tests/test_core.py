import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cotbench.core import (ContractViolation, ProblemInstance, aggregate,
                           dependencies, replay_check, solve, states_of,
                           transition)
from cotbench.tasks import LIS, MPC, LisLevel, MpcLevel, lis_spec, mpc_spec


def lis_instance(values):
    return ProblemInstance(LIS, LisLevel(len(values)), tuple(values), 0, 0)


def mpc_instance(bits):
    return ProblemInstance(MPC, MpcLevel(len(bits)), tuple(bits), 0, 0)


def test_dependencies_bounds_checked():
    task = lis_spec(LisLevel(3))
    with pytest.raises(ContractViolation):
        dependencies(task, (1, 2, 3), 0)
    with pytest.raises(ContractViolation):
        dependencies(task, (1, 2, 3), 4)


def test_dependencies_are_causal():
    task = lis_spec(LisLevel(4))
    for i in range(1, 5):
        for j in dependencies(task, (48, 49, 26, 47), i):
            assert 0 <= j < i


def test_empty_transition_uses_constant():
    task = lis_spec(LisLevel(2))
    assert transition(task, (), 7) == task.empty_transition_constant


def test_aggregate_identity_on_empty():
    task = lis_spec(LisLevel(2))
    assert aggregate(task, None, 5) == 5


def test_solve_rejects_mismatched_instance():
    task = lis_spec(LisLevel(3))
    with pytest.raises(ContractViolation):
        solve(task, mpc_instance((1, 0, 1)))


@given(st.lists(st.integers(0, 99), min_size=1, max_size=12))
@settings(max_examples=60, deadline=None)
def test_solution_invariants_lis(values):
    task = lis_spec(LisLevel(len(values)))
    sol = solve(task, lis_instance(values))
    assert len(sol.steps) == len(values)
    first = sol.steps[0]
    assert first.aggregate_after == first.state
    for prev, step in zip(sol.steps, sol.steps[1:]):
        assert step.aggregate_before == prev.aggregate_after
    for step in sol.steps:
        dep_states = tuple(sol.steps[j - 1].state for j in step.dependency_indices)
        assert step.state == transition(task, dep_states, step.input_symbol)
        assert step.aggregate_after == aggregate(
            task, step.aggregate_before, step.state)
    assert sol.final_answer == sol.steps[-1].aggregate_after


@given(st.lists(st.integers(0, 1), min_size=1, max_size=15))
@settings(max_examples=60, deadline=None)
def test_solution_invariants_mpc(bits):
    task = mpc_spec(MpcLevel(len(bits)))
    sol = solve(task, mpc_instance(bits))
    for step in sol.steps:
        dep_states = []
        for j in step.dependency_indices:
            dep_states.append(task.boundary_state if j == 0
                              else sol.steps[j - 1].state)
        assert step.state == transition(task, tuple(dep_states),
                                        step.input_symbol)
    assert sol.final_answer == sol.steps[-1].state


@given(st.lists(st.integers(0, 99), min_size=1, max_size=10))
@settings(max_examples=40, deadline=None)
def test_replay_check_accepts_fresh_solutions(values):
    task = lis_spec(LisLevel(len(values)))
    assert replay_check(task, solve(task, lis_instance(values)))


def test_states_of_matches_solve():
    task = lis_spec(LisLevel(4))
    sol = solve(task, lis_instance((48, 49, 26, 47)))
    assert states_of(task, (48, 49, 26, 47)) == tuple(
        s.state for s in sol.steps)
