"""Recurrent compound-task machinery.

A compound task is defined by three pure functions over an input
sequence ``s_1..s_N``:

* a dependency selector ``B(inputs, i)`` returning indices of earlier
  steps whose states the current step consumes (index 0 addresses a
  task-defined virtual boundary state),
* a state transition ``F(dep_states, s_i) -> q_i``,
* a running aggregator ``H(L_{i-1}, q_i) -> L_i`` with ``H(empty, q) = q``.

``solve`` composes the three into a full step-by-step solution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence, Tuple


class ContractViolation(ValueError):
    """An operation was called outside its stated preconditions."""


class RangeError(ValueError):
    """A state or symbol fell outside the task's declared range."""


@dataclass(frozen=True)
class ProblemInstance:
    task_id: str
    level: Any
    inputs: Tuple[Any, ...]
    seed: int
    index: int

    def __post_init__(self):
        if len(self.inputs) < 1:
            raise ContractViolation("instance needs at least one input symbol")


@dataclass(frozen=True)
class CompoundStep:
    index: int  # 1-based
    input_symbol: Any
    dependency_indices: Tuple[int, ...]
    dependency_states: Tuple[Any, ...]
    state: Any
    aggregate_before: Optional[Any]  # None marks the empty aggregate before step 1
    aggregate_after: Any


@dataclass(frozen=True)
class Solution:
    steps: Tuple[CompoundStep, ...]
    final_answer: Any


@dataclass(frozen=True)
class TaskDefinition:
    """Concrete (B, F, H) triple plus sampling metadata for one task level."""

    task_id: str
    level: Any
    alphabet: Callable[[Any], bool]
    dependency_fn: Callable[[Sequence[Any], int], Tuple[int, ...]]
    transition_fn: Callable[[Tuple[Any, ...], Any], Any]
    aggregate_fn: Callable[[Optional[Any], Any], Any]
    empty_transition_constant: Any
    boundary_state: Optional[Any]  # value of the virtual q_0, where the task defines one
    sampler: Callable[..., ProblemInstance]
    input_alphabet_size: int  # k in the coverage formula


def dependencies(task: TaskDefinition, inputs: Sequence[Any], i: int) -> Tuple[int, ...]:
    """Return B(s_1..s_i, i), the indices of the states step i depends on."""
    if not 1 <= i <= len(inputs):
        raise ContractViolation(f"step index {i} out of range 1..{len(inputs)}")
    deps = tuple(task.dependency_fn(inputs, i))
    for k in deps:
        if not 0 <= k < i:
            raise ContractViolation(f"dependency index {k} not in 0..{i - 1}")
        if k == 0 and task.boundary_state is None:
            raise ContractViolation("task defines no boundary state for index 0")
    return deps


def transition(task: TaskDefinition, dep_states: Sequence[Any], s: Any) -> Any:
    """Return F(dep_states, s); F over an empty selection yields the task constant."""
    if not task.alphabet(s):
        raise RangeError(f"symbol {s!r} outside the task alphabet")
    return task.transition_fn(tuple(dep_states), s)


def aggregate(task: TaskDefinition, prev: Optional[Any], q: Any) -> Any:
    """Return H(prev, q); the empty aggregate (None) yields q itself."""
    if prev is None:
        return q
    return task.aggregate_fn(prev, q)


def solve(task: TaskDefinition, instance: ProblemInstance) -> Solution:
    """Run the full recurrence over instance.inputs and return every step."""
    if instance.task_id != task.task_id:
        raise ContractViolation(
            f"instance task {instance.task_id!r} does not match {task.task_id!r}"
        )
    inputs = instance.inputs
    states: list = []
    steps: list = []
    agg: Optional[Any] = None
    for i in range(1, len(inputs) + 1):
        s = inputs[i - 1]
        deps = dependencies(task, inputs, i)
        dep_states = tuple(
            task.boundary_state if k == 0 else states[k - 1] for k in deps
        )
        q = transition(task, dep_states, s)
        new_agg = aggregate(task, agg, q)
        steps.append(
            CompoundStep(
                index=i,
                input_symbol=s,
                dependency_indices=deps,
                dependency_states=dep_states,
                state=q,
                aggregate_before=agg,
                aggregate_after=new_agg,
            )
        )
        states.append(q)
        agg = new_agg
    return Solution(steps=tuple(steps), final_answer=steps[-1].aggregate_after)


def states_of(task: TaskDefinition, inputs: Sequence[Any]) -> Tuple[Any, ...]:
    """State sequence q_1..q_N for a raw input sequence."""
    instance = ProblemInstance(
        task_id=task.task_id, level=task.level, inputs=tuple(inputs), seed=0, index=0
    )
    return tuple(step.state for step in solve(task, instance).steps)


def replay_check(task: TaskDefinition, solution: Solution) -> bool:
    """Re-apply F and H over the solution's own steps; True iff it reproduces itself."""
    agg: Optional[Any] = None
    for step in solution.steps:
        q = transition(task, step.dependency_states, step.input_symbol)
        if q != step.state:
            return False
        if step.aggregate_before != agg:
            return False
        agg = aggregate(task, agg, q)
        if agg != step.aggregate_after:
            return False
    return agg == solution.final_answer
