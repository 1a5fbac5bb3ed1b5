"""Bit-exact chain-of-thought grammars: render, drop, parse, validate.

Canonical serialized sample layout (space-joined tokens, one per line):

    <question tokens> <sep> [block <sep>]... <answer token> <eos>

The question echo owns the first ``<sep>``; every retained step block is
followed by one separator; the bare answer token and ``<eos>`` always
close the sample, so dropout can never remove the answer.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

from . import ervc_text
from .core import ContractViolation, Solution, TaskDefinition, solve
from .core import ProblemInstance
from .ervc import ErvcInstance, ErvcSolution, ervc_solve
from .tasks import ERVC, LIS, MPC

SEP = "<sep>"
EOS = "<eos>"
EMPTY = "<empty>"
ARROW = "->"

SPECIAL_TOKENS = (SEP, EOS, EMPTY, "|", "=", ":", ",", ARROW)


class TraceParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (token {position})")
        self.position = position


@dataclass(frozen=True)
class CotTrace:
    grammar_id: str
    question_tokens: Tuple[str, ...]
    step_blocks: Tuple[Tuple[str, ...], ...]
    final_tokens: Tuple[str, ...]
    retained_mask: Tuple[bool, ...]
    recap_enabled: bool


@dataclass(frozen=True)
class DropoutPolicy:
    retain_rate: float
    always_keep_final: bool = True

    PRESETS = (0.0, 0.3, 0.5, 0.7, 1.0)

    def __post_init__(self):
        if not 0.0 <= self.retain_rate <= 1.0:
            raise ContractViolation("retain_rate must lie in [0, 1]")
        if not self.always_keep_final:
            raise ContractViolation("the final answer is never dropped")


@dataclass(frozen=True)
class RecapPolicy:
    enabled: bool = True


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    first_error_step: Optional[int] = None  # 1-based step; 0 marks the final answer
    error_kind: Optional[str] = None  # parse | wrong_dependency | wrong_state | wrong_aggregate | wrong_final
    expected: Optional[str] = None
    actual: Optional[str] = None


def serialize(trace: CotTrace) -> Tuple[str, ...]:
    out: List[str] = list(trace.question_tokens)
    for block in trace.step_blocks:
        out.extend(block)
        out.append(SEP)
    out.extend(trace.final_tokens)
    return tuple(out)


def to_text(trace: CotTrace) -> str:
    return " ".join(serialize(trace))


def body_tokens(trace: CotTrace) -> Tuple[str, ...]:
    """Question plus separator-joined blocks, without the answer tail; this is
    the layout the reference worked examples use."""
    out: List[str] = list(trace.question_tokens)
    for i, block in enumerate(trace.step_blocks):
        if i:
            out.append(SEP)
        out.extend(block)
    return tuple(out)


def _lis_question(inputs: Sequence[int]) -> Tuple[str, ...]:
    return tuple(str(v) for v in inputs) + (SEP,)


def _mpc_question(inputs: Sequence[int]) -> Tuple[str, ...]:
    return tuple(str(v) for v in inputs) + (",", str(len(inputs)), SEP)


def _lis_block(step, dep_input: Optional[int], recap: bool) -> Tuple[str, ...]:
    s = str(step.input_symbol)
    before = step.aggregate_before
    before = step.aggregate_after if before is None else before
    toks: List[str] = [s, "|"]
    if recap:
        if step.dependency_indices:
            toks.extend([str(dep_input), str(step.dependency_states[0])])
        else:
            toks.append(EMPTY)
    toks.extend(["=", s, str(step.state), ":", str(before), ARROW,
                 str(step.aggregate_after)])
    return tuple(toks)


def _mpc_block(step, recap: bool) -> Tuple[str, ...]:
    toks: List[str] = [str(step.index), ",", str(step.input_symbol), ","]
    if recap:
        toks.extend(str(q) for q in step.dependency_states)
    toks.extend([ARROW, str(step.state)])
    return tuple(toks)


def render_trace(solution, grammar_id: str, recap: RecapPolicy = RecapPolicy(),
                 instance: Optional[ErvcInstance] = None) -> CotTrace:
    """Token-exact full rendering of a solution (no dropout applied)."""
    if grammar_id == LIS:
        assert isinstance(solution, Solution)
        inputs = [step.input_symbol for step in solution.steps]
        blocks = []
        for step in solution.steps:
            dep_input = (
                inputs[step.dependency_indices[0] - 1]
                if step.dependency_indices else None
            )
            blocks.append(_lis_block(step, dep_input, recap.enabled))
        return CotTrace(LIS, _lis_question(inputs), tuple(blocks),
                        (str(solution.final_answer), EOS),
                        (True,) * len(blocks), recap.enabled)
    if grammar_id == MPC:
        assert isinstance(solution, Solution)
        inputs = [step.input_symbol for step in solution.steps]
        blocks = tuple(_mpc_block(step, recap.enabled) for step in solution.steps)
        return CotTrace(MPC, _mpc_question(inputs), blocks,
                        (str(solution.final_answer), EOS),
                        (True,) * len(blocks), recap.enabled)
    if grammar_id == ERVC:
        assert isinstance(solution, ErvcSolution)
        if instance is None:
            raise ContractViolation("ERVC rendering needs the problem instance")
        lines = ervc_text.solution_lines(instance, solution)
        blocks = tuple(toks for is_recap, toks in lines
                       if recap.enabled or not is_recap)
        return CotTrace(ERVC, ervc_text.question_tokens(instance), blocks,
                        (ervc_text._num(solution.final_answer), EOS),
                        (True,) * len(blocks), recap.enabled)
    raise ContractViolation(f"unknown grammar {grammar_id!r}")


def render_instance(task: Optional[TaskDefinition], instance_or_problem,
                    recap: RecapPolicy = RecapPolicy()) -> CotTrace:
    """Convenience wrapper: solve then render."""
    if isinstance(instance_or_problem, ErvcInstance):
        return render_trace(ervc_solve(instance_or_problem), ERVC, recap,
                            instance=instance_or_problem)
    assert task is not None
    problem = instance_or_problem
    if task.task_id == ERVC or isinstance(problem.inputs[0], ErvcInstance):
        inner = problem.inputs[0]
        return render_trace(ervc_solve(inner), ERVC, recap, instance=inner)
    return render_trace(solve(task, problem), task.task_id, recap)


def apply_dropout(trace: CotTrace, policy: DropoutPolicy,
                  rng: random.Random) -> CotTrace:
    """Independently retain each step block; the answer tail always survives."""
    if not all(trace.retained_mask):
        raise ContractViolation("dropout expects a fully retained trace")
    mask = tuple(rng.random() < policy.retain_rate for _ in trace.step_blocks)
    blocks = tuple(b for b, keep in zip(trace.step_blocks, mask) if keep)
    return replace(trace, step_blocks=blocks, retained_mask=mask)


def _split_segments(tokens: Sequence[str]) -> Tuple[List[List[str]], int]:
    segments: List[List[str]] = [[]]
    for tok in tokens:
        if tok == SEP:
            segments.append([])
        else:
            segments[-1].append(tok)
    return segments, len(tokens)


def parse_trace(grammar_id: str, tokens: Sequence[str]) -> CotTrace:
    """Inverse of render/serialize; raises TraceParseError on malformed input."""
    if grammar_id not in (LIS, MPC, ERVC):
        raise ContractViolation(f"unknown grammar {grammar_id!r}")
    segments, total = _split_segments(tokens)
    if len(segments) < 2:
        raise TraceParseError("no separator found", total)
    final = segments[-1]
    if len(final) < 2 or final[-1] != EOS:
        raise TraceParseError("sample must end with an answer token and <eos>",
                              total)
    question = tuple(segments[0]) + (SEP,)
    blocks = tuple(tuple(seg) for seg in segments[1:-1])
    for seg in segments[1:-1]:
        if not seg:
            raise TraceParseError("empty step block", total)

    recap_enabled = True
    if grammar_id == LIS:
        for block in blocks:
            _parse_lis_block(block)
        if blocks:
            recap_enabled = blocks[0][2] != "="
    elif grammar_id == MPC:
        for block in blocks:
            _parse_mpc_block(block)
        if blocks:
            recap_enabled = len(blocks[0]) > 6
    else:
        recap_enabled = any(b and b[0] == "Recap" for b in blocks) or not blocks
    return CotTrace(grammar_id, question, blocks, tuple(final),
                    (True,) * len(blocks), recap_enabled)


def _parse_lis_block(block: Sequence[str]) -> dict:
    toks = list(block)
    try:
        if toks[1] != "|":
            raise TraceParseError("expected '|'", 1)
        eq = toks.index("=")
        dep = toks[2:eq]
        if dep not in ([],) and dep != [EMPTY] and len(dep) != 2:
            raise TraceParseError("malformed dependency echo", 2)
        colon = toks.index(":")
        if toks[eq + 1] != toks[0]:
            raise TraceParseError("input echo mismatch", eq + 1)
        if toks[colon + 2] != ARROW or len(toks) != colon + 4:
            raise TraceParseError("malformed aggregate tail", colon)
        return {
            "input": toks[0],
            "dep": tuple(dep),
            "state": toks[eq + 2],
            "before": toks[colon + 1],
            "after": toks[colon + 3],
        }
    except (IndexError, ValueError) as exc:
        if isinstance(exc, TraceParseError):
            raise
        raise TraceParseError(f"malformed LIS step block {' '.join(toks)!r}", 0)


def _parse_mpc_block(block: Sequence[str]) -> dict:
    toks = list(block)
    try:
        if toks[1] != "," or toks[3] != ",":
            raise TraceParseError("expected ',' delimiters", 1)
        arrow = toks.index(ARROW)
        if len(toks) != arrow + 2:
            raise TraceParseError("malformed state tail", arrow)
        return {
            "index": toks[0],
            "avail": toks[2],
            "dep": tuple(toks[4:arrow]),
            "state": toks[arrow + 1],
        }
    except (IndexError, ValueError) as exc:
        if isinstance(exc, TraceParseError):
            raise
        raise TraceParseError(f"malformed MPC step block {' '.join(toks)!r}", 0)


def question_inputs(grammar_id: str, question_tokens: Sequence[str]) -> Tuple[int, ...]:
    toks = list(question_tokens)
    if toks and toks[-1] == SEP:
        toks = toks[:-1]
    try:
        if grammar_id == MPC:
            comma = toks.index(",")
            bits = tuple(int(t) for t in toks[:comma])
            if int(toks[comma + 1]) != len(bits):
                raise ValueError("length marker mismatch")
            return bits
        return tuple(int(t) for t in toks)
    except (ValueError, IndexError):
        raise TraceParseError("malformed question echo", 0)


def _mismatch(step_no: int, kind: str, expected, actual) -> ValidationReport:
    return ValidationReport(False, step_no, kind, str(expected), str(actual))


def _match_masked(expected_blocks, trace) -> Optional[List[Tuple[int, Tuple[str, ...]]]]:
    """Pair each retained block with its original step index, or None if the
    mask does not line up with the block count."""
    if len(trace.retained_mask) == len(expected_blocks) and \
            sum(trace.retained_mask) == len(trace.step_blocks):
        kept = [i for i, keep in enumerate(trace.retained_mask) if keep]
        return list(zip(kept, trace.step_blocks))
    return None


def _match_subsequence(expected_blocks, blocks) -> Optional[List[Tuple[int, Tuple[str, ...]]]]:
    """Greedy subsequence alignment for traces whose mask was lost."""
    pairs = []
    pos = 0
    for block in blocks:
        while pos < len(expected_blocks) and tuple(expected_blocks[pos]) != tuple(block):
            pos += 1
        if pos == len(expected_blocks):
            return None
        pairs.append((pos, block))
        pos += 1
    return pairs


def validate_trace(task: Optional[TaskDefinition], question_tokens: Sequence[str],
                   trace: CotTrace) -> ValidationReport:
    """Re-derive every retained step and the final answer from the question."""
    try:
        if trace.grammar_id == ERVC:
            return _validate_ervc(question_tokens, trace)
        assert task is not None
        inputs = question_inputs(trace.grammar_id, question_tokens)
        problem = ProblemInstance(task.task_id, task.level, inputs, 0, 0)
        solution = solve(task, problem)
        expected = render_trace(solution, trace.grammar_id,
                                RecapPolicy(trace.recap_enabled))
    except TraceParseError as exc:
        return ValidationReport(False, None, "parse", None, str(exc))

    pairs = _match_masked(expected.step_blocks, trace)
    if pairs is None:
        pairs = _match_subsequence(expected.step_blocks, trace.step_blocks)
        if pairs is None:
            return ValidationReport(False, None, "parse",
                                    "blocks aligned to solution steps",
                                    "unmatched step block")

    for step_idx, block in pairs:
        want = expected.step_blocks[step_idx]
        if tuple(block) == tuple(want):
            continue
        step_no = step_idx + 1
        try:
            if trace.grammar_id == LIS:
                got = _parse_lis_block(block)
                ref = _parse_lis_block(want)
                if got["dep"] != ref["dep"]:
                    return _mismatch(step_no, "wrong_dependency", ref["dep"], got["dep"])
                if got["state"] != ref["state"]:
                    return _mismatch(step_no, "wrong_state", ref["state"], got["state"])
                if (got["before"], got["after"]) != (ref["before"], ref["after"]):
                    return _mismatch(step_no, "wrong_aggregate",
                                     (ref["before"], ref["after"]),
                                     (got["before"], got["after"]))
            else:
                got = _parse_mpc_block(block)
                ref = _parse_mpc_block(want)
                if got["dep"] != ref["dep"]:
                    return _mismatch(step_no, "wrong_dependency", ref["dep"], got["dep"])
                if got["state"] != ref["state"]:
                    return _mismatch(step_no, "wrong_state", ref["state"], got["state"])
        except TraceParseError as exc:
            return ValidationReport(False, step_no, "parse", " ".join(want), str(exc))
        return _mismatch(step_no, "parse", " ".join(want), " ".join(block))

    if trace.final_tokens != expected.final_tokens:
        return _mismatch(0, "wrong_final", " ".join(expected.final_tokens),
                         " ".join(trace.final_tokens))
    return ValidationReport(True)


def _validate_ervc(question_tokens: Sequence[str], trace: CotTrace) -> ValidationReport:
    try:
        skeleton = ervc_text.parse_question(question_tokens)
    except (ervc_text.ErvcQuestionError, ValueError, IndexError) as exc:
        return ValidationReport(False, None, "parse", None, str(exc))
    solution = ervc_solve(skeleton)
    expected = render_trace(solution, ERVC, RecapPolicy(trace.recap_enabled),
                            instance=skeleton)

    pairs = _match_masked(expected.step_blocks, trace)
    if pairs is None:
        pairs = _match_subsequence(expected.step_blocks, trace.step_blocks)
        if pairs is None:
            return ValidationReport(False, None, "wrong_state",
                                    "blocks aligned to derivation lines",
                                    "unmatched reasoning line")
    for step_idx, block in pairs:
        want = expected.step_blocks[step_idx]
        if tuple(block) != tuple(want):
            return _mismatch(step_idx + 1, "wrong_state",
                             " ".join(want), " ".join(block))
    if trace.final_tokens != expected.final_tokens:
        return _mismatch(0, "wrong_final", " ".join(expected.final_tokens),
                         " ".join(trace.final_tokens))
    return ValidationReport(True)
