"""Equation restoration: instance generation and exact elimination solving.

An instance hides ``m`` integer linear relations over ``n`` named
variables behind ``D`` observation rows.  Relation ``j`` defines unknown
``u_j`` from every known variable and every earlier unknown (chain
topology), so the last unknown is the question's target.  All arithmetic
is exact: integer rows during elimination, fractions in back-substitution.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Dict, List, Optional, Sequence, Tuple

from .core import ContractViolation

LEXICON = (
    "Condor", "Cheetah", "Leopard", "Rhino", "Koala", "Black_Bear",
    "Falcon", "Otter", "Panther", "Gazelle", "Ibis", "Jaguar",
    "Kudu", "Lemur", "Marmot", "Narwhal", "Ocelot", "Pelican",
    "Quokka", "Raccoon", "Stork", "Tapir", "Vulture", "Wombat",
    "Yak", "Zebra",
)

COEFF_RANGE = (1, 5)
CONSTANT_RANGE = (0, 9)
KNOWN_VALUE_RANGE = (1, 9)
GENERATION_RETRIES = 200


class GenerationError(RuntimeError):
    """Retry budget exhausted while searching for a non-singular instance."""


@dataclass(frozen=True)
class Equation:
    """target = sum(coeff * var) + constant."""

    target: str
    terms: Tuple[Tuple[int, str], ...]
    constant: int

    @property
    def coefficients(self) -> Tuple[int, ...]:
        return tuple(c for c, _ in self.terms) + (self.constant,)

    def evaluate(self, values: Dict[str, int]) -> int:
        return sum(c * values[v] for c, v in self.terms) + self.constant


@dataclass(frozen=True)
class ErvcInstance:
    known_names: Tuple[str, ...]
    unknown_names: Tuple[str, ...]  # chain order; last one is the target
    equations: Tuple[Equation, ...]
    data_points: Tuple[Tuple[Tuple[str, int], ...], ...]  # rows of (name, value)
    query_values: Tuple[Tuple[str, int], ...]

    @property
    def target(self) -> str:
        return self.unknown_names[-1]

    @property
    def n(self) -> int:
        return len(self.known_names) + len(self.unknown_names)

    @property
    def m(self) -> int:
        return len(self.unknown_names)

    def symbol(self, name: str) -> str:
        """Algebraic alias: knowns are c_1.., unknowns continue the numbering."""
        order = self.known_names + self.unknown_names
        return f"c_{order.index(name) + 1}"


# Elimination events; rows are ((coeffs...), rhs) over the K vector.
Row = Tuple[Tuple[int, ...], int]


@dataclass(frozen=True)
class SwapEvent:
    row_a: int
    row_b: int
    rows_after: Tuple[Row, ...]


@dataclass(frozen=True)
class EliminateEvent:
    pivot_row: int
    target_row: int
    pivot_multiplier: int
    target_multiplier: int
    scaled_pivot: Row
    scaled_target: Row
    new_row: Row
    rows_after: Tuple[Row, ...]


@dataclass(frozen=True)
class BackSubEvent:
    var_index: int  # 0-based K index
    coefficient: int
    rhs: int
    resolved_terms: Tuple[Tuple[int, int, Fraction], ...]  # (coeff, K index, value)
    reduced_rhs: Fraction
    value: Fraction


@dataclass(frozen=True)
class EquationSolve:
    equation_index: int
    initial_rows: Tuple[Row, ...]
    events: Tuple[object, ...]
    coefficients: Tuple[Fraction, ...]


@dataclass(frozen=True)
class ErvcSolution:
    elimination_trace: Tuple[EquationSolve, ...]
    recovered_coefficients: Tuple[Tuple[Fraction, ...], ...]
    computed_values: Tuple[Tuple[str, Fraction], ...]
    final_answer: Fraction


def _equation_system(instance: ErvcInstance, eq: Equation) -> Tuple[List[List[int]], List[int]]:
    """Rows over (term coefficients.., constant) from the first p data points."""
    term_vars = [v for _, v in eq.terms]
    p = len(term_vars) + 1
    matrix, rhs = [], []
    for point in instance.data_points[:p]:
        values = dict(point)
        matrix.append([values[v] for v in term_vars] + [1])
        rhs.append(values[eq.target])
    return matrix, rhs


def _is_singular(matrix: Sequence[Sequence[int]]) -> bool:
    m = [[Fraction(x) for x in row] for row in matrix]
    size = len(m)
    for col in range(size):
        pivot = next((r for r in range(col, size) if m[r][col] != 0), None)
        if pivot is None:
            return True
        m[col], m[pivot] = m[pivot], m[col]
        for r in range(col + 1, size):
            factor = m[r][col] / m[col][col]
            for c in range(col, size):
                m[r][c] -= factor * m[col][c]
    return False


def ervc_generate(n: int, m: int, rng: random.Random) -> ErvcInstance:
    """Sample a fresh instance; singular observation draws are retried."""
    if not 1 <= m < n:
        raise ContractViolation("need 1 <= m < n")
    if n > len(LEXICON):
        raise ContractViolation(f"at most {len(LEXICON)} variables supported")

    names = rng.sample(LEXICON, n)
    known_names = tuple(names[: n - m])
    unknown_names = tuple(names[n - m:])

    # Relation 1 mixes every known; each later unknown hangs off the previous
    # one only.  Mixing a known with an unknown already determined by it would
    # make the observation matrix collinear, hence unsolvable.
    equations = []
    for j, target in enumerate(unknown_names):
        refs = list(known_names) if j == 0 else [unknown_names[j - 1]]
        terms = tuple((rng.randint(*COEFF_RANGE), v) for v in refs)
        equations.append(Equation(target, terms, rng.randint(*CONSTANT_RANGE)))
    equations = tuple(equations)

    depth = max(len(eq.terms) + 1 for eq in equations)  # data points needed

    for _ in range(GENERATION_RETRIES):
        points = []
        for _ in range(depth):
            values = {name: rng.randint(*KNOWN_VALUE_RANGE) for name in known_names}
            for eq in equations:
                values[eq.target] = eq.evaluate(values)
            points.append(tuple((name, values[name]) for name in unknown_names + known_names))
        candidate = ErvcInstance(
            known_names=known_names,
            unknown_names=unknown_names,
            equations=equations,
            data_points=tuple(points),
            query_values=tuple((name, rng.randint(*KNOWN_VALUE_RANGE)) for name in known_names),
        )
        if all(not _is_singular(_equation_system(candidate, eq)[0]) for eq in equations):
            return candidate
    raise GenerationError(f"no non-singular observation set for (n={n}, m={m})")


def _eliminate(matrix: List[List[int]], rhs: List[int]) -> Tuple[Tuple[Row, ...], List[object], Tuple[Fraction, ...]]:
    """Partial-pivoting elimination over integer rows, recording every event."""
    size = len(matrix)
    rows: List[Row] = [(tuple(r), b) for r, b in zip(matrix, rhs)]
    initial = tuple(rows)
    events: List[object] = []

    for col in range(size):
        pivot = max(range(col, size), key=lambda r: (abs(rows[r][0][col]), -r))
        if rows[pivot][0][col] == 0:
            raise ContractViolation("singular system reached elimination")
        if pivot != col:
            rows[col], rows[pivot] = rows[pivot], rows[col]
            events.append(SwapEvent(col, pivot, tuple(rows)))
        a_p = rows[col][0][col]
        for r in range(col + 1, size):
            a_r = rows[r][0][col]
            if a_r == 0:
                continue
            g = gcd(abs(a_p), abs(a_r))
            m1, m2 = a_r // g, a_p // g
            scaled_pivot: Row = (
                tuple(m1 * c for c in rows[col][0]), m1 * rows[col][1])
            scaled_target: Row = (
                tuple(m2 * c for c in rows[r][0]), m2 * rows[r][1])
            new_row: Row = (
                tuple(a - b for a, b in zip(scaled_pivot[0], scaled_target[0])),
                scaled_pivot[1] - scaled_target[1],
            )
            rows[r] = new_row
            events.append(
                EliminateEvent(col, r, m1, m2, scaled_pivot, scaled_target,
                               new_row, tuple(rows))
            )

    solution: List[Optional[Fraction]] = [None] * size
    for i in range(size - 1, -1, -1):
        coeffs, b = rows[i]
        resolved = tuple(
            (coeffs[t], t, solution[t]) for t in range(i + 1, size) if coeffs[t] != 0
        )
        reduced = Fraction(b) - sum((Fraction(c) * v for c, _, v in resolved), Fraction(0))
        value = reduced / coeffs[i]
        solution[i] = value
        events.append(BackSubEvent(i, coeffs[i], b, resolved, reduced, value))

    return initial, events, tuple(solution)  # type: ignore[arg-type]


def ervc_solve(instance: ErvcInstance) -> ErvcSolution:
    """Recover every relation's coefficients exactly, then evaluate the query."""
    trace = []
    recovered = []
    for j, eq in enumerate(instance.equations):
        matrix, rhs = _equation_system(instance, eq)
        initial, events, coefficients = _eliminate(matrix, rhs)
        trace.append(EquationSolve(j, initial, tuple(events), coefficients))
        recovered.append(coefficients)

    values: Dict[str, Fraction] = {name: Fraction(v) for name, v in instance.query_values}
    computed = []
    for eq, coeffs in zip(instance.equations, recovered):
        total = sum(
            (c * values[v] for c, (_, v) in zip(coeffs, eq.terms)), Fraction(0)
        ) + coeffs[-1]
        values[eq.target] = total
        computed.append((eq.target, total))

    return ErvcSolution(
        elimination_trace=tuple(trace),
        recovered_coefficients=tuple(recovered),
        computed_values=tuple(computed),
        final_answer=computed[-1][1],
    )


def substitution_answer(instance: ErvcInstance) -> int:
    """Independent oracle: plug the query into the ground-truth equations."""
    values = dict(instance.query_values)
    for eq in instance.equations:
        values[eq.target] = eq.evaluate(values)
    return values[instance.target]


def ground_truth_coefficients(instance: ErvcInstance) -> Tuple[Tuple[int, ...], ...]:
    return tuple(eq.coefficients for eq in instance.equations)


def condor_cheetah_instance() -> ErvcInstance:
    """The two-variable worked example: Condor = 3 * Cheetah + 3, query Cheetah = 5."""
    return ErvcInstance(
        known_names=("Cheetah",),
        unknown_names=("Condor",),
        equations=(Equation("Condor", ((3, "Cheetah"),), 3),),
        data_points=(
            (("Condor", 6), ("Cheetah", 1)),
            (("Condor", 12), ("Cheetah", 3)),
        ),
        query_values=(("Cheetah", 5),),
    )
