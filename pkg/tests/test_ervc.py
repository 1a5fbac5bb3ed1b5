import random
from fractions import Fraction

import pytest

from cotbench import ervc


def test_worked_example_recovery_and_answer():
    inst = ervc.condor_cheetah_instance()
    sol = ervc.ervc_solve(inst)
    assert sol.recovered_coefficients == ((Fraction(3), Fraction(3)),)
    assert sol.final_answer == 18
    assert ervc.substitution_answer(inst) == 18


def test_worked_example_elimination_events():
    sol = ervc.ervc_solve(ervc.condor_cheetah_instance())
    events = sol.elimination_trace[0].events
    swap = events[0]
    assert isinstance(swap, ervc.SwapEvent)
    assert (swap.row_a, swap.row_b) == (0, 1)
    elim = events[1]
    assert isinstance(elim, ervc.EliminateEvent)
    assert elim.pivot_multiplier == 1
    assert elim.target_multiplier == 3
    # New Equation 2: -2 K2 = -6
    assert elim.new_row == ((0, -2), -6)


def test_generate_shapes_and_ranges():
    rng = random.Random(0)
    inst = ervc.ervc_generate(4, 3, rng)
    assert inst.n == 4 and inst.m == 3
    assert len(inst.equations) == 3
    assert len(inst.data_points) == max(
        len(eq.terms) for eq in inst.equations) + 1
    for eq in inst.equations:
        for coeff, _ in eq.terms:
            assert 1 <= coeff <= 5
        assert 0 <= eq.constant <= 9
    for _, value in inst.query_values:
        assert 1 <= value <= 9
    # Chain topology: first relation reads the knowns, later ones chain.
    assert {v for _, v in inst.equations[0].terms} == set(inst.known_names)
    for prev, eq in zip(inst.unknown_names, inst.equations[1:]):
        assert [v for _, v in eq.terms] == [prev]


@pytest.mark.parametrize("n,m", [(2, 1), (3, 1), (3, 2), (4, 1), (4, 3), (5, 2)])
def test_exact_recovery_random(n, m):
    rng = random.Random(n * 100 + m)
    for _ in range(20):
        inst = ervc.ervc_generate(n, m, rng)
        sol = ervc.ervc_solve(inst)
        for recovered, eq in zip(sol.recovered_coefficients, inst.equations):
            assert recovered == tuple(Fraction(c) for c in eq.coefficients)
        assert sol.final_answer == ervc.substitution_answer(inst)


def test_observation_rows_are_consistent():
    rng = random.Random(3)
    inst = ervc.ervc_generate(3, 2, rng)
    for row in inst.data_points:
        values = dict(row)
        for eq in inst.equations:
            assert eq.evaluate(values) == values[eq.target]


def test_pivot_prefers_largest_absolute_value():
    # Rows ((1, 5), (3, 11)): pivot selection must swap row 2 up.
    matrix = [[1, 1], [3, 1]]
    rhs = [5, 11]
    _, events, coeffs = ervc._eliminate(matrix, rhs)
    assert isinstance(events[0], ervc.SwapEvent)
    assert coeffs == (Fraction(3), Fraction(2))


def test_generation_is_reproducible():
    a = ervc.ervc_generate(3, 2, random.Random(9))
    b = ervc.ervc_generate(3, 2, random.Random(9))
    assert a == b
