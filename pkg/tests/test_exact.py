from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shapx.exact import (
    as_fraction,
    coalition_weight,
    fraction_to_json,
    horner,
    interpolate,
    solve_exact,
    vandermonde_det,
)

rationals = st.fractions(min_value=-20, max_value=20, max_denominator=12)


def test_as_fraction_accepts_the_documented_forms():
    assert as_fraction(3) == 3
    assert as_fraction("3/7") == Fraction(3, 7)
    assert as_fraction("0.25") == Fraction(1, 4)
    assert as_fraction({"num": "-2", "den": "6"}) == Fraction(-1, 3)
    assert as_fraction(0.5) == Fraction(1, 2)
    with pytest.raises(TypeError):
        as_fraction(True)


def test_fraction_json_uses_strings():
    assert fraction_to_json(Fraction(-3, 4)) == {"num": "-3", "den": "4"}


@pytest.mark.parametrize("n", range(0, 9))
def test_coalition_weights_form_a_distribution_over_subsets(n):
    # sum over all subsets of the n others of k!(n-k)!/(n+1)! is 1
    total = sum(math.comb(n, k) * coalition_weight(k, n) for k in range(n + 1))
    assert total == 1


def test_coalition_weight_matches_factorial_form():
    assert coalition_weight(1, 3) == Fraction(math.factorial(1) * math.factorial(2), math.factorial(4))


@settings(max_examples=60, deadline=None)
@given(st.lists(rationals, min_size=1, max_size=7), st.integers(min_value=-3, max_value=5))
def test_interpolation_recovers_polynomials_at_consecutive_nodes(coeffs, start):
    xs = list(range(start, start + len(coeffs)))
    ys = [horner(coeffs, x) for x in xs]
    assert interpolate(xs, ys) == [Fraction(c) for c in coeffs]


@settings(max_examples=60, deadline=None)
@given(st.lists(rationals, min_size=1, max_size=6, unique=True), st.data())
def test_interpolation_at_arbitrary_nodes(xs, data):
    coeffs = data.draw(st.lists(rationals, min_size=len(xs), max_size=len(xs)))
    ys = [horner(coeffs, x) for x in xs]
    assert interpolate(xs, ys) == [Fraction(c) for c in coeffs]


def test_interpolation_rejects_repeated_nodes():
    with pytest.raises(ValueError):
        interpolate([1, 1], [0, 0])


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=5), st.data())
def test_solve_exact_solves_nonsingular_systems(n, data):
    matrix = [data.draw(st.lists(rationals, min_size=n, max_size=n)) for _ in range(n)]
    rhs = data.draw(st.lists(rationals, min_size=n, max_size=n))
    try:
        x, det = solve_exact(matrix, rhs)
    except ZeroDivisionError:
        return
    assert det != 0
    for row, r in zip(matrix, rhs):
        assert sum(a * b for a, b in zip(row, x)) == r


def test_solve_exact_reports_the_vandermonde_determinant():
    xs = [Fraction(2), Fraction(3), Fraction(5)]
    matrix = [[x ** k for k in range(3)] for x in xs]
    _, det = solve_exact(matrix, [1, 2, 3])
    assert det == vandermonde_det(xs) == (3 - 2) * (5 - 2) * (5 - 3)


def test_solve_exact_singular():
    with pytest.raises(ZeroDivisionError):
        solve_exact([[1, 2], [2, 4]], [1, 2])
