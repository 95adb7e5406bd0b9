from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shapx.distributions import EmpiricalDataset, conditional_expectation
from shapx.empirical import (
    OracleLog,
    Pp2Cnf,
    QuasiSymmetricAssignment,
    SubsetPolynomial,
    build_pp2cnf,
    empirical_shap_direct,
    empirical_shap_report,
    empirical_shap_via_pp2cnf,
    is_good,
    pp2cnf_expectation,
    pp2cnf_expectation_enumerate,
    pp2cnf_expectation_via_shap,
    q_coefficients_brute,
    subset_polynomial,
)
from shapx.engine import shap_brute
from shapx.errors import CapacityError
from shapx.models import FunctionModel
from shapx.random_models import random_dataset
from shapx.treeshap import counterexample_dataset, counterexample_tree

HALF = Fraction(1, 2)


def _matrix_strategy(max_m=5, max_n=5):
    return st.integers(1, max_m).flatmap(
        lambda m: st.integers(1, max_n).flatmap(
            lambda n: st.lists(st.lists(st.integers(0, 1), min_size=n, max_size=n), min_size=m, max_size=m)))


def test_build_pp2cnf_examples():
    assert build_pp2cnf([[1, 1], [1, 1]]).clauses == frozenset()
    assert build_pp2cnf([[0]]).clauses == {(1, 1)}
    assert build_pp2cnf([[1, 0], [0, 1]]).clauses == {(1, 2), (2, 1)}


def test_subset_polynomial_examples():
    ones = subset_polynomial([[1, 1], [1, 1]]).a
    assert ones[2] == (1, 2, 1) and ones[0] == ones[1] == (0, 0, 0)
    ident = subset_polynomial([[1, 0], [0, 1]]).a
    assert ident[2][0] == 1 and ident[1][1] == 2 and ident[0][2] == 1
    assert sum(map(sum, ident)) == 4


@settings(max_examples=50, deadline=None)
@given(_matrix_strategy())
def test_subset_polynomial_invariants(matrix):
    poly = subset_polynomial(matrix)
    m, n = len(matrix), len(matrix[0])
    assert poly.a[m][0] == 1
    assert sum(map(sum, poly.a)) == 2 ** n
    assert all(v >= 0 for row in poly.a for v in row)
    # Q(u, v) = P(1 + u, v), coefficients counted independently as all-ones rectangles
    assert poly.b() == q_coefficients_brute(matrix)


def test_pp2cnf_expectation_examples():
    single = Pp2Cnf(1, 1, {(1, 1)})
    assert pp2cnf_expectation(single, QuasiSymmetricAssignment(HALF, HALF)) == Fraction(3, 4)
    assert pp2cnf_expectation(Pp2Cnf(2, 3), QuasiSymmetricAssignment(HALF, HALF)) == 1
    ident = build_pp2cnf([[1, 0], [0, 1]])
    brute = Fraction(0)
    for u1, u2, v1, v2 in itertools.product((0, 1), repeat=4):
        brute += Fraction(int(ident.evaluate((u1, u2), (v1, v2))), 16)
    assert pp2cnf_expectation(ident, QuasiSymmetricAssignment(HALF, HALF)) == brute


def _random_assignment(rng, m, n):
    p = Fraction(rng.randint(0, 6), 6)
    q = Fraction(rng.randint(0, 6), 6)
    pins_u = {i for i in range(1, m + 1) if rng.random() < 0.2}
    pins_v = {j for j in range(1, n + 1) if rng.random() < 0.2}
    return QuasiSymmetricAssignment(p, q, pins_u, pins_v)


@settings(max_examples=50, deadline=None)
@given(_matrix_strategy(6, 6), st.integers(0, 10**6))
def test_pp2cnf_expectation_against_enumeration(matrix, seed):
    rng = random.Random(seed)
    formula = build_pp2cnf(matrix)
    for _ in range(3):
        a = _random_assignment(rng, formula.m, formula.n)
        assert pp2cnf_expectation(formula, a) == pp2cnf_expectation_enumerate(formula, a)


def test_claim_f6_identity_at_random_points():
    rng = random.Random(8)
    for _ in range(20):
        m, n = rng.randint(1, 7), rng.randint(1, 7)
        matrix = [[int(rng.random() < 0.6) for _ in range(n)] for _ in range(m)]
        formula = build_pp2cnf(matrix)
        poly = subset_polynomial(matrix)
        for _ in range(5):
            u, v = Fraction(rng.randint(1, 9), rng.randint(1, 4)), Fraction(rng.randint(1, 9), rng.randint(1, 4))
            a = QuasiSymmetricAssignment(1 / (1 + u), 1 / (1 + v))
            exp = pp2cnf_expectation_enumerate(formula, a)
            assert exp == poly.evaluate_q(u, v) / ((1 + u) ** m * (1 + v) ** n)


def test_subset_cap():
    with pytest.raises(CapacityError):
        subset_polynomial([[1] * 25])


def _indicator(row):
    row = tuple(row)
    return FunctionModel(lambda x: Fraction(int(tuple(x) == row)), len(row))


def test_direct_examples():
    one = EmpiricalDataset(((1, 0, 1),))
    model = FunctionModel(lambda x: Fraction(sum(x)), 3)
    assert [empirical_shap_direct(one, model, i, (1, 0, 1)) for i in range(3)] == [0, 0, 0]
    data, tree = counterexample_dataset(), counterexample_tree()
    report = empirical_shap_report(data, tree)
    assert sum(report.scores) == tree.evaluate((1, 1)) - conditional_expectation(tree, data, None)


def test_one_row_dataset_nonmatching_instance_is_not_all_zero():
    # F is constant on the support, but the explained instance is off-support
    one = EmpiricalDataset(((1, 0),))
    model = FunctionModel(lambda x: Fraction(1 + x[0] + x[1]), 2)
    report = empirical_shap_report(one, model, (1, 1))
    assert report.full_value == 0 and report.base_value == 2
    assert sum(report.scores) == -2


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_direct_matches_permutation_brute(seed):
    rng = random.Random(seed)
    data = random_dataset(rng, rng.randint(1, 5), rng.randint(1, 5), counts=True)
    n = data.n_features
    weights = [Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(1 << n)]
    model = FunctionModel(lambda x: weights[sum(b << i for i, b in enumerate(x))], n)
    x = tuple(rng.randint(0, 1) for _ in range(n))
    assert empirical_shap_report(data, model, x).scores == shap_brute(model, data, x, method="permutation").scores


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_forward_pipeline_matches_direct(seed):
    rng = random.Random(seed)
    data = random_dataset(rng, rng.randint(1, 5), rng.randint(1, 5), counts=rng.random() < 0.5)
    n = data.n_features
    weights = [Fraction(rng.randint(-4, 4)) for _ in range(1 << n)]
    model = FunctionModel(lambda x: weights[sum(b << i for i, b in enumerate(x))], n)
    x = tuple(rng.randint(0, 1) for _ in range(n))
    via = empirical_shap_via_pp2cnf(data, model, x)
    assert via.scores == empirical_shap_report(data, model, x).scores
    assert via.engine == "empirical-pp2cnf"


def test_forward_pipeline_all_ones_and_counterexample():
    ones = EmpiricalDataset(((1, 1, 1), (1, 1, 1)))
    model = _indicator((1, 1, 1))
    assert empirical_shap_via_pp2cnf(ones, model).scores == (0, 0, 0)
    data, tree = counterexample_dataset(), counterexample_tree((1, 2, 3, 4))
    for x in data.rows:
        assert empirical_shap_via_pp2cnf(data, tree, x).scores == empirical_shap_report(data, tree, x).scores


def _true_vk(matrix):
    """v_k for F = indicator of row 1, straight from the definition."""
    data = EmpiricalDataset(tuple(tuple(r) for r in matrix))
    model = _indicator(matrix[0])
    n = len(matrix[0])
    return [sum((conditional_expectation(model, data, {j: 1 for j in s})
                 for s in itertools.combinations(range(n), k)), Fraction(0)) for k in range(n + 1)]


def test_good_matrix_formula_and_adversarial_matrix():
    good = [[1, 1, 1], [1, 0, 1], [0, 1, 0]]
    assert is_good(good)
    assert subset_polynomial(good).v_k() == _true_vk(good)
    bad = [[1, 0, 1], [0, 1, 1], [1, 1, 0]]
    assert not is_good(bad)
    # without the column restriction the subset-polynomial shortcut is wrong here
    assert subset_polynomial(bad).v_k() != _true_vk(bad)
    data = EmpiricalDataset(tuple(tuple(r) for r in bad))
    model = _indicator(bad[0])
    log_report = empirical_shap_via_pp2cnf(data, model, (1, 0, 1), keep_intermediates=True)
    assert log_report.scores == empirical_shap_report(data, model, (1, 0, 1)).scores
    assert all(len(step["J1"]) <= 2 for step in log_report.intermediates["steps"])


def test_forward_pipeline_with_a_custom_oracle_counts_calls():
    calls = []

    def oracle(formula, assignment):
        calls.append(1)
        return pp2cnf_expectation(formula, assignment)

    data = random_dataset(random.Random(1), 3, 3)
    model = _indicator(data.rows[0])
    report = empirical_shap_via_pp2cnf(data, model, data.rows[0], oracle=oracle)
    assert report.oracle_calls == len(calls) > 0
    assert report.scores == empirical_shap_report(data, model, data.rows[0]).scores


def test_reverse_examples():
    single = Pp2Cnf(1, 1, {(1, 1)})
    assert pp2cnf_expectation_via_shap(single, QuasiSymmetricAssignment(HALF, HALF)) == Fraction(3, 4)
    assert pp2cnf_expectation_via_shap(Pp2Cnf(2, 2), QuasiSymmetricAssignment(HALF, HALF)) == 1


def test_reverse_on_random_3x3_formulas():
    rng = random.Random(33)
    for _ in range(5):
        matrix = [[int(rng.random() < 0.5) for _ in range(3)] for _ in range(3)]
        formula = build_pp2cnf(matrix)
        for _ in range(20):
            a = QuasiSymmetricAssignment(Fraction(rng.randint(0, 7), 7), Fraction(rng.randint(0, 7), 7))
            assert pp2cnf_expectation_via_shap(formula, a) == pp2cnf_expectation(formula, a)


def test_reverse_with_pins_and_zero_columns():
    formula = build_pp2cnf([[0, 0, 1], [0, 0, 0], [1, 0, 1]])
    rng = random.Random(2)
    for _ in range(10):
        a = _random_assignment(rng, 3, 3)
        log = OracleLog()
        assert pp2cnf_expectation_via_shap(formula, a, log=log) == pp2cnf_expectation_enumerate(formula, a)
        assert all(d[2] != 0 for d in log.determinants)


def test_reverse_uses_the_supplied_shap_oracle():
    seen = []

    def oracle(dataset, model, feature):
        seen.append(dataset.m)
        return empirical_shap_direct(dataset, model, feature)

    formula = build_pp2cnf([[1, 0], [0, 1], [1, 1]])
    a = QuasiSymmetricAssignment(Fraction(1, 3), Fraction(3, 4))
    assert pp2cnf_expectation_via_shap(formula, a, shap_oracle=oracle) == pp2cnf_expectation(formula, a)
    assert seen


def test_subset_polynomial_vk_definition():
    poly = SubsetPolynomial(((0, 0), (0, 1), (1, 0)))
    assert poly.v_k() == [Fraction(1, 2), Fraction(1)]
    assert math.isclose(float(poly.evaluate_p(2, 3)), 4 + 6)
