from __future__ import annotations

import itertools
import json
import random
from fractions import Fraction
from pathlib import Path

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shapx.distributions import EmpiricalDataset, NaiveBayesNet
from shapx.empirical import Pp2Cnf
from shapx.errors import ModelFormatError
from shapx.formats import (
    dataset_to_csv,
    ind_from_json,
    ind_to_json,
    load_json_text,
    load_model,
    model_from_json,
    model_to_json,
    nbn_from_json,
    nbn_to_json,
    parse_dataset_csv,
    parse_nnf,
    parse_pp2cnf,
    parse_rational,
    rational_json,
    write_nnf,
    write_pp2cnf,
)
from shapx.models import CnfFormula, LogisticModel, evaluate
from shapx.random_models import MODEL_FACTORIES, random_product_distribution

SAMPLES = Path(__file__).resolve().parent.parent / "docs" / "samples"


def test_parse_rational_forms():
    assert parse_rational(3) == 3
    assert parse_rational(0.1) == Fraction(1, 10)
    assert parse_rational("-2/6") == Fraction(-1, 3)
    assert parse_rational({"num": "7", "den": "-14"}) == Fraction(-1, 2)
    for bad in (True, "x", {"num": 1, "den": 0}, [1], None):
        with pytest.raises(ModelFormatError):
            parse_rational(bad)


def test_rational_json_forms():
    assert rational_json(Fraction(-3, 4)) == {"num": "-3", "den": "4"}
    with mpmath.workprec(100):
        assert rational_json(mpmath.mpf(1) / 3).startswith("0.33333333333333333")


def test_bad_json_reports_position():
    with pytest.raises(ModelFormatError) as exc:
        load_json_text('{\n  "type": "linear",,\n}')
    assert exc.value.line == 2 and exc.value.column is not None


def _same_function(a, b, n, arity):
    return all(evaluate(a, x) == evaluate(b, x) for x in itertools.product(range(arity), repeat=n))


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(sorted(MODEL_FACTORIES)), st.integers(1, 5), st.integers(0, 10**6))
def test_model_json_round_trip(kind, n, seed):
    rng = random.Random(seed)
    arity = 2 if kind == "ddnnf" else 3
    model = MODEL_FACTORIES[kind](rng, n, arity)
    text = json.dumps(model_to_json(model))
    back = model_from_json(json.loads(text))
    assert model_to_json(back) == model_to_json(model)
    assert _same_function(model, back, n, arity)


def test_logistic_and_cnf_round_trip():
    lr = LogisticModel((Fraction(-1, 2), Fraction(3), Fraction(-2, 7)), 96)
    assert model_from_json(model_to_json(lr)) == lr
    cnf = CnfFormula((((0, True), (1, False)), ((2, True),)), 3)
    obj = model_to_json(cnf)
    assert obj["clauses"] == [[1, -2], [3]]
    assert model_from_json(obj) == cnf


@pytest.mark.parametrize("obj", [
    [],
    {"weights": [1]},
    {"type": "nope"},
    {"type": "linear"},
    {"type": "linear", "weights": "12"},
    {"type": "tree", "v": [1, 2], "a": [None], "b": [None, None], "t": [None, None], "d": [None, None]},
    {"type": "cnf", "n_vars": 2, "clauses": [[0]]},
])
def test_model_errors(obj):
    with pytest.raises(ModelFormatError):
        model_from_json(obj)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10**6))
def test_nnf_round_trip(n, seed):
    model = MODEL_FACTORIES["ddnnf"](random.Random(seed), n, 2)
    text = write_nnf(model)
    back = parse_nnf(text)
    assert write_nnf(back) == text or _same_function(model, back, n, 2)
    assert _same_function(model, back, n, 2)


def test_nnf_sample():
    circuit = load_model(SAMPLES / "and.nnf")
    assert [evaluate(circuit, x) for x in itertools.product((0, 1), repeat=2)] == [0, 0, 0, 1]
    assert write_nnf(circuit) == "nnf 3 2 2\nL 1\nL 2\nA 2 0 1\n"


@pytest.mark.parametrize("text, line, column", [
    ("nnf 1 0 1\nL 3\n", 2, 3),
    ("nnf 2 1 1\nL 1\nA 1 5\n", 3, 5),
    ("nnf 1 0 1\nX 1\n", 2, 1),
    ("nnf 1 0 1\nL x\n", 2, 3),
    ("nnf 1 0\n", 1, 1),
    ("L 1\n", 1, 1),
    ("nnf 1 0 1\n  L 1 2\n", 2, 7),
])
def test_nnf_errors_carry_positions(text, line, column):
    with pytest.raises(ModelFormatError) as exc:
        parse_nnf(text)
    assert (exc.value.line, exc.value.column) == (line, column)


def test_nnf_count_mismatch():
    with pytest.raises(ModelFormatError, match="declares 2 nodes"):
        parse_nnf("nnf 2 0 1\nL 1\n")
    with pytest.raises(ModelFormatError, match="not decomposable|invalid d-DNNF"):
        parse_nnf("nnf 3 2 1\nL 1\nL -1\nA 2 0 1\n")


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(2, 4), st.integers(0, 10**6))
def test_ind_round_trip(n, arity, seed):
    dist = random_product_distribution(random.Random(seed), n, arity, positive=False)
    assert ind_from_json(json.loads(json.dumps(ind_to_json(dist)))) == dist


def test_ind_with_domains_and_errors():
    dist = ind_from_json({"probs": [["1/4", "3/4"]], "domains": [[2, 5]]})
    assert dist.domains == ((2, 5),)
    assert ind_from_json(ind_to_json(dist)) == dist
    for bad in ({"probs": [["1/2", "1/3"]]}, [["-1", "2"]], "x", [[0.5, 0.5], 3]):
        with pytest.raises(ModelFormatError):
            ind_from_json(bad)


def test_nbn_round_trip():
    net = NaiveBayesNet(Fraction(1, 3), (Fraction(1, 2), Fraction(2, 3)), (Fraction(1, 4), Fraction(1, 5)))
    assert nbn_from_json(json.loads(json.dumps(nbn_to_json(net)))) == net
    with pytest.raises(ModelFormatError):
        nbn_from_json({"prior": "1/2", "cond1": ["1/2"]})
    with pytest.raises(ModelFormatError):
        nbn_from_json({"prior": "3/2", "cond1": ["1/2"], "cond0": ["1/2"]})


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.lists(st.integers(0, 1), min_size=3, max_size=3), st.integers(1, 4)),
                min_size=1, max_size=8), st.booleans())
def test_dataset_round_trip(rows_counts, with_counts):
    data = EmpiricalDataset(tuple(tuple(r) for r, _ in rows_counts), tuple(c for _, c in rows_counts),
                            ("A", "B", "C"))
    back = parse_dataset_csv(dataset_to_csv(data, with_counts))
    assert back.names == data.names
    assert back.m == data.m
    assert sorted(back.expanded()) == sorted(data.expanded())


def test_dataset_sample_and_errors():
    data = parse_dataset_csv((SAMPLES / "appxA.csv").read_text())
    assert data.names == ("X1", "X2") and data.m == 6
    with pytest.raises(ModelFormatError) as exc:
        parse_dataset_csv("A,B\n0,1\n1,2\n")
    assert (exc.value.line, exc.value.column) == (3, 3)
    with pytest.raises(ModelFormatError) as exc:
        parse_dataset_csv("A,count\n1,0\n")
    assert exc.value.line == 2
    for bad in ("", "A,B\n", "A,B\n1\n"):
        with pytest.raises(ModelFormatError):
            parse_dataset_csv(bad)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 4), st.integers(0, 4), st.data())
def test_pp2cnf_round_trip(m, n, data):
    cells = [(i, j) for i in range(1, m + 1) for j in range(1, n + 1)]
    clauses = data.draw(st.sets(st.sampled_from(cells))) if cells else set()
    formula = Pp2Cnf(m, n, frozenset(clauses))
    assert parse_pp2cnf(write_pp2cnf(formula)) == formula


def test_pp2cnf_errors():
    assert parse_pp2cnf("c comment\np pp2cnf 2 2\n1 1\n2 2\n").clauses == {(1, 1), (2, 2)}
    for text, line in (("1 1\n", 1), ("p pp2cnf 1 1\n1 2\n", 2), ("p pp2cnf 1 1\n1\n", 2), ("", 1)):
        with pytest.raises(ModelFormatError) as exc:
            parse_pp2cnf(text)
        assert exc.value.line == line


def test_sample_files_load():
    for name in ("appxA.json", "linear.json", "const.json"):
        load_model(SAMPLES / name)
    with pytest.raises(ModelFormatError, match="cannot read"):
        load_model(SAMPLES / "missing.json")
