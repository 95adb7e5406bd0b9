from __future__ import annotations

import itertools
import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shapx.distributions import EmpiricalDataset
from shapx.errors import CapacityError, StructureError
from shapx.models import TreeModel, evaluate
from shapx.random_models import random_tree
from shapx.treeshap import (
    counterexample_dataset,
    counterexample_tree,
    audit,
    correct_expvalue,
    covers_from_dataset,
    expvalue,
    findings_to_json,
    findings_to_table,
)

F00, F10, F01, F11 = 0, 6, 0, 0


def test_counterexample():
    tree, data = counterexample_tree((F00, F10, F01, F11)), counterexample_dataset()
    assert covers_from_dataset(tree, data) == (6, 3, 3, 2, 1, 1, 2)
    assert expvalue(tree, (0, 0), {1}) == Fraction(1, 2) * F00 + Fraction(1, 2) * F10 == 3
    assert correct_expvalue(data, tree, (0, 0), {1}) == Fraction(2, 3) * F00 + Fraction(1, 3) * F10 == 2


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-20, 20), min_size=4, max_size=4))
def test_counterexample_discrepancy_formula(leaves):
    tree, data = counterexample_tree(tuple(leaves)), counterexample_dataset()
    findings = [f for f in audit(tree, data, (0, 0)) if f.S == (1,)]
    f00, f10 = leaves[0], leaves[1]
    expected = abs(Fraction(f10 - f00, 6))
    if expected == 0:
        assert not findings
    else:
        assert findings[0].discrepancy == expected


def test_full_set_is_path_lookup():
    rng = random.Random(3)
    for _ in range(30):
        n = rng.randint(1, 4)
        tree = random_tree(rng, n, depth=3)
        cover = tuple(1 for _ in tree.values)
        for x in itertools.product(range(3), repeat=n):
            assert expvalue(tree, x, range(n), cover) == evaluate(tree, x)


def test_empty_set_on_a_stump():
    stump = TreeModel((None, 0, 4), (1, -1, -1), (2, -1, -1), (Fraction(1, 2), None, None), (0, -1, -1),
                      cover=(4, 3, 1))
    assert expvalue(stump, (0,), set()) == 1


def test_correct_expvalue_trivial_cases():
    tree, data = counterexample_tree((1, 2, 3, 4)), counterexample_dataset()
    mean = Fraction(2 * 1 + 1 * 3 + 1 * 2 + 2 * 4, 6)
    assert correct_expvalue(data, tree, (0, 0), ()) == mean
    assert correct_expvalue(data, tree, (1, 0), (0, 1)) == 2


def test_single_row_dataset_has_no_findings():
    tree = counterexample_tree()
    data = EmpiricalDataset(((1, 1),))
    assert audit(tree, data, (1, 1)) == []


def _product_dataset(rng, n):
    """Counts factorize over features, so every cover ratio is a true conditional probability."""
    weights = [[rng.randint(1, 4) for _ in range(2)] for _ in range(n)]
    rows = tuple(itertools.product((0, 1), repeat=n))
    counts = []
    for row in rows:
        c = 1
        for i, v in enumerate(row):
            c *= weights[i][v]
        counts.append(c)
    return EmpiricalDataset(rows, tuple(counts))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_independent_datasets_produce_no_findings(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 4)
    data = _product_dataset(rng, n)
    tree = random_tree(rng, n, depth=3, max_value=1)
    for x in data.rows:
        assert audit(tree, data, x) == []


def test_zero_cover_is_reported():
    tree = counterexample_tree()
    data = EmpiricalDataset(((1, 1),))
    findings = audit(tree, data, (0, 0))
    undefined = [f for f in findings if f.expvalue is None]
    assert undefined and "zero cover" in undefined[0].note
    with pytest.raises(StructureError):
        expvalue(tree, (0, 0), {0}, covers_from_dataset(tree, data))


def test_expvalue_needs_covers():
    tree = TreeModel((None, 0, 4), (1, -1, -1), (2, -1, -1), (Fraction(1, 2), None, None), (0, -1, -1))
    with pytest.raises(StructureError):
        expvalue(tree, (0,), set())


def test_audit_cap():
    data = EmpiricalDataset(((1,) * 17,))
    tree = TreeModel((Fraction(1),), (-1,), (-1,), (None,), (-1,), n_inputs=17)
    with pytest.raises(CapacityError):
        audit(tree, data, (1,) * 17)


def test_reports():
    tree, data = counterexample_tree(), counterexample_dataset()
    findings = audit(tree, data, (0, 0), tree_id="appxA")
    payload = json.loads(findings_to_json(findings))
    assert payload["count"] == 1
    assert payload["findings"][0]["S"] == [2]
    assert payload["findings"][0]["discrepancy"] == {"num": "1", "den": "1"}
    table = findings_to_table(findings, data.names)
    assert "{X2}" in table and table.endswith("1 finding(s)")
