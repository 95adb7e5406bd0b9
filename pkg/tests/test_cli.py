from __future__ import annotations

import json
import math
import random
import shutil
from fractions import Fraction
from pathlib import Path

import mpmath
import pytest

from shapx.cli import EXIT_ERROR, EXIT_FINDINGS, EXIT_OK, RunConfig, main
from shapx.formats import (
    dataset_to_csv,
    ind_from_json,
    ind_to_json,
    model_to_json,
    parse_rational,
)
from shapx.random_models import MODEL_FACTORIES, random_dataset, random_product_distribution

SAMPLES = Path(__file__).resolve().parent.parent / "docs" / "samples"


@pytest.fixture
def samples(tmp_path):
    for f in SAMPLES.iterdir():
        shutil.copy(f, tmp_path / f.name)
    return tmp_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "json")
    return code, json.loads(out)


def fractions(payload_scores):
    return [parse_rational(s) for s in payload_scores]


def test_shap_linear_sum_rule(samples, capsys):
    code, payload = run_json(capsys, "shap", "--model", samples / "linear.json", "--dist", samples / "ind.json")
    assert code == EXIT_OK
    scores = fractions(payload["scores"])
    assert scores == [Fraction(1), Fraction(-1, 12), Fraction(2, 3)]
    gap = parse_rational(payload["full_value"]) - parse_rational(payload["base_value"])
    assert sum(scores) == gap == Fraction(19, 12)


def test_shap_table_output(samples, capsys):
    code, out, _ = run(capsys, "shap", "--model", samples / "linear.json", "--dist", samples / "ind.json")
    assert code == EXIT_OK
    assert "-1/12" in out and "F(x) - E[F] = 19/12" in out


def test_shap_constant_is_all_zero(samples, capsys):
    code, payload = run_json(capsys, "shap", "--model", samples / "const.json", "--dist", samples / "ind.json")
    assert code == EXIT_OK and all(s == 0 for s in fractions(payload["scores"]))


def test_shap_tree_on_data_brute_equals_auto(samples, capsys):
    base = ["shap", "--model", samples / "appxA.json", "--data", samples / "appxA.csv", "--instance", "0,0"]
    _, brute = run_json(capsys, *base, "--engine", "brute")
    _, auto = run_json(capsys, *base)
    _, via = run_json(capsys, *base, "--engine", "pp2cnf")
    assert fractions(brute["scores"]) == fractions(auto["scores"]) == fractions(via["scores"])
    assert sum(fractions(brute["scores"])) == 0 - Fraction(6, 6)


def test_auto_and_brute_identical_golden(tmp_path, capsys):
    rng = random.Random(11)
    for k, kind in enumerate(sorted(MODEL_FACTORIES) * 2):
        n = rng.randint(1, 4)
        model = MODEL_FACTORIES[kind](rng, n, 2)
        dist = random_product_distribution(rng, n, 2)
        mpath, dpath = tmp_path / f"m{k}.json", tmp_path / f"d{k}.json"
        mpath.write_text(json.dumps(model_to_json(model)))
        dpath.write_text(json.dumps(ind_to_json(dist)))
        x = ",".join(str(rng.randint(0, 1)) for _ in range(n))
        outs = []
        for engine in ("auto", "brute"):
            code, out, _ = run(capsys, "shap", "--model", mpath, "--dist", dpath, "--instance", x,
                               "--engine", engine, "--format", "json")
            assert code == EXIT_OK
            payload = json.loads(out)
            outs.append((payload["scores"], payload["full_value"], payload["base_value"]))
        assert outs[0] == outs[1]


def test_json_round_trips_through_parsers(samples, capsys):
    _, payload = run_json(capsys, "shap", "--model", samples / "linear.json", "--dist", samples / "ind.json")
    for s in payload["scores"]:
        value = parse_rational(s)
        assert json.loads(json.dumps({"num": str(value.numerator), "den": str(value.denominator)})) == s
    assert ind_from_json(json.loads((samples / "ind.json").read_text())).n_features == 3


def test_expect_examples(samples, capsys):
    code, payload = run_json(capsys, "expect", "--model", samples / "and.nnf", "--dist", samples / "ind2.json")
    assert code == EXIT_OK and parse_rational(payload["expectation"]) == Fraction(1, 4)
    code, payload = run_json(capsys, "expect", "--pp2cnf", samples / "empty.pp2cnf")
    assert parse_rational(payload["expectation"]) == 1
    code, payload = run_json(capsys, "expect", "--pp2cnf", samples / "phi.pp2cnf", "--p", "1/3", "--q", "2/5")
    assert parse_rational(payload["expectation"]) == Fraction(9, 25)


def test_expect_on_emitted_logistic_gadget(tmp_path, capsys):
    path = tmp_path / "gadget.json"
    code, out, _ = run(capsys, "gadget", "numpar", 1, 1, "--emit-model", path)
    assert code == EXIT_OK and "|P| = 2" in out
    code, payload = run_json(capsys, "expect", "--model", path, "--dist", "uniform", "--precision", "30")
    eps = Fraction(1, 2 ** 5)
    with mpmath.workprec(120):
        e = mpmath.mpf(payload["expectation"])
        count = 2 ** 2 - 2 ** 3 * e / (1 - mpmath.mpf(eps.numerator) / eps.denominator)
        assert int(mpmath.ceil(count)) == 2


def test_audit_treeshap_exit_code(samples, capsys):
    code, out, _ = run(capsys, "audit-treeshap", "--tree", samples / "appxA.json", "--data", samples / "appxA.csv")
    assert code == EXIT_FINDINGS
    assert "{X2}" in out
    code, payload = run_json(capsys, "audit-treeshap", "--tree", samples / "appxA.json", "--data",
                             samples / "appxA.csv", "--instance", "0,0")
    assert code == EXIT_FINDINGS
    (finding,) = payload["findings"]
    assert finding["S"] == [2]
    assert parse_rational(finding["expvalue"]) == 3 and parse_rational(finding["correct"]) == 2
    assert parse_rational(finding["discrepancy"]) == 1


def test_audit_clean_dataset_exits_zero(samples, capsys):
    (samples / "one.csv").write_text("X1,X2\n1,1\n")
    code, out, _ = run(capsys, "audit-treeshap", "--tree", samples / "appxA.json", "--data", samples / "one.csv")
    assert code == EXIT_OK and out.startswith("no findings")


@pytest.mark.parametrize("k, via, expected", [
    ((1, 1, 2), "expectation", "|P| = 2"),
    ((1, 3), "expectation", "|P| = 0"),
    ((1, 1, 2), "shap", "NUMPAR solvable: yes"),
    ((1, 3), "shap", "NUMPAR solvable: no"),
])
def test_gadget_examples(capsys, k, via, expected):
    code, out, _ = run(capsys, "gadget", "numpar", *k, "--via", via)
    assert code == EXIT_OK and out.splitlines()[0] == expected


def test_gadget_low_precision_is_an_error(capsys):
    code, _, err = run(capsys, "gadget", "numpar", 3, 1, 1, 2, 2, 1, 7, 4, 9, 10, "--bits", "8")
    assert code == EXIT_ERROR and "error:" in err


def test_reduce_forward(samples, capsys):
    code, out, _ = run(capsys, "reduce", "--data", samples / "d.csv", "--direction", "shap-from-pp2cnf")
    assert code == EXIT_OK and out.splitlines()[0] == "MATCH"
    code, payload = run_json(capsys, "reduce", "--data", samples / "d.csv", "--direction", "shap-from-pp2cnf",
                             "--model", samples / "linear.json", "--instance", "1,0,1")
    assert code == EXIT_OK and payload["match"] is True


def test_reduce_reverse(samples, capsys):
    code, payload = run_json(capsys, "reduce", "--direction", "pp2cnf-from-shap", "--pp2cnf",
                             samples / "phi.pp2cnf", "--p", "1/3", "--q", "2/5")
    assert code == EXIT_OK and payload["match"] is True
    assert parse_rational(payload["expectation"]) == Fraction(9, 25)


def test_selftest_passes(capsys):
    code, out, _ = run(capsys, "selftest", "--seed", "3")
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)


@pytest.mark.parametrize("argv, needle", [
    (["shap", "--model", "missing.json", "--dist", "uniform"], "cannot read"),
    (["shap", "--model", "{linear}", "--dist", "uniform", "--instance", "1,x"], "cannot read"),
    (["expect"], "--pp2cnf"),
])
def test_errors_exit_two(capsys, argv, needle):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_ERROR and needle in err


def test_bad_files_report_positions(samples, capsys):
    (samples / "bad.nnf").write_text("nnf 1 0 1\nL 7\n")
    code, _, err = run(capsys, "shap", "--model", samples / "bad.nnf", "--dist", "uniform")
    assert code == EXIT_ERROR and "line 2, column 3" in err
    code, _, err = run(capsys, "shap", "--model", samples / "linear.json", "--dist", samples / "ind.json",
                       "--instance", "1,0")
    assert code == EXIT_ERROR and "3 features" in err
    code, _, err = run(capsys, "shap", "--model", samples / "linear.json", "--dist", samples / "ind2.json")
    assert code == EXIT_ERROR


def test_logistic_beyond_cap_names_hardness(tmp_path, capsys):
    path = tmp_path / "lr.json"
    path.write_text(json.dumps({"type": "logistic", "weights": [1] * 41}))
    code, _, err = run(capsys, "shap", "--model", path, "--dist", "uniform")
    assert code == EXIT_ERROR and "#P-hard" in err


def test_run_config_invariants():
    with pytest.raises(ValueError):
        RunConfig("shap", brute_cap=0)
    with pytest.raises(ValueError):
        RunConfig("shap", precision=0)


def test_dataset_csv_from_random_rows_is_accepted(tmp_path, capsys):
    data = random_dataset(random.Random(2), 5, 3, counts=True)
    path = tmp_path / "r.csv"
    path.write_text(dataset_to_csv(data))
    code, out, _ = run(capsys, "reduce", "--data", path, "--direction", "shap-from-pp2cnf")
    assert code == EXIT_OK and out.startswith("MATCH")
