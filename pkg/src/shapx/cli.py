"""Command-line interface: shap, expect, audit-treeshap, gadget, reduce, selftest."""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import empirical, engine, formats, gadgets, treeshap
from .distributions import BRUTE_FORCE_CAP, EmpiricalDataset, ProductDistribution
from .errors import ReductionMismatch, ShapxError
from .exact import fraction_to_json
from .models import DdnnfCircuit, FunctionModel, LogisticModel, expectation

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_ERROR = 2


class UsageError(ValueError):
    """Options that parse but do not fit together."""


@dataclass
class RunConfig:
    command: str
    fmt: str = "table"
    precision: int = 12
    seed: int = 0
    brute_cap: int = BRUTE_FORCE_CAP

    def __post_init__(self):
        if self.brute_cap < 1:
            raise ValueError("--brute-cap must be positive")
        if self.precision < 1:
            raise ValueError("--precision must be at least 1")


def _value_json(value):
    if isinstance(value, (int, Fraction)):
        return fraction_to_json(Fraction(value))
    return formats.rational_json(value)


def _value_text(value, digits: int) -> str:
    if isinstance(value, (int, Fraction)):
        value = Fraction(value)
        if value.denominator == 1:
            return str(value)
        return f"{value}  ({engine.render_decimal(value, digits)})"
    return engine.render_decimal(value, digits)


def _parse_instance(text: str | None, n: int):
    if text is None:
        return None
    try:
        values = tuple(int(v) for v in text.replace(" ", "").split(","))
    except ValueError:
        raise UsageError(f"--instance expects comma-separated integers, got {text!r}") from None
    if len(values) != n:
        raise UsageError(f"--instance has {len(values)} values but there are {n} features")
    return values


def _parse_indices(text: str | None) -> frozenset:
    if not text:
        return frozenset()
    return frozenset(int(v) for v in text.split(","))


def _emit(cfg: RunConfig, payload: dict, table: str) -> None:
    if cfg.fmt == "json":
        print(json.dumps(payload, indent=2))
    else:
        print(table)


def _report_payload(report: engine.ShapReport, names, digits: int) -> dict:
    return {
        "engine": report.engine,
        "oracle_calls": report.oracle_calls,
        "instance": list(report.instance),
        "features": list(names),
        "scores": [_value_json(s) for s in report.scores],
        "decimal": report.decimals(digits),
        "full_value": _value_json(report.full_value),
        "base_value": _value_json(report.base_value),
        "notes": list(report.notes),
    }


def _report_table(report: engine.ShapReport, names, digits: int) -> str:
    width = max(len("feature"), *(len(n) for n in names))
    lines = [f"engine: {report.engine}   oracle calls: {report.oracle_calls}",
             f"instance: {','.join(map(str, report.instance))}",
             f"{'feature'.ljust(width)}  score"]
    for name, s in zip(names, report.scores):
        lines.append(f"{name.ljust(width)}  {_value_text(s, digits)}")
    lines.append(f"F(x) - E[F] = {_value_text(report.full_value - report.base_value, digits)}")
    lines.extend(f"note: {n}" for n in report.notes)
    return "\n".join(lines)


def _load_distribution(args, n_model: int):
    if getattr(args, "dist", None):
        if args.dist == "uniform":
            return ProductDistribution.uniform(n_model)
        return formats.load_ind(args.dist)
    if getattr(args, "data", None):
        return formats.load_dataset(args.data)
    if getattr(args, "nbn", None):
        return formats.load_nbn(args.nbn)
    raise UsageError("give one of --dist, --data or --nbn")


def _check_circuit(model, args) -> list[str]:
    notes = []
    if isinstance(model, DdnnfCircuit):
        if args.verify_determinism:
            model.verify_determinism()
            notes.append("OR-gate determinism verified by enumeration")
        elif model.unverified_or:
            notes.append(f"determinism of {len(model.unverified_or)} unannotated OR gate(s) trusted, not checked")
    return notes


def cmd_shap(cfg: RunConfig, args) -> int:
    model = formats.load_model(args.model)
    notes = _check_circuit(model, args)
    dist = _load_distribution(args, model.n_features)
    x = _parse_instance(args.instance, dist.n_features)
    if args.engine == "pp2cnf":
        if not isinstance(dist, EmpiricalDataset):
            raise UsageError("--engine pp2cnf needs --data")
        report = empirical.empirical_shap_via_pp2cnf(dist, model, x)
    else:
        report = engine.shap_all(model, dist, x, engine=args.engine, brute_cap=cfg.brute_cap)
    if notes:
        report = engine.ShapReport(report.scores, report.engine, report.oracle_calls, report.instance,
                                   report.full_value, report.base_value, report.notes + tuple(notes))
    names = getattr(dist, "names", None) or tuple(f"X{i + 1}" for i in range(dist.n_features))
    _emit(cfg, _report_payload(report, names, cfg.precision), _report_table(report, names, cfg.precision))
    return EXIT_OK


def cmd_expect(cfg: RunConfig, args) -> int:
    if args.pp2cnf:
        formula = formats.load_pp2cnf(args.pp2cnf)
        assignment = empirical.QuasiSymmetricAssignment(
            formats.parse_rational(args.p, "--p"), formats.parse_rational(args.q, "--q"),
            _parse_indices(args.pin_u), _parse_indices(args.pin_v))
        value = empirical.pp2cnf_expectation(formula, assignment)
        what = "E[Phi]"
    else:
        if not args.model:
            raise UsageError("give --model (with --dist/--data) or --pp2cnf")
        model = formats.load_model(args.model)
        _check_circuit(model, args)
        dist = _load_distribution(args, model.n_features)
        if isinstance(dist, ProductDistribution):
            value = expectation(model, dist, brute_cap=cfg.brute_cap)
        else:
            from .distributions import conditional_expectation

            value = conditional_expectation(model, dist, None, brute_cap=cfg.brute_cap)
        what = "E[F]"
    payload = {"expectation": _value_json(value), "decimal": engine.render_decimal(value, cfg.precision)}
    _emit(cfg, payload, f"{what} = {_value_text(value, cfg.precision)}")
    return EXIT_OK


def cmd_audit_treeshap(cfg: RunConfig, args) -> int:
    tree = formats.load_model(args.tree)
    from .models import TreeModel

    if not isinstance(tree, TreeModel):
        raise UsageError("audit-treeshap needs a tree model")
    data = formats.load_dataset(args.data)
    if args.instance:
        instances = [_parse_instance(args.instance, data.n_features)]
    else:
        instances = sorted(set(data.rows))
    cover = tree.cover if args.tree_covers else None
    tree_id = Path(args.tree).stem
    findings = []
    for x in instances:
        findings.extend(treeshap.audit(tree, data, x, tree_id, cover=cover))
    if cfg.fmt == "json":
        print(treeshap.findings_to_json(findings))
    else:
        by_instance: dict = {}
        for f in findings:
            by_instance.setdefault(f.instance, []).append(f)
        if not findings:
            print("no findings: EXPVALUE matches the conditional expectation for every instance and S")
        for x, group in by_instance.items():
            print(f"instance {','.join(map(str, x))}")
            print(treeshap.findings_to_table(group, data.names))
    return EXIT_FINDINGS if findings else EXIT_OK


def cmd_gadget(cfg: RunConfig, args) -> int:
    inst = gadgets.NumparInstance(tuple(args.k))
    if args.via == "expectation":
        result = gadgets.count_partitions_via_expectation(inst, args.bits)
        if args.emit_model:
            model = gadgets.logistic_gadget(inst, result.params.m)
            Path(args.emit_model).write_text(json.dumps(formats.model_to_json(model), indent=2) + "\n")
        payload = {"count": result.count, "m": result.params.m, "epsilon": fraction_to_json(result.params.epsilon),
                   "precision_bits": result.params.precision, "doubled": result.doubled,
                   "expectation": formats.rational_json(gadgets.interval_midpoint(result.expectation, result.params.precision))}
        table = f"|P| = {result.count}\nm = {result.params.m}, eps = {result.params.epsilon}"
    else:
        result = gadgets.numpar_decide_via_shap(inst, args.bits)
        if args.emit_model:
            net, _ = gadgets.nbn_gadget(inst, result.params.m)
            Path(args.emit_model).write_text(json.dumps(formats.nbn_to_json(net), indent=2) + "\n")
        shap = formats.rational_json(gadgets.interval_midpoint(result.shap, result.params.precision))
        payload = {"solvable": result.solvable, "shap": shap,
                   "threshold": fraction_to_json(result.threshold), "m": result.params.m,
                   "epsilon": fraction_to_json(result.params.epsilon),
                   "precision_bits": result.params.precision, "doubled": result.doubled}
        table = (f"NUMPAR solvable: {'yes' if result.solvable else 'no'}\n"
                 f"SHAP(X0) = {shap}, threshold = {result.threshold}\n"
                 f"m = {result.params.m}, eps = {result.params.epsilon}")
    if result.doubled:
        table += "\nnote: odd total; every number was doubled (partitions unchanged)"
    _emit(cfg, payload, table)
    return EXIT_OK


def _indicator_model(x):
    x = tuple(x)
    return FunctionModel(lambda z: Fraction(int(tuple(z) == x)), len(x))


def cmd_reduce(cfg: RunConfig, args) -> int:
    if args.direction == "shap-from-pp2cnf":
        if not args.data:
            raise UsageError("shap-from-pp2cnf needs --data")
        data = formats.load_dataset(args.data)
        x = _parse_instance(args.instance, data.n_features) or engine.default_instance(data)
        model = formats.load_model(args.model) if args.model else _indicator_model(x)
        via = empirical.empirical_shap_via_pp2cnf(data, model, x)
        direct = empirical.empirical_shap_report(data, model, x)
        match = via.scores == direct.scores
        names = data.names or tuple(f"X{i + 1}" for i in range(data.n_features))
        payload = {"match": match, "pp2cnf_oracle_calls": via.oracle_calls,
                   **_report_payload(via, names, cfg.precision)}
        table = f"{'MATCH' if match else 'MISMATCH'}\n" + _report_table(via, names, cfg.precision)
    else:
        if args.pp2cnf:
            formula = formats.load_pp2cnf(args.pp2cnf)
        elif args.data:
            formula = empirical.build_pp2cnf(formats.load_dataset(args.data))
        else:
            raise UsageError("pp2cnf-from-shap needs --pp2cnf or --data")
        assignment = empirical.QuasiSymmetricAssignment(
            formats.parse_rational(args.p, "--p"), formats.parse_rational(args.q, "--q"),
            _parse_indices(args.pin_u), _parse_indices(args.pin_v))
        log = empirical.OracleLog()
        via = empirical.pp2cnf_expectation_via_shap(formula, assignment, log=log)
        direct = empirical.pp2cnf_expectation(formula, assignment)
        match = via == direct
        payload = {"match": match, "expectation": _value_json(via), "direct": _value_json(direct),
                   "shap_oracle_calls": log.calls}
        table = (f"{'MATCH' if match else 'MISMATCH'}\nE[Phi] via SHAP = {_value_text(via, cfg.precision)}\n"
                 f"E[Phi] direct   = {_value_text(direct, cfg.precision)}\nSHAP oracle calls: {log.calls}")
    _emit(cfg, payload, table)
    if not match:
        raise ReductionMismatch("the reduction disagrees with the direct computation")
    return EXIT_OK


def _selftest_checks(seed: int):
    from .engine import shap_brute, shap_all
    from .random_models import MODEL_FACTORIES, random_dataset, random_numpar, random_product_distribution

    rng = random.Random(seed)

    def reduction():
        for kind, factory in MODEL_FACTORIES.items():
            for _ in range(4):
                n = rng.randint(1, 5)
                dist = random_product_distribution(rng, n, 2)
                model = factory(rng, n, 2)
                if shap_all(model, dist).scores != shap_brute(model, dist, method="permutation").scores:
                    return False
        return True

    def projection():
        for kind, factory in MODEL_FACTORIES.items():
            if kind == "ddnnf":
                continue
            for _ in range(3):
                n = rng.randint(1, 4)
                dist = random_product_distribution(rng, n, 3)
                model = factory(rng, n, 3)
                x = tuple(rng.choice(d) for d in dist.domains)
                if shap_all(model, dist, x).scores != shap_brute(model, dist, x, method="permutation").scores:
                    return False
        return True

    def forward():
        for _ in range(5):
            data = random_dataset(rng, rng.randint(1, 4), rng.randint(1, 4))
            x = tuple(rng.randint(0, 1) for _ in range(data.n_features))
            model = FunctionModel(lambda z: Fraction(sum(z)), data.n_features)
            if empirical.empirical_shap_via_pp2cnf(data, model, x).scores != \
                    empirical.empirical_shap_report(data, model, x).scores:
                return False
        return True

    def reverse():
        for _ in range(5):
            data = random_dataset(rng, rng.randint(1, 3), rng.randint(1, 3))
            formula = empirical.build_pp2cnf(data)
            a = empirical.QuasiSymmetricAssignment(Fraction(rng.randint(1, 5), 6), Fraction(rng.randint(1, 5), 6))
            if empirical.pp2cnf_expectation_via_shap(formula, a) != empirical.pp2cnf_expectation(formula, a):
                return False
        return True

    def counting():
        for _ in range(5):
            k = random_numpar(rng, rng.randint(1, 8), 20)
            if gadgets.count_partitions_via_expectation(k).count != gadgets.brute_partition_count(k):
                return False
        return True

    def deciding():
        for _ in range(5):
            k = random_numpar(rng, rng.randint(1, 8), 20)
            if gadgets.numpar_decide_via_shap(k).solvable != gadgets.dp_numpar_decider(k):
                return False
        return True

    def treeshap_case():
        tree, data = treeshap.counterexample_tree(), treeshap.counterexample_dataset()
        return (treeshap.expvalue(tree, (0, 0), [1]) == 3
                and treeshap.correct_expvalue(data, tree, (0, 0), [1]) == 2)

    def guardrail():
        model = LogisticModel(tuple(Fraction(1) for _ in range(41)))
        try:
            engine.shap_all(model, ProductDistribution.uniform(40), engine="auto")
        except ShapxError:
            return True
        return False

    return [
        ("reduction equals permutation brute force", reduction),
        ("multi-valued projection equals brute force", projection),
        ("SHAP from a PP2CNF oracle equals the direct path", forward),
        ("PP2CNF expectation from a SHAP oracle equals the direct count", reverse),
        ("partition count from the logistic expectation", counting),
        ("NUMPAR decision from the naive Bayes SHAP score", deciding),
        ("TreeSHAP EXPVALUE counterexample reproduces", treeshap_case),
        ("logistic n=40 is refused with a capacity error", guardrail),
    ]


def cmd_selftest(cfg: RunConfig, args) -> int:
    failures = 0
    results = []
    for name, check in _selftest_checks(cfg.seed):
        start = time.perf_counter()
        try:
            ok = bool(check())
            detail = ""
        except ShapxError as exc:
            ok, detail = False, f" ({exc})"
        elapsed = time.perf_counter() - start
        failures += not ok
        results.append({"check": name, "pass": ok, "seconds": round(elapsed, 3)})
        if cfg.fmt != "json":
            print(f"{'PASS' if ok else 'FAIL'}  {name}  [{elapsed:.2f}s]{detail}")
    if cfg.fmt == "json":
        print(json.dumps({"seed": cfg.seed, "results": results, "failures": failures}, indent=2))
    return EXIT_FINDINGS if failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", dest="fmt", choices=("json", "table"), default="table")
    common.add_argument("--precision", type=int, default=12, help="significant digits in decimal renderings")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--brute-cap", type=int, default=BRUTE_FORCE_CAP,
                        help="largest feature count for exponential enumeration")

    parser = argparse.ArgumentParser(prog="shapx", description="Exact SHAP explanations and reduction tooling.")
    sub = parser.add_subparsers(dest="command", required=True)

    def source_args(p, model_required=True):
        p.add_argument("--model", required=model_required, help="model JSON or NNF file")
        group = p.add_mutually_exclusive_group()
        group.add_argument("--dist", help="IND distribution JSON, or 'uniform'")
        group.add_argument("--data", help="dataset CSV (empirical distribution)")
        group.add_argument("--nbn", help="naive Bayes network JSON")
        p.add_argument("--verify-determinism", action="store_true",
                       help="check d-DNNF OR gates by enumeration (n <= 20)")

    p = sub.add_parser("shap", parents=[common], help="SHAP scores of every feature")
    source_args(p)
    p.add_argument("--instance", help="comma-separated feature values (default all ones)")
    p.add_argument("--engine", choices=("auto", "reduction", "brute", "permutation", "pp2cnf"), default="auto")

    p = sub.add_parser("expect", parents=[common], help="expectation of a model or PP2CNF formula")
    source_args(p, model_required=False)
    p.add_argument("--pp2cnf", help="PP2CNF text file")
    p.add_argument("--p", default="1/2", help="Pr(U_i = 1) for unpinned U variables")
    p.add_argument("--q", default="1/2", help="Pr(V_j = 1) for unpinned V variables")
    p.add_argument("--pin-u", help="comma-separated U indices pinned to probability 1")
    p.add_argument("--pin-v", help="comma-separated V indices pinned to probability 1")

    p = sub.add_parser("audit-treeshap", parents=[common], help="compare EXPVALUE with true conditional expectations")
    p.add_argument("--tree", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--instance", help="audit one instance (default: every distinct dataset row)")
    p.add_argument("--tree-covers", action="store_true", help="use the covers stored in the tree file")

    p = sub.add_parser("gadget", parents=[common], help="NUMPAR hardness gadgets")
    p.add_argument("problem", choices=("numpar",))
    p.add_argument("k", nargs="+", type=int)
    p.add_argument("--via", choices=("expectation", "shap"), default="expectation")
    p.add_argument("--bits", type=int, help="interval precision in bits (default: automatic)")
    p.add_argument("--emit-model", help="write the constructed logistic model or naive Bayes net as JSON")

    p = sub.add_parser("reduce", parents=[common], help="run a reduction and cross-check it")
    p.add_argument("--direction", choices=("shap-from-pp2cnf", "pp2cnf-from-shap"), required=True)
    p.add_argument("--data")
    p.add_argument("--model", help="model for shap-from-pp2cnf (default: indicator of the instance)")
    p.add_argument("--instance")
    p.add_argument("--pp2cnf")
    p.add_argument("--p", default="1/2")
    p.add_argument("--q", default="1/2")
    p.add_argument("--pin-u")
    p.add_argument("--pin-v")

    sub.add_parser("selftest", parents=[common], help="quick randomized self-check")
    return parser


COMMANDS = {
    "shap": cmd_shap,
    "expect": cmd_expect,
    "audit-treeshap": cmd_audit_treeshap,
    "gadget": cmd_gadget,
    "reduce": cmd_reduce,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(args.command, args.fmt, args.precision, args.seed, args.brute_cap)
        return COMMANDS[args.command](cfg, args)
    except (ShapxError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
