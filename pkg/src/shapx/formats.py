"""Readers and writers for models, distributions, datasets and PP2CNF formulas.

Rationals are written as ``{"num": "..", "den": ".."}`` and read from that
form, from integers, or from strings such as "3/7", "0.25" or "1e-5".  JSON
floats are read by their decimal spelling, so 0.1 means 1/10.
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from pathlib import Path

import mpmath

from .distributions import EmpiricalDataset, NaiveBayesNet, ProductDistribution
from .empirical import Pp2Cnf
from .errors import ModelFormatError, ShapxError
from .exact import fraction_to_json
from .models import (
    CnfFormula,
    DdnnfCircuit,
    EnsembleModel,
    FactorizationMachine,
    LinearModel,
    LogisticModel,
    Model,
    TreeModel,
)


# --------------------------------------------------------------------------- rationals

def parse_rational(value, where: str = "value") -> Fraction:
    if isinstance(value, bool):
        raise ModelFormatError(f"{where}: expected a rational, got a boolean")
    try:
        if isinstance(value, int):
            return Fraction(value)
        if isinstance(value, float):
            return Fraction(repr(value))
        if isinstance(value, str):
            return Fraction(value.strip())
        if isinstance(value, dict) and set(value) == {"num", "den"}:
            den = int(value["den"])
            if den == 0:
                raise ZeroDivisionError
            return Fraction(int(value["num"]), den)
    except (ValueError, ZeroDivisionError):
        pass
    raise ModelFormatError(f"{where}: cannot read {value!r} as a rational")


def rational_json(value) -> dict | str:
    """Exact rationals as num/den pairs; mpmath reals as decimal strings."""
    if isinstance(value, (int, Fraction)):
        return fraction_to_json(Fraction(value))
    return mpmath.nstr(value, 20)


def _rats(values, where: str) -> tuple[Fraction, ...]:
    if not isinstance(values, list):
        raise ModelFormatError(f"{where}: expected a list")
    return tuple(parse_rational(v, f"{where}[{k}]") for k, v in enumerate(values))


def load_json_text(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None


def _require(obj: dict, key: str, kind: str):
    if key not in obj:
        raise ModelFormatError(f"{kind} model is missing the '{key}' field")
    return obj[key]


# --------------------------------------------------------------------------- models

def _tree_from_json(obj: dict) -> TreeModel:
    v = _require(obj, "v", "tree")
    if not isinstance(v, list):
        raise ModelFormatError("tree field 'v' must be a list")
    size = len(v)
    values = tuple(None if (x is None or x == "internal") else parse_rational(x, f"v[{k}]") for k, x in enumerate(v))

    def ints(key, default=None):
        arr = obj.get(key, default)
        if not isinstance(arr, list) or len(arr) != size:
            raise ModelFormatError(f"tree field '{key}' must be a list of length {size}")
        try:
            return tuple(-1 if x is None else int(x) for x in arr)
        except (TypeError, ValueError):
            raise ModelFormatError(f"tree field '{key}' must hold integers or null") from None

    t = obj.get("t")
    if not isinstance(t, list) or len(t) != size:
        raise ModelFormatError(f"tree field 't' must be a list of length {size}")
    threshold = tuple(None if x is None else parse_rational(x, f"t[{k}]") for k, x in enumerate(t))
    cover = None
    if obj.get("r") is not None:
        cover = _rats(obj["r"], "r")
    try:
        return TreeModel(values, ints("a"), ints("b"), threshold, ints("d"), cover, obj.get("n"))
    except ShapxError as exc:
        raise ModelFormatError(f"invalid tree: {exc}") from None


def _tree_to_json(tree: TreeModel) -> dict:
    out = {
        "type": "tree",
        "n": tree.n_features,
        "v": ["internal" if x is None else fraction_to_json(x) for x in tree.values],
        "a": [None if c < 0 else c for c in tree.left],
        "b": [None if c < 0 else c for c in tree.right],
        "t": [None if x is None else fraction_to_json(x) for x in tree.threshold],
        "d": [None if d < 0 else d for d in tree.feature],
    }
    if tree.cover is not None:
        out["r"] = [fraction_to_json(x) for x in tree.cover]
    return out


def _ddnnf_from_json(obj: dict) -> DdnnfCircuit:
    nodes = []
    for k, node in enumerate(_require(obj, "nodes", "ddnnf")):
        if not isinstance(node, list) or not node:
            raise ModelFormatError(f"ddnnf node {k} must be a non-empty list")
        nodes.append(tuple(tuple(x) if isinstance(x, list) else x for x in node))
    try:
        return DdnnfCircuit(tuple(nodes), int(_require(obj, "n_vars", "ddnnf")))
    except ShapxError as exc:
        raise ModelFormatError(f"invalid d-DNNF: {exc}") from None


def _ddnnf_to_json(c: DdnnfCircuit) -> dict:
    nodes = []
    for node in c.nodes:
        if node[0] == "L":
            nodes.append(["L", node[1], node[2]])
        elif node[0] in ("T", "F"):
            nodes.append([node[0]])
        elif node[0] == "A":
            nodes.append(["A", list(node[1])])
        else:
            nodes.append(["O", list(node[1]), node[2]])
    return {"type": "ddnnf", "n_vars": c.n_vars, "nodes": nodes}


def model_from_json(obj) -> Model:
    if not isinstance(obj, dict) or "type" not in obj:
        raise ModelFormatError("a model must be a JSON object with a 'type' field")
    kind = obj["type"]
    try:
        if kind == "linear":
            return LinearModel(parse_rational(obj.get("bias", 0), "bias"), _rats(_require(obj, "weights", kind), "weights"))
        if kind == "tree":
            return _tree_from_json(obj)
        if kind == "ensemble":
            members = []
            for k, member in enumerate(_require(obj, "members", kind)):
                tree = _tree_from_json(member["tree"])
                members.append((parse_rational(member.get("coef", 1), f"members[{k}].coef"), tree))
            return EnsembleModel(tuple(members))
        if kind == "fm":
            factors = tuple(_rats(f, f"factors[{k}]") for k, f in enumerate(_require(obj, "factors", kind)))
            return FactorizationMachine(parse_rational(obj.get("bias", 0), "bias"),
                                        _rats(_require(obj, "weights", kind), "weights"), factors)
        if kind == "ddnnf":
            return _ddnnf_from_json(obj)
        if kind == "logistic":
            return LogisticModel(_rats(_require(obj, "weights", kind), "weights"), int(obj.get("precision", 128)))
        if kind == "cnf":
            clauses = []
            for k, clause in enumerate(_require(obj, "clauses", kind)):
                lits = []
                for lit in clause:
                    if not isinstance(lit, int) or isinstance(lit, bool) or lit == 0:
                        raise ModelFormatError(f"clauses[{k}]: literals are non-zero integers")
                    lits.append((abs(lit) - 1, lit > 0))
                clauses.append(tuple(lits))
            return CnfFormula(tuple(clauses), int(_require(obj, "n_vars", kind)))
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"malformed {kind} model: {exc}") from None
    except ModelFormatError:
        raise
    except ShapxError as exc:
        raise ModelFormatError(f"invalid {kind} model: {exc}") from None
    raise ModelFormatError(f"unknown model type {kind!r}")


def model_to_json(model: Model) -> dict:
    if isinstance(model, LinearModel):
        return {"type": "linear", "bias": fraction_to_json(model.bias),
                "weights": [fraction_to_json(w) for w in model.weights]}
    if isinstance(model, TreeModel):
        return _tree_to_json(model)
    if isinstance(model, EnsembleModel):
        return {"type": "ensemble",
                "members": [{"coef": fraction_to_json(c), "tree": _tree_to_json(t)} for c, t in model.members]}
    if isinstance(model, FactorizationMachine):
        return {"type": "fm", "bias": fraction_to_json(model.bias),
                "weights": [fraction_to_json(w) for w in model.weights],
                "factors": [[fraction_to_json(x) for x in f] for f in model.factors]}
    if isinstance(model, DdnnfCircuit):
        return _ddnnf_to_json(model)
    if isinstance(model, LogisticModel):
        return {"type": "logistic", "weights": [fraction_to_json(w) for w in model.weights],
                "precision": model.precision}
    if isinstance(model, CnfFormula):
        return {"type": "cnf", "n_vars": model.n_vars,
                "clauses": [[(v + 1) if s else -(v + 1) for v, s in c] for c in model.clauses]}
    raise TypeError(f"no JSON form for {type(model).__name__}")


# --------------------------------------------------------------------------- NNF text

def parse_nnf(text: str) -> DdnnfCircuit:
    """Read the NNF text format: ``nnf V E N`` then one ``L``/``A``/``O`` line per node.

    ``L l`` is a literal (signed, 1-based variable); ``A k c1..ck`` a conjunction;
    ``O j k c1..ck`` a disjunction with decision variable j (0 when absent).
    Children are 0-based indices of earlier nodes.  ``A 0`` is true and
    ``O 0 0`` is false.  Lines starting with ``c`` are comments.
    """
    header = None
    nodes: list[tuple] = []
    edges = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        tokens = []
        pos = 0
        for tok in raw.split():
            pos = raw.index(tok, pos)
            tokens.append((tok, pos + 1))
            pos += len(tok)

        def num(k, what):
            if k >= len(tokens):
                raise ModelFormatError(f"missing {what}", lineno, len(raw) + 1)
            tok, col = tokens[k]
            try:
                return int(tok)
            except ValueError:
                raise ModelFormatError(f"expected an integer {what}, found {tok!r}", lineno, col) from None

        tag, col = tokens[0]
        if header is None:
            if tag != "nnf":
                raise ModelFormatError("expected the 'nnf V E N' header", lineno, col)
            if len(tokens) != 4:
                raise ModelFormatError("header needs exactly three counts", lineno, col)
            header = (num(1, "node count"), num(2, "edge count"), num(3, "variable count"))
            continue
        k = len(nodes)
        if tag == "L":
            lit = num(1, "literal")
            if lit == 0 or abs(lit) > header[2]:
                raise ModelFormatError(f"literal {lit} out of range", lineno, tokens[1][1])
            nodes.append(("L", abs(lit) - 1, lit > 0))
            expected = 2
        elif tag in ("A", "O"):
            start = 1 if tag == "A" else 2
            var = None
            if tag == "O":
                var = num(1, "decision variable")
                if not 0 <= var <= header[2]:
                    raise ModelFormatError(f"decision variable {var} out of range", lineno, tokens[1][1])
            count = num(start, "child count")
            children = []
            for c in range(count):
                child = num(start + 1 + c, "child index")
                if not 0 <= child < k:
                    raise ModelFormatError(f"child {child} does not name an earlier node", lineno,
                                           tokens[start + 1 + c][1])
                children.append(child)
            edges += count
            expected = start + 1 + count
            if tag == "A":
                nodes.append(("A", tuple(children)) if children else ("T",))
            else:
                nodes.append(("O", tuple(children), None if var == 0 else var - 1) if children else ("F",))
        else:
            raise ModelFormatError(f"unknown node type {tag!r}", lineno, col)
        if len(tokens) != expected:
            raise ModelFormatError("unexpected trailing tokens", lineno, tokens[min(expected, len(tokens) - 1)][1])
    if header is None:
        raise ModelFormatError("empty NNF file", 1, 1)
    if len(nodes) != header[0]:
        raise ModelFormatError(f"header declares {header[0]} nodes but {len(nodes)} were given")
    if edges != header[1]:
        raise ModelFormatError(f"header declares {header[1]} edges but {edges} were given")
    try:
        return DdnnfCircuit(tuple(nodes), header[2])
    except ShapxError as exc:
        raise ModelFormatError(f"invalid d-DNNF: {exc}") from None


def write_nnf(circuit: DdnnfCircuit) -> str:
    lines = [f"nnf {len(circuit.nodes)} {circuit.n_edges} {circuit.n_vars}"]
    for node in circuit.nodes:
        tag = node[0]
        if tag == "L":
            lines.append(f"L {(node[1] + 1) if node[2] else -(node[1] + 1)}")
        elif tag == "T":
            lines.append("A 0")
        elif tag == "F":
            lines.append("O 0 0")
        elif tag == "A":
            lines.append(" ".join(["A", str(len(node[1]))] + [str(c) for c in node[1]]))
        else:
            var = 0 if node[2] is None else node[2] + 1
            lines.append(" ".join(["O", str(var), str(len(node[1]))] + [str(c) for c in node[1]]))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------- distributions

def ind_from_json(obj) -> ProductDistribution:
    """Either a list of per-feature probability lists or {"probs": [...], "domains": [...]}."""
    domains = None
    if isinstance(obj, dict):
        domains = obj.get("domains")
        obj = obj.get("probs")
    if not isinstance(obj, list) or not all(isinstance(row, list) for row in obj):
        raise ModelFormatError("an IND distribution is a list of probability lists")
    probs = tuple(_rats(row, f"probs[{k}]") for k, row in enumerate(obj))
    try:
        return ProductDistribution(probs, None if domains is None else tuple(tuple(d) for d in domains))
    except (ShapxError, ValueError) as exc:
        raise ModelFormatError(f"invalid IND distribution: {exc}") from None


def ind_to_json(dist: ProductDistribution):
    probs = [[fraction_to_json(p) for p in row] for row in dist.probs]
    if all(d == tuple(range(len(d))) for d in dist.domains):
        return probs
    return {"probs": probs, "domains": [list(d) for d in dist.domains]}


def nbn_from_json(obj) -> NaiveBayesNet:
    if not isinstance(obj, dict):
        raise ModelFormatError("a naive Bayes net is a JSON object {prior, cond1, cond0}")
    try:
        llr = obj.get("llr")
        return NaiveBayesNet(
            parse_rational(_require(obj, "prior", "nbn"), "prior"),
            _rats(_require(obj, "cond1", "nbn"), "cond1"),
            _rats(_require(obj, "cond0", "nbn"), "cond0"),
            None if obj.get("log_odds") is None else parse_rational(obj["log_odds"], "log_odds"),
            None if llr is None else _rats(llr, "llr"),
        )
    except (ShapxError, ValueError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"invalid naive Bayes net: {exc}") from None


def nbn_to_json(net: NaiveBayesNet) -> dict:
    out = {"prior": rational_json(net.prior),
           "cond1": [rational_json(p) for p in net.cond1],
           "cond0": [rational_json(p) for p in net.cond0]}
    if net.log_odds is not None:
        out["log_odds"] = fraction_to_json(net.log_odds)
    if net.llr is not None:
        out["llr"] = [fraction_to_json(w) for w in net.llr]
    return out


# --------------------------------------------------------------------------- datasets

def parse_dataset_csv(text: str) -> EmpiricalDataset:
    """Header of feature names, then one 0/1 row per instance; an optional
    ``count`` column carries multiplicities."""
    reader = csv.reader(io.StringIO(text))
    rows, counts = [], []
    header = None
    count_col = None
    for lineno, record in enumerate(reader, 1):
        if not record or all(not c.strip() for c in record):
            continue
        cells = [c.strip() for c in record]
        if header is None:
            header = cells
            if "count" in header:
                count_col = header.index("count")
            if len(header) - (count_col is not None) < 1:
                raise ModelFormatError("dataset needs at least one feature column", lineno, 1)
            continue
        if len(cells) != len(header):
            raise ModelFormatError(f"expected {len(header)} fields, found {len(cells)}", lineno, 1)
        row = []
        col = 1
        count = 1
        for k, cell in enumerate(cells):
            if k == count_col:
                try:
                    count = int(cell)
                    if count < 1:
                        raise ValueError
                except ValueError:
                    raise ModelFormatError(f"count must be a positive integer, found {cell!r}", lineno, col) from None
            else:
                if cell not in ("0", "1"):
                    raise ModelFormatError(f"feature values must be 0 or 1, found {cell!r}", lineno, col)
                row.append(int(cell))
            col += len(record[k]) + 1
        rows.append(tuple(row))
        counts.append(count)
    if header is None:
        raise ModelFormatError("empty dataset file", 1, 1)
    if not rows:
        raise ModelFormatError("dataset has a header but no rows")
    names = tuple(h for k, h in enumerate(header) if k != count_col)
    return EmpiricalDataset(tuple(rows), tuple(counts), names)


def dataset_to_csv(dataset: EmpiricalDataset, with_counts: bool | None = None) -> str:
    names = dataset.names or tuple(f"X{i + 1}" for i in range(dataset.n_features))
    if with_counts is None:
        with_counts = any(c != 1 for c in dataset.counts)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(names) + (["count"] if with_counts else []))
    for row, count in zip(dataset.rows, dataset.counts):
        if with_counts:
            writer.writerow(list(row) + [count])
        else:
            for _ in range(count):
                writer.writerow(list(row))
    return buf.getvalue()


# --------------------------------------------------------------------------- PP2CNF

def parse_pp2cnf(text: str) -> Pp2Cnf:
    """``p pp2cnf m n`` header, then one ``i j`` line per clause (U_i or V_j), 1-based."""
    header = None
    clauses = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        col = raw.index(parts[0]) + 1
        if header is None:
            if parts[:2] != ["p", "pp2cnf"] or len(parts) != 4:
                raise ModelFormatError("expected the 'p pp2cnf m n' header", lineno, col)
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise ModelFormatError("header counts must be integers", lineno, col) from None
            continue
        if len(parts) != 2:
            raise ModelFormatError("a clause line holds exactly two indices", lineno, col)
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise ModelFormatError("clause indices must be integers", lineno, col) from None
        if not (1 <= i <= header[0] and 1 <= j <= header[1]):
            raise ModelFormatError(f"clause ({i}, {j}) out of range", lineno, col)
        clauses.append((i, j))
    if header is None:
        raise ModelFormatError("missing 'p pp2cnf m n' header", 1, 1)
    return Pp2Cnf(header[0], header[1], frozenset(clauses))


def write_pp2cnf(formula: Pp2Cnf) -> str:
    lines = [f"p pp2cnf {formula.m} {formula.n}"]
    lines += [f"{i} {j}" for i, j in sorted(formula.clauses)]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------- files

def read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ModelFormatError(f"cannot read {path}: {exc.strerror}") from None


def load_model(path) -> Model:
    text = read_text(path)
    if str(path).endswith(".nnf") or text.lstrip().startswith(("nnf", "c ")):
        return parse_nnf(text)
    return model_from_json(load_json_text(text))


def load_ind(path) -> ProductDistribution:
    return ind_from_json(load_json_text(read_text(path)))


def load_nbn(path) -> NaiveBayesNet:
    return nbn_from_json(load_json_text(read_text(path)))


def load_dataset(path) -> EmpiricalDataset:
    return parse_dataset_csv(read_text(path))


def load_pp2cnf(path) -> Pp2Cnf:
    return parse_pp2cnf(read_text(path))
