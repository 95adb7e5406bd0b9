"""Audit of the TreeSHAP value-function procedure EXPVALUE against true
conditional expectations over an empirical distribution."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction

from .distributions import EmpiricalDataset, conditional_expectation
from .errors import CapacityError, SignatureError, StructureError
from .exact import fraction_to_json
from .models import TreeModel

AUDIT_CAP = 16


def covers_from_dataset(tree: TreeModel, dataset: EmpiricalDataset) -> tuple[int, ...]:
    """Number of dataset rows (with multiplicity) reaching each node."""
    if dataset.n_features < tree.n_features:
        raise SignatureError(f"tree reads {tree.n_features} features but the dataset has {dataset.n_features}")
    cover = [0] * len(tree.values)
    for row, count in zip(dataset.rows, dataset.counts):
        j = 0
        cover[j] += count
        while tree.values[j] is None:
            j = tree.left[j] if row[tree.feature[j]] <= tree.threshold[j] else tree.right[j]
            cover[j] += count
    return tuple(cover)


def expvalue(tree: TreeModel, x, S, cover=None) -> Fraction:
    """EXPVALUE transcribed as published.

    Split features in ``S`` follow ``x`` (left when x[d] <= t); other splits
    return the cover-weighted average (G(a) r_a + G(b) r_b) / r.  Covers come
    from ``cover`` or else ``tree.cover``.  A child with zero cover contributes
    nothing and is not descended into; dividing by a zero cover raises
    StructureError.
    """
    r = cover if cover is not None else tree.cover
    if r is None:
        raise StructureError("EXPVALUE needs node covers; supply them or a dataset")
    if len(r) != len(tree.values):
        raise StructureError("cover array has the wrong length")
    S = frozenset(int(i) for i in S)

    def G(j: int) -> Fraction:
        if tree.values[j] is not None:
            return tree.values[j]
        if tree.feature[j] in S:
            return G(tree.left[j]) if x[tree.feature[j]] <= tree.threshold[j] else G(tree.right[j])
        if r[j] == 0:
            raise StructureError(f"EXPVALUE divides by the zero cover of node {j}")
        a, b = tree.left[j], tree.right[j]
        total = Fraction(0)
        for child in (a, b):
            if r[child]:
                total += G(child) * Fraction(r[child])
        return total / Fraction(r[j])

    return G(0)


def correct_expvalue(dataset: EmpiricalDataset, model, x, S) -> Fraction:
    """E[F | X_S = x_S] under the empirical distribution (0 if no row matches)."""
    return conditional_expectation(model, dataset, {int(i): x[int(i)] for i in S})


@dataclass(frozen=True)
class AuditFinding:
    tree_id: str
    instance: tuple
    S: tuple[int, ...]
    expvalue: Fraction | None
    correct: Fraction
    discrepancy: Fraction | None
    note: str = ""

    def to_json(self) -> dict:
        return {
            "tree": self.tree_id,
            "instance": list(self.instance),
            "S": [i + 1 for i in self.S],
            "expvalue": None if self.expvalue is None else fraction_to_json(self.expvalue),
            "correct": fraction_to_json(self.correct),
            "discrepancy": None if self.discrepancy is None else fraction_to_json(self.discrepancy),
            "note": self.note,
        }


def audit(tree: TreeModel, dataset: EmpiricalDataset, instance, tree_id: str = "tree",
          cover=None) -> list[AuditFinding]:
    """Compare EXPVALUE with the true conditional expectation for every S.

    Covers default to those induced by ``dataset``.  Returns one finding per
    S where the two disagree or EXPVALUE is undefined.
    """
    n = dataset.n_features
    if n > AUDIT_CAP:
        raise CapacityError(f"sweeping all subsets of {n} features exceeds cap {AUDIT_CAP}")
    instance = tuple(instance)
    if len(instance) != n:
        raise SignatureError(f"instance has {len(instance)} values but the dataset has {n} features")
    cover = cover if cover is not None else covers_from_dataset(tree, dataset)
    findings = []
    for size in range(n + 1):
        for S in itertools.combinations(range(n), size):
            correct = correct_expvalue(dataset, tree, instance, S)
            try:
                value = expvalue(tree, instance, S, cover)
            except StructureError as exc:
                findings.append(AuditFinding(tree_id, instance, S, None, correct, None, str(exc)))
                continue
            if value != correct:
                findings.append(AuditFinding(tree_id, instance, S, value, correct, abs(value - correct)))
    return findings


def findings_to_json(findings: list[AuditFinding]) -> str:
    return json.dumps({"findings": [f.to_json() for f in findings], "count": len(findings)}, indent=2)


def findings_to_table(findings: list[AuditFinding], names=None) -> str:
    def label(S):
        if not S:
            return "{}"
        return "{" + ",".join(names[i] if names else f"X{i + 1}" for i in S) + "}"

    header = ("S", "expvalue", "correct", "discrepancy")
    rows = [(label(f.S), "undefined" if f.expvalue is None else str(f.expvalue), str(f.correct),
             f.note if f.discrepancy is None else str(f.discrepancy)) for f in findings]
    widths = [max(len(r[k]) for r in rows + [header]) for k in range(4)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
    lines.append(f"{len(findings)} finding(s)")
    return "\n".join(lines)


def counterexample_tree(leaves=(0, 6, 0, 0)) -> TreeModel:
    """Root splits on X1, both children split on X2.

    ``leaves`` lists F(0,0), F(1,0), F(0,1), F(1,1).
    """
    f00, f10, f01, f11 = leaves
    half = Fraction(1, 2)
    return TreeModel(
        values=(None, None, None, f00, f01, f10, f11),
        left=(1, 3, 5, -1, -1, -1, -1),
        right=(2, 4, 6, -1, -1, -1, -1),
        threshold=(half, half, half, None, None, None, None),
        feature=(0, 1, 1, -1, -1, -1, -1),
        cover=(6, 3, 3, 2, 1, 1, 2),
        n_inputs=2,
    )


def counterexample_dataset() -> EmpiricalDataset:
    return EmpiricalDataset(((0, 0), (0, 1), (1, 0), (1, 1)), (2, 1, 1, 2), ("X1", "X2"))
