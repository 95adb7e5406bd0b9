"""Model classes, evaluation, and expectation oracles under product distributions.

Every model exposes ``evaluate(x)`` and an expectation routine.  The tractable
classes (linear, tree, ensemble, factorization machine, d-DNNF) compute exact
rational expectations in polynomial time; logistic and CNF models enumerate
and are guarded by a brute-force cap.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

import mpmath
import numpy as np

try:  # GMP-backed integers speed up the batched d-DNNF passes several-fold
    from gmpy2 import mpz as _bigint
except ImportError:  # pragma: no cover - optional accelerator
    _bigint = int

from .distributions import BRUTE_FORCE_CAP, ProductDistribution
from .errors import CapacityError, SignatureError, StructureError
from .exact import as_fraction

LOGISTIC_PRECISION = 128  # bits; comfortably above 80-bit extended precision

TRACTABLE_KINDS = frozenset({"linear", "tree", "ensemble", "fm", "ddnnf"})


def _frac_tuple(values) -> tuple[Fraction, ...]:
    return tuple(as_fraction(v) for v in values)


class Model:
    """Common surface.  Subclasses set ``kind`` and implement the hooks."""

    kind = "abstract"
    binary_only = False
    exact = True

    @property
    def n_features(self) -> int:  # pragma: no cover - overridden
        raise NotImplementedError

    @property
    def tractable(self) -> bool:
        return self.kind in TRACTABLE_KINDS

    def evaluate(self, x: Sequence[int]):
        raise NotImplementedError

    def _expectation(self, dist: ProductDistribution, brute_cap: int):
        raise NotImplementedError

    def _expectations_pinned_many(self, bases: Sequence[ProductDistribution], pins, brute_cap: int) -> list:
        return [[self._expectation(base.replace(i, vec), brute_cap) for i, vec in row]
                for base, row in zip(bases, pins)]

    def __call__(self, x):
        return self.evaluate(x)


def check_signature(model: Model, dist: ProductDistribution) -> None:
    if dist.n_features != model.n_features:
        raise SignatureError(
            f"{model.kind} model has {model.n_features} features, distribution has {dist.n_features}"
        )
    if model.binary_only:
        for i, dom in enumerate(dist.domains):
            if not set(dom) <= {0, 1}:
                raise SignatureError(f"{model.kind} models need binary features; feature {i} has domain {dom}")


def check_instance(model_or_n, x: Sequence[int], dist: ProductDistribution | None = None) -> tuple[int, ...]:
    n = model_or_n if isinstance(model_or_n, int) else model_or_n.n_features
    x = tuple(int(v) for v in x)
    if len(x) != n:
        raise SignatureError(f"instance has {len(x)} values, expected {n}")
    if dist is not None:
        for i, v in enumerate(x):
            if v not in dist.domains[i]:
                raise SignatureError(f"instance value {v} outside the domain of feature {i}")
    return x


def evaluate(model, x: Sequence[int]):
    """F(x).  Accepts Model instances or any plain callable."""
    if isinstance(model, Model):
        return model.evaluate(check_instance(model, x))
    return model(tuple(x))


def expectation(model: Model, dist: ProductDistribution, *, brute_cap: int = BRUTE_FORCE_CAP):
    """Exact E[F] under a product distribution (a real for logistic models)."""
    if not isinstance(model, Model):
        model = FunctionModel(model, dist.n_features)
    check_signature(model, dist)
    return model._expectation(dist, brute_cap)


def expectations_pinned(model: Model, base: ProductDistribution, pins: Sequence[tuple[int, Sequence]],
                        *, brute_cap: int = BRUTE_FORCE_CAP) -> list:
    """Expectations under ``base`` with feature ``i`` replaced by ``vector``, one per pin.

    Semantically a loop of :func:`expectation` calls; models may answer the
    whole batch faster (the d-DNNF evaluator shares one forward/backward pass).
    """
    if not isinstance(model, Model):
        model = FunctionModel(model, base.n_features)
    check_signature(model, base)
    return expectations_pinned_many(model, [base], [pins], brute_cap=brute_cap)[0]


def expectations_pinned_many(model: Model, bases: Sequence[ProductDistribution], pins: Sequence[Sequence],
                             *, brute_cap: int = BRUTE_FORCE_CAP) -> list[list]:
    """:func:`expectations_pinned` for several base distributions at once; ``pins[b]`` goes with ``bases[b]``."""
    if not isinstance(model, Model):
        model = FunctionModel(model, bases[0].n_features)
    for base in bases:
        check_signature(model, base)
    converted: dict[int, list] = {}
    rows = []
    for row in pins:
        if id(row) not in converted:
            converted[id(row)] = [(i, tuple(as_fraction(p) for p in vec)) for i, vec in row]
        rows.append(converted[id(row)])
    return model._expectations_pinned_many(list(bases), rows, brute_cap)


def _brute_guard(model: Model, n: int, cap: int) -> None:
    if n > cap:
        raise CapacityError(
            f"{model.kind}: exact expectation over {n} features needs full enumeration "
            f"(the problem is #P-hard for this model class); brute-force cap is {cap}"
        )


def _enumerate_expectation(model: Model, dist: ProductDistribution, cap: int):
    _brute_guard(model, dist.n_features, cap)
    total = Fraction(0)
    for x, p in dist.instances():
        total += model.evaluate(x) * p
    return total


# --------------------------------------------------------------------------- linear

@dataclass(frozen=True)
class LinearModel(Model):
    bias: Fraction
    weights: tuple[Fraction, ...]
    kind = "linear"

    def __post_init__(self):
        object.__setattr__(self, "bias", as_fraction(self.bias))
        object.__setattr__(self, "weights", _frac_tuple(self.weights))

    @property
    def n_features(self) -> int:
        return len(self.weights)

    def evaluate(self, x):
        return self.bias + sum((w * v for w, v in zip(self.weights, x)), Fraction(0))

    def _expectation(self, dist, brute_cap):
        # mean imputation
        return self.bias + sum((w * dist.mean(i) for i, w in enumerate(self.weights) if w), Fraction(0))


# --------------------------------------------------------------------------- trees

@dataclass(frozen=True)
class TreeModel(Model):
    """Binary decision/regression tree in flat-array form.

    ``values[j]`` is the leaf value or ``None`` for internal nodes; internal
    node ``j`` sends ``x`` to ``left[j]`` when ``x[feature[j]] <= threshold[j]``
    and to ``right[j]`` otherwise.  Node 0 is the root.  ``cover`` holds the
    number of training samples reaching each node (optional).
    """

    values: tuple
    left: tuple[int, ...]
    right: tuple[int, ...]
    threshold: tuple
    feature: tuple[int, ...]
    cover: tuple | None = None
    n_inputs: int | None = None
    kind = "tree"

    def __post_init__(self):
        size = len(self.values)
        vals = tuple(None if v is None else as_fraction(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "left", tuple(-1 if c is None else int(c) for c in self.left))
        object.__setattr__(self, "right", tuple(-1 if c is None else int(c) for c in self.right))
        object.__setattr__(self, "threshold",
                           tuple(None if t is None else as_fraction(t) for t in self.threshold))
        object.__setattr__(self, "feature", tuple(-1 if d is None else int(d) for d in self.feature))
        if self.cover is not None:
            object.__setattr__(self, "cover", tuple(as_fraction(r) for r in self.cover))
        for name in ("left", "right", "threshold", "feature"):
            if len(getattr(self, name)) != size:
                raise StructureError(f"tree array '{name}' has the wrong length")
        if self.cover is not None and len(self.cover) != size:
            raise StructureError("tree array 'cover' has the wrong length")
        if size == 0:
            raise StructureError("empty tree")
        parents = [0] * size
        for j in range(size):
            if vals[j] is None:
                if self.threshold[j] is None or self.feature[j] < 0:
                    raise StructureError(f"internal node {j} lacks a split")
                for c in (self.left[j], self.right[j]):
                    if not 0 <= c < size:
                        raise StructureError(f"internal node {j} needs two children")
                    parents[c] += 1
        if parents[0] != 0:
            raise StructureError("node 0 must be the root")
        if any(p != 1 for p in parents[1:]):
            raise StructureError("every non-root node needs exactly one parent")
        seen = set()
        stack = [0]
        while stack:
            j = stack.pop()
            if j in seen:
                raise StructureError("tree contains a cycle")
            seen.add(j)
            if vals[j] is None:
                stack.extend((self.left[j], self.right[j]))
        if len(seen) != size:
            raise StructureError("tree has nodes unreachable from the root")
        if self.cover is not None and any(r <= 0 for r in self.cover):
            raise StructureError("covers must be positive")
        width = max((d for d in self.feature if d >= 0), default=-1) + 1
        if self.n_inputs is None:
            object.__setattr__(self, "n_inputs", width)
        elif self.n_inputs < width:
            raise StructureError("tree splits on a feature beyond n_inputs")

    @property
    def n_features(self) -> int:
        return self.n_inputs

    @property
    def is_leaf(self):
        return [v is not None for v in self.values]

    def leaf_for(self, x) -> int:
        j = 0
        while self.values[j] is None:
            j = self.left[j] if x[self.feature[j]] <= self.threshold[j] else self.right[j]
        return j

    def evaluate(self, x):
        return self.values[self.leaf_for(x)]

    def _expectation(self, dist, brute_cap):
        # root-to-leaf paths are disjoint events; each path's probability is the
        # product over features of Pr(X_d in the interval the path carves out)
        def interval_prob(d, lo, hi):
            return sum((p for v, p in zip(dist.domains[d], dist.probs[d])
                        if (lo is None or v > lo) and (hi is None or v <= hi)), Fraction(0))

        total = Fraction(0)
        stack = [(0, {})]
        while stack:
            j, bounds = stack.pop()
            if self.values[j] is not None:
                prob = Fraction(1)
                for d, (lo, hi) in bounds.items():
                    prob *= interval_prob(d, lo, hi)
                    if not prob:
                        break
                total += prob * self.values[j]
                continue
            d, t = self.feature[j], self.threshold[j]
            lo, hi = bounds.get(d, (None, None))
            left = dict(bounds)
            left[d] = (lo, t if hi is None else min(hi, t))
            right = dict(bounds)
            right[d] = (t if lo is None else max(lo, t), hi)
            stack.append((self.left[j], left))
            stack.append((self.right[j], right))
        return total


@dataclass(frozen=True)
class EnsembleModel(Model):
    members: tuple[tuple[Fraction, TreeModel], ...]
    kind = "ensemble"

    def __post_init__(self):
        members = tuple((as_fraction(c), t) for c, t in self.members)
        object.__setattr__(self, "members", members)
        if not members:
            raise StructureError("an ensemble needs at least one member")
        widths = {t.n_features for _, t in members}
        if len(widths) != 1:
            raise StructureError("ensemble members disagree on the number of features")

    @property
    def n_features(self) -> int:
        return self.members[0][1].n_features

    def evaluate(self, x):
        return sum((c * t.evaluate(x) for c, t in self.members), Fraction(0))

    def _expectation(self, dist, brute_cap):
        return sum((c * t._expectation(dist, brute_cap) for c, t in self.members), Fraction(0))


# --------------------------------------------------------------------------- factorization machine

@dataclass(frozen=True)
class FactorizationMachine(Model):
    """F(x) = bias + sum_i w_i x_i + sum_{i<j} <v_i, v_j> x_i x_j."""

    bias: Fraction
    weights: tuple[Fraction, ...]
    factors: tuple[tuple[Fraction, ...], ...]
    kind = "fm"

    def __post_init__(self):
        object.__setattr__(self, "bias", as_fraction(self.bias))
        object.__setattr__(self, "weights", _frac_tuple(self.weights))
        object.__setattr__(self, "factors", tuple(_frac_tuple(v) for v in self.factors))
        if len(self.factors) != len(self.weights):
            raise StructureError("one factor vector per feature is required")
        dims = {len(v) for v in self.factors}
        if len(dims) > 1 or (dims and min(dims) < 1):
            raise StructureError("factor vectors must share a dimension k >= 1")

    @property
    def n_features(self) -> int:
        return len(self.weights)

    def _pairwise(self, xs: Sequence[Fraction], squares: Sequence[Fraction]) -> Fraction:
        # sum_{i<j} <v_i,v_j> a_i a_j = 1/2 sum_f [(sum_i v_if a_i)^2 - sum_i v_if^2 s_i]
        if not self.factors:
            return Fraction(0)
        total = Fraction(0)
        for f in range(len(self.factors[0])):
            lin = sum((v[f] * a for v, a in zip(self.factors, xs)), Fraction(0))
            sq = sum((v[f] * v[f] * s for v, s in zip(self.factors, squares)), Fraction(0))
            total += lin * lin - sq
        return total / 2

    def evaluate(self, x):
        xs = [Fraction(v) for v in x]
        return (self.bias + sum((w * v for w, v in zip(self.weights, xs)), Fraction(0))
                + self._pairwise(xs, [v * v for v in xs]))

    def _expectation(self, dist, brute_cap):
        # independence: E[X_i X_j] = E[X_i] E[X_j] for i != j
        mus = [dist.mean(i) for i in range(self.n_features)]
        return (self.bias + sum((w * mu for w, mu in zip(self.weights, mus)), Fraction(0))
                + self._pairwise(mus, [mu * mu for mu in mus]))


# --------------------------------------------------------------------------- d-DNNF

@dataclass(frozen=True)
class DdnnfCircuit(Model):
    """Deterministic decomposable NNF circuit over binary variables 0..n-1.

    ``nodes`` is topologically ordered (children before parents); the last
    node is the root.  Node forms::

        ("L", var, positive)   literal
        ("T",) / ("F",)        constants
        ("A", children)        decomposable conjunction
        ("O", children, var)   deterministic disjunction; ``var`` is the decision
                               variable the children disagree on, or None

    Decomposability is always checked.  Determinism is checked structurally
    when a decision variable is given, otherwise trusted and flagged in
    ``unverified_or``; :meth:`verify_determinism` checks it exhaustively.
    """

    nodes: tuple
    n_vars: int
    kind = "ddnnf"
    binary_only = True
    var_masks: tuple = field(init=False, repr=False, compare=False)
    unverified_or: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        nodes = tuple(self._normalize(k, node) for k, node in enumerate(self.nodes))
        object.__setattr__(self, "nodes", nodes)
        if not nodes:
            raise StructureError("empty circuit")
        masks = []
        implied = []  # literals every model of the node satisfies, as (pos_mask, neg_mask)
        unverified = []
        full = (1 << self.n_vars) - 1
        for k, node in enumerate(nodes):
            tag = node[0]
            if tag == "L":
                _, var, pos = node
                if not 0 <= var < self.n_vars:
                    raise StructureError(f"node {k}: variable {var} out of range")
                masks.append(1 << var)
                implied.append((1 << var, 0) if pos else (0, 1 << var))
            elif tag in ("T", "F"):
                masks.append(0)
                implied.append((0, 0) if tag == "T" else (full, full))
            elif tag == "A":
                mask = 0
                pos = neg = 0
                for c in node[1]:
                    if masks[c] & mask:
                        raise StructureError(f"node {k}: AND children share variables (not decomposable)")
                    mask |= masks[c]
                    pos |= implied[c][0]
                    neg |= implied[c][1]
                masks.append(mask)
                implied.append((pos, neg))
            else:
                children, var = node[1], node[2]
                mask = 0
                for c in children:
                    mask |= masks[c]
                masks.append(mask)
                if children:
                    pos = neg = full
                    for c in children:
                        pos &= implied[c][0]
                        neg &= implied[c][1]
                else:
                    pos = neg = full
                implied.append((pos, neg))
                if var is None:
                    if len(children) > 1:
                        unverified.append(k)
                else:
                    if not 0 <= var < self.n_vars:
                        raise StructureError(f"node {k}: decision variable {var} out of range")
                    bit = 1 << var
                    if len(children) > 2:
                        raise StructureError(f"node {k}: a decision OR has at most two children")
                    if len(children) == 2:
                        a, b = (implied[c] for c in children)
                        if not ((a[0] & bit and b[1] & bit) or (a[1] & bit and b[0] & bit)):
                            raise StructureError(f"node {k}: children do not disagree on decision variable {var}")
        object.__setattr__(self, "var_masks", tuple(masks))
        object.__setattr__(self, "unverified_or", tuple(unverified))

    @staticmethod
    def _normalize(k: int, node) -> tuple:
        tag = node[0]
        if tag == "L":
            return ("L", int(node[1]), bool(node[2]))
        if tag in ("T", "F"):
            return (tag,)
        if tag in ("A", "O"):
            children = tuple(int(c) for c in node[1])
            for c in children:
                if not 0 <= c < k:
                    raise StructureError(f"node {k}: child {c} is not an earlier node (cycle or bad order)")
            if tag == "A":
                return ("A", children)
            var = node[2] if len(node) > 2 else None
            return ("O", children, None if var is None else int(var))
        raise StructureError(f"node {k}: unknown node type {tag!r}")

    @property
    def n_features(self) -> int:
        return self.n_vars

    @property
    def n_edges(self) -> int:
        return sum(len(node[1]) for node in self.nodes if node[0] in ("A", "O"))

    def evaluate(self, x):
        vals = []
        for node in self.nodes:
            tag = node[0]
            if tag == "L":
                vals.append((x[node[1]] == 1) == node[2])
            elif tag == "T":
                vals.append(True)
            elif tag == "F":
                vals.append(False)
            elif tag == "A":
                vals.append(all(vals[c] for c in node[1]))
            else:
                vals.append(any(vals[c] for c in node[1]))
        return Fraction(int(vals[-1]))

    def wmc(self, p_one: Sequence[Fraction], stats: dict | None = None) -> Fraction:
        """One bottom-up pass: literals get their probabilities, OR sums, AND multiplies."""
        vals: list[Fraction] = []
        edges = 0
        for node in self.nodes:
            tag = node[0]
            if tag == "L":
                p = p_one[node[1]]
                vals.append(p if node[2] else 1 - p)
            elif tag == "T":
                vals.append(Fraction(1))
            elif tag == "F":
                vals.append(Fraction(0))
            elif tag == "A":
                acc = Fraction(1)
                for c in node[1]:
                    acc *= vals[c]
                vals.append(acc)
                edges += len(node[1])
            else:
                acc = Fraction(0)
                for c in node[1]:
                    acc += vals[c]
                vals.append(acc)
                edges += len(node[1])
        if stats is not None:
            stats["edges"] = stats.get("edges", 0) + edges
            stats["passes"] = stats.get("passes", 0) + 1
        return vals[-1]

    def _expectation(self, dist, brute_cap):
        return self.wmc([dist.prob(i, 1) for i in range(self.n_vars)])

    def _expectations_pinned_many(self, bases, pins, brute_cap):
        # The circuit polynomial is affine in each literal weight (decomposability
        # never multiplies x_i with itself or with its negation), so every pinned
        # expectation follows from one forward pass plus one adjoint pass.  Each
        # base distribution is scaled by a common denominator L so the passes run
        # on integers, and all bases are processed together as object-array columns.
        width = len(bases)
        scales, pos_cols = [], []
        for base in bases:
            p_one = [base.prob(i, 1) for i in range(self.n_vars)]
            scale = 1
            for p in p_one:
                scale = math.lcm(scale, p.denominator)
            scales.append(scale)
            pos_cols.append([_bigint(p.numerator * (scale // p.denominator)) for p in p_one])
        pos_w = np.empty((self.n_vars, width), dtype=object)
        for b, col in enumerate(pos_cols):
            pos_w[:, b] = col
        scale_vec = np.empty(width, dtype=object)
        scale_vec[:] = [_bigint(v) for v in scales]
        neg_w = scale_vec[None, :] - pos_w
        degree = [m.bit_count() for m in self.var_masks]
        max_deg = max(degree)
        powers = [np.ones(width, dtype=object)]
        for _ in range(max_deg):
            powers.append(powers[-1] * scale_vec)
        ones = np.ones(width, dtype=object)
        zeros = np.zeros(width, dtype=object)
        nodes = self.nodes
        vals: list = [None] * len(nodes)
        for k, node in enumerate(nodes):
            tag = node[0]
            if tag == "L":
                vals[k] = pos_w[node[1]] if node[2] else neg_w[node[1]]
            elif tag == "T":
                vals[k] = ones
            elif tag == "F":
                vals[k] = zeros
            elif tag == "A":
                children = node[1]
                acc = vals[children[0]]
                for c in children[1:]:
                    acc = acc * vals[c]
                vals[k] = acc if len(children) else ones
            else:
                dk = degree[k]
                acc = zeros
                for c in node[1]:
                    shift = dk - degree[c]
                    acc = acc + (vals[c] * powers[shift] if shift else vals[c])
                vals[k] = acc
        adj: list = [None] * len(nodes)
        adj[-1] = ones
        pos_adj: list = [zeros] * self.n_vars
        neg_adj: list = [zeros] * self.n_vars
        for k in range(len(nodes) - 1, -1, -1):
            a = adj[k]
            if a is None:
                continue
            node = nodes[k]
            tag = node[0]
            if tag == "L":
                if node[2]:
                    pos_adj[node[1]] = pos_adj[node[1]] + a
                else:
                    neg_adj[node[1]] = neg_adj[node[1]] + a
            elif tag == "O":
                dk = degree[k]
                for c in node[1]:
                    shift = dk - degree[c]
                    contrib = a * powers[shift] if shift else a
                    adj[c] = contrib if adj[c] is None else adj[c] + contrib
            elif tag == "A":
                children = node[1]
                if len(children) == 1:
                    c = children[0]
                    adj[c] = a if adj[c] is None else adj[c] + a
                    continue
                # prefix/suffix products avoid dividing by possibly-zero siblings
                suffix = [ones] * (len(children) + 1)
                for idx in range(len(children) - 1, -1, -1):
                    suffix[idx] = suffix[idx + 1] * vals[children[idx]]
                prefix = a
                for idx, c in enumerate(children):
                    contrib = prefix * suffix[idx + 1]
                    adj[c] = contrib if adj[c] is None else adj[c] + contrib
                    prefix = prefix * vals[c]
        root = vals[-1]
        denom = powers[degree[-1]]
        out = []
        for b, base in enumerate(bases):
            scale = scales[b]
            row = []
            for i, vec in pins[b]:
                new_pos = vec[base.domains[i].index(1)] * scale
                new_neg = vec[base.domains[i].index(0)] * scale
                value = (root[b] + pos_adj[i][b] * (new_pos - pos_w[i, b])
                         + neg_adj[i][b] * (new_neg - neg_w[i, b]))
                row.append(Fraction(int(value), int(denom[b])))
            out.append(row)
        return out

    def verify_determinism(self, max_vars: int = 20) -> None:
        """Exhaustively check that every OR's children are mutually exclusive."""
        n = self.n_vars
        if n > max_vars:
            raise CapacityError(f"exhaustive determinism check over {n} variables exceeds cap {max_vars}")
        size = 1 << n
        full = (1 << size) - 1
        var_tables = []
        for v in range(n):
            # bit a of the table is set iff assignment a has variable v true
            block = ((1 << (1 << v)) - 1) << (1 << v)
            period = 1 << (v + 1)
            table = 0
            for start in range(0, size, period):
                table |= block << start
            var_tables.append(table)
        tables = []
        for k, node in enumerate(self.nodes):
            tag = node[0]
            if tag == "L":
                t = var_tables[node[1]]
                tables.append(t if node[2] else full & ~t)
            elif tag == "T":
                tables.append(full)
            elif tag == "F":
                tables.append(0)
            elif tag == "A":
                t = full
                for c in node[1]:
                    t &= tables[c]
                tables.append(t)
            else:
                seen = 0
                for c in node[1]:
                    if seen & tables[c]:
                        raise StructureError(f"node {k}: OR children are not mutually exclusive")
                    seen |= tables[c]
                tables.append(seen)


# --------------------------------------------------------------------------- logistic / CNF / explicit functions

def sigmoid(z, ctx=None):
    ctx = ctx or mpmath.mp
    if isinstance(z, Fraction):
        z = ctx.mpf(z.numerator) / z.denominator
    return 1 / (1 + ctx.exp(-z))


@dataclass(frozen=True)
class LogisticModel(Model):
    """F(x) = sigmoid(w_0 + sum_i w_i x_i) over binary features; weights exact rationals."""

    weights: tuple[Fraction, ...]
    precision: int = LOGISTIC_PRECISION
    kind = "logistic"
    binary_only = True
    exact = False

    def __post_init__(self):
        object.__setattr__(self, "weights", _frac_tuple(self.weights))
        if not self.weights:
            raise StructureError("a logistic model needs at least the bias weight")

    @property
    def n_features(self) -> int:
        return len(self.weights) - 1

    def score(self, x) -> Fraction:
        return self.weights[0] + sum((w for w, v in zip(self.weights[1:], x) if v), Fraction(0))

    def evaluate(self, x):
        with mpmath.workprec(self.precision):
            return +sigmoid(self.score(x))

    def score_distribution(self, dist: ProductDistribution, brute_cap: int = BRUTE_FORCE_CAP) -> dict:
        """Exact law of the linear score: {score: probability}, merged feature by feature."""
        _brute_guard(self, dist.n_features, brute_cap)
        law = {self.weights[0]: Fraction(1)}
        for i, w in enumerate(self.weights[1:]):
            p = dist.prob(i, 1)
            nxt: dict = {}
            for s, q in law.items():
                if p != 1:
                    nxt[s] = nxt.get(s, Fraction(0)) + q * (1 - p)
                if p != 0:
                    nxt[s + w] = nxt.get(s + w, Fraction(0)) + q * p
            law = nxt
        return law

    def expectation_in(self, dist: ProductDistribution, ctx, brute_cap: int = BRUTE_FORCE_CAP):
        """E[F] evaluated in an mpmath context (``mpmath.iv`` yields an enclosure)."""
        law = self.score_distribution(dist, brute_cap)
        total = ctx.mpf(0)
        for s, q in law.items():
            total += sigmoid(s, ctx) * (ctx.mpf(q.numerator) / q.denominator)
        return total

    def _expectation(self, dist, brute_cap):
        with mpmath.workprec(self.precision):
            return +self.expectation_in(dist, mpmath.mp, brute_cap)


@dataclass(frozen=True)
class CnfFormula(Model):
    """Conjunction of clauses; literals are ``(var, positive)`` over variables 0..n-1."""

    clauses: tuple
    n_vars: int
    kind = "cnf"
    binary_only = True

    def __post_init__(self):
        clauses = tuple(tuple((int(v), bool(s)) for v, s in clause) for clause in self.clauses)
        object.__setattr__(self, "clauses", clauses)
        for clause in clauses:
            for v, _ in clause:
                if not 0 <= v < self.n_vars:
                    raise StructureError(f"literal variable {v} out of range")

    @property
    def n_features(self) -> int:
        return self.n_vars

    def evaluate(self, x):
        return Fraction(int(all(any((x[v] == 1) == s for v, s in c) for c in self.clauses)))

    def _expectation(self, dist, brute_cap):
        return _enumerate_expectation(self, dist, brute_cap)


class FunctionModel(Model):
    """Wraps an arbitrary Python function; expectations enumerate the domain."""

    kind = "function"

    def __init__(self, fn: Callable, n_features: int):
        self.fn = fn
        self._n = n_features

    @property
    def n_features(self) -> int:
        return self._n

    def evaluate(self, x):
        return self.fn(tuple(x))

    def _expectation(self, dist, brute_cap):
        return _enumerate_expectation(self, dist, brute_cap)


def table_model(domains: Sequence[Sequence[int]], values: Iterable) -> FunctionModel:
    """A function given by its value table in ``itertools.product`` order over ``domains``."""
    keys = list(itertools.product(*domains))
    vals = [as_fraction(v) for v in values]
    if len(keys) != len(vals):
        raise SignatureError(f"table has {len(vals)} entries for {len(keys)} instances")
    lookup = dict(zip(keys, vals))
    model = FunctionModel(lambda x: lookup[tuple(x)], len(domains))
    model.kind = "table"
    return model
