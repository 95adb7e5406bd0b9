"""Seeded generators for random models and distributions (test corpora, benchmarks, selftest)."""

from __future__ import annotations

import random
from fractions import Fraction

from .distributions import EmpiricalDataset, ProductDistribution
from .models import DdnnfCircuit, EnsembleModel, FactorizationMachine, LinearModel, TreeModel


def random_rational(rng: random.Random, lo: int = -5, hi: int = 5, den: int = 4) -> Fraction:
    return Fraction(rng.randint(lo * den, hi * den), rng.randint(1, den))


def random_probability_vector(rng: random.Random, size: int, positive: bool = True, den: int = 12) -> tuple:
    lo = 1 if positive else 0
    weights = [rng.randint(lo, den) for _ in range(size)]
    if sum(weights) == 0:
        weights[rng.randrange(size)] = 1
    total = sum(weights)
    return tuple(Fraction(w, total) for w in weights)


def random_product_distribution(rng: random.Random, n: int, max_arity: int = 2, positive: bool = True,
                                deterministic_rate: float = 0.0) -> ProductDistribution:
    """Random product distribution over domains 0..arity-1 (arity >= 2)."""
    probs = []
    for _ in range(n):
        arity = rng.randint(2, max_arity)
        if deterministic_rate and rng.random() < deterministic_rate:
            vec = [Fraction(0)] * arity
            vec[1] = Fraction(1)
            probs.append(tuple(vec))
        else:
            probs.append(random_probability_vector(rng, arity, positive))
    return ProductDistribution(tuple(probs))


def random_linear(rng: random.Random, n: int) -> LinearModel:
    return LinearModel(random_rational(rng), tuple(random_rational(rng) for _ in range(n)))


def random_tree(rng: random.Random, n: int, depth: int = 3, max_value: int = 2) -> TreeModel:
    """Random tree with thresholds j + 1/2 on coded values 0..max_value."""
    values, left, right, threshold, feature = [], [], [], [], []

    def grow(level: int) -> int:
        idx = len(values)
        values.append(None)
        left.append(-1)
        right.append(-1)
        threshold.append(None)
        feature.append(-1)
        if level == depth or rng.random() < 0.2:
            values[idx] = random_rational(rng)
            return idx
        feature[idx] = rng.randrange(n)
        threshold[idx] = Fraction(2 * rng.randrange(max_value) + 1, 2)
        left[idx] = grow(level + 1)
        right[idx] = grow(level + 1)
        return idx

    grow(0)
    return TreeModel(tuple(values), tuple(left), tuple(right), tuple(threshold), tuple(feature), n_inputs=n)


def random_ensemble(rng: random.Random, n: int, members: int = 3, depth: int = 2, max_value: int = 2) -> EnsembleModel:
    return EnsembleModel(tuple((random_rational(rng, -2, 2), random_tree(rng, n, depth, max_value))
                               for _ in range(members)))


def random_fm(rng: random.Random, n: int, k: int = 2) -> FactorizationMachine:
    return FactorizationMachine(
        random_rational(rng),
        tuple(random_rational(rng) for _ in range(n)),
        tuple(tuple(random_rational(rng, -2, 2) for _ in range(k)) for _ in range(n)),
    )


def random_ddnnf(rng: random.Random, n: int, nodes_per_level: int = 2, const_rate: float = 0.15) -> DdnnfCircuit:
    """Random circuit built from annotated decision nodes.

    Levels run from variable n-1 down to 0.  A decision node on variable v is
    ``OR(AND(v, hi), AND(not v, lo))`` where ``hi`` and ``lo`` are earlier nodes
    over variables above v, a constant, or omitted.  Unreachable nodes are
    pruned and the result is re-indexed.
    """
    raw: list[tuple] = [("T",), ("F",)]
    pool: list[int] = [0, 1]
    for v in range(n - 1, -1, -1):
        made = []
        for _ in range(nodes_per_level if v else 1):
            branches = []
            for pos in (True, False):
                lit = len(raw)
                raw.append(("L", v, pos))
                if rng.random() < const_rate:
                    child = rng.choice((0, 1))
                else:
                    recent = pool[-3 * nodes_per_level:]
                    child = rng.choice(recent if rng.random() < 0.7 else pool)
                if child == 1:
                    continue
                if child == 0:
                    branches.append(lit)
                    continue
                raw.append(("A", (lit, child)))
                branches.append(len(raw) - 1)
            raw.append(("O", tuple(branches), v))
            made.append(len(raw) - 1)
        pool.extend(made)
    return _prune(raw, len(raw) - 1, n)


def layered_ddnnf(rng: random.Random, n: int, target_edges: int) -> DdnnfCircuit:
    """Decision-node circuit tuned to roughly ``target_edges`` reachable edges."""
    width = 1
    while True:
        circuit = random_ddnnf(rng, n, nodes_per_level=width, const_rate=0.05)
        if circuit.n_edges >= target_edges or width > target_edges:
            return circuit
        width += 1


def _prune(raw: list[tuple], root: int, n: int) -> DdnnfCircuit:
    keep = set()
    stack = [root]
    while stack:
        k = stack.pop()
        if k in keep:
            continue
        keep.add(k)
        node = raw[k]
        if node[0] in ("A", "O"):
            stack.extend(node[1])
    order = sorted(keep)
    index = {k: i for i, k in enumerate(order)}
    nodes = []
    for k in order:
        node = raw[k]
        if node[0] == "A":
            nodes.append(("A", tuple(index[c] for c in node[1])))
        elif node[0] == "O":
            nodes.append(("O", tuple(index[c] for c in node[1]), node[2]))
        else:
            nodes.append(node)
    return DdnnfCircuit(tuple(nodes), n)


def random_dataset(rng: random.Random, m: int, n: int, density: float = 0.6, counts: bool = False) -> EmpiricalDataset:
    rows = tuple(tuple(int(rng.random() < density) for _ in range(n)) for _ in range(m))
    mult = tuple(rng.randint(1, 3) for _ in range(m)) if counts else None
    return EmpiricalDataset(rows, mult)


def random_numpar(rng: random.Random, n: int, max_k: int = 50) -> list[int]:
    return [rng.randint(1, max_k) for _ in range(n)]


MODEL_FACTORIES = {
    "linear": lambda rng, n, arity: random_linear(rng, n),
    "tree": lambda rng, n, arity: random_tree(rng, n, depth=3, max_value=arity - 1),
    "ensemble": lambda rng, n, arity: random_ensemble(rng, n, max_value=arity - 1),
    "fm": lambda rng, n, arity: random_fm(rng, n),
    "ddnnf": lambda rng, n, arity: random_ddnnf(rng, n),
}
