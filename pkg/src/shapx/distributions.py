"""Data distributions: fully-factorized (product), naive Bayes, and empirical.

Events are partial assignments ``{feature: value}``.  Anywhere an event is
accepted, a plain iterable of feature indices is shorthand for "each of these
features equals 1", the convention used when explaining the all-ones instance.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

import mpmath

from .errors import CapacityError, SignatureError, ZeroProbabilityError
from .exact import as_fraction

BRUTE_FORCE_CAP = 25


def as_event(event: Mapping[int, int] | Iterable[int] | None) -> dict[int, int]:
    if event is None:
        return {}
    if isinstance(event, Mapping):
        return {int(k): int(v) for k, v in event.items()}
    items = list(event)
    if len(set(items)) != len(items):
        raise ValueError(f"duplicate feature in event {items}")
    return {int(i): 1 for i in items}


@dataclass(frozen=True)
class ProductDistribution:
    """Independent features; ``probs[i][j]`` is Pr(X_i = domains[i][j])."""

    probs: tuple[tuple[Fraction, ...], ...]
    domains: tuple[tuple[int, ...], ...] = None  # type: ignore[assignment]

    def __post_init__(self):
        probs = tuple(tuple(as_fraction(p) for p in row) for row in self.probs)
        object.__setattr__(self, "probs", probs)
        if self.domains is None:
            object.__setattr__(self, "domains", tuple(tuple(range(len(row))) for row in probs))
        else:
            object.__setattr__(self, "domains", tuple(tuple(int(v) for v in d) for d in self.domains))
        if len(self.domains) != len(probs):
            raise SignatureError("one domain per probability vector is required")
        for i, (row, dom) in enumerate(zip(probs, self.domains)):
            if len(row) != len(dom):
                raise SignatureError(f"feature {i}: {len(row)} probabilities for {len(dom)} domain values")
            if len(set(dom)) != len(dom):
                raise SignatureError(f"feature {i}: repeated domain value")
            if any(p < 0 or p > 1 for p in row):
                raise ValueError(f"feature {i}: probabilities must lie in [0, 1]")
            if sum(row) != 1:
                raise ValueError(f"feature {i}: probabilities sum to {sum(row)}, not 1")

    @classmethod
    def _trusted(cls, probs: tuple, domains: tuple) -> "ProductDistribution":
        """Skip validation; for vectors that are valid by construction."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "probs", probs)
        object.__setattr__(obj, "domains", domains)
        return obj

    @classmethod
    def binary(cls, p_one: Sequence) -> "ProductDistribution":
        """Binary features over {0, 1} given Pr(X_i = 1)."""
        ps = [as_fraction(p) for p in p_one]
        return cls(tuple((1 - p, p) for p in ps), tuple((0, 1) for _ in ps))

    @classmethod
    def uniform(cls, n: int, arity: int = 2) -> "ProductDistribution":
        return cls(tuple(tuple(Fraction(1, arity) for _ in range(arity)) for _ in range(n)))

    @property
    def n_features(self) -> int:
        return len(self.probs)

    def prob(self, i: int, value: int) -> Fraction:
        try:
            return self.probs[i][self.domains[i].index(value)]
        except ValueError:
            raise SignatureError(f"value {value} outside the domain of feature {i}") from None

    def p_one(self, i: int) -> Fraction:
        return self.prob(i, 1)

    def mean(self, i: int) -> Fraction:
        return sum((p * v for p, v in zip(self.probs[i], self.domains[i])), Fraction(0))

    def replace(self, i: int, vector: Sequence) -> "ProductDistribution":
        probs = list(self.probs)
        probs[i] = tuple(as_fraction(p) for p in vector)
        return ProductDistribution(tuple(probs), self.domains)

    def indicator(self, i: int, value: int) -> tuple[Fraction, ...]:
        return tuple(Fraction(int(v == value)) for v in self.domains[i])

    def condition(self, event) -> "ProductDistribution":
        """Distribution of the features given ``event`` (independence makes this a pinning)."""
        event = as_event(event)
        if event_probability(self, event) == 0:
            raise ZeroProbabilityError(f"event {event} has probability zero under the product distribution")
        probs = list(self.probs)
        for i, v in event.items():
            probs[i] = self.indicator(i, v)
        return ProductDistribution(tuple(probs), self.domains)

    def instances(self):
        """Yield ``(instance, probability)`` for every point of positive probability."""
        supports = [[(v, p) for v, p in zip(dom, row) if p] for dom, row in zip(self.domains, self.probs)]
        for combo in itertools.product(*supports):
            prob = Fraction(1)
            for _, p in combo:
                prob *= p
            yield tuple(v for v, _ in combo), prob


@dataclass(frozen=True)
class NaiveBayesNet:
    """Binary naive Bayes network over X_0 (class) and X_1..X_n.

    ``cond1[i-1]`` is Pr(X_i=1 | X_0=1) and ``cond0[i-1]`` is Pr(X_i=1 | X_0=0).
    Probabilities may be Fractions or mpmath numbers.  ``log_odds``/``llr``
    optionally carry the exact prior log-odds and per-feature log-likelihood
    ratios; when present, posteriors are accumulated from them directly.
    """

    prior: Any
    cond1: tuple
    cond0: tuple
    log_odds: Fraction | None = None
    llr: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "cond1", tuple(self.cond1))
        object.__setattr__(self, "cond0", tuple(self.cond0))
        if len(self.cond1) != len(self.cond0):
            raise SignatureError("cond1 and cond0 must have the same length")
        if not 0 < self.prior < 1:
            raise ValueError("the prior Pr(X_0=1) must lie strictly between 0 and 1")
        for p in self.cond1 + self.cond0:
            if not 0 <= p <= 1:
                raise ValueError("conditional probabilities must lie in [0, 1]")
        if self.llr is not None:
            object.__setattr__(self, "llr", tuple(self.llr))

    @property
    def n_features(self) -> int:
        """Number of features including X_0."""
        return len(self.cond1) + 1

    def instances(self):
        n = self.n_features
        if n > BRUTE_FORCE_CAP:
            raise CapacityError(f"enumerating a naive Bayes net over {n} features exceeds cap {BRUTE_FORCE_CAP}")
        for x in itertools.product((0, 1), repeat=n):
            yield x, self._joint(x)

    def _joint(self, x) -> Any:
        p = self.prior if x[0] else 1 - self.prior
        table = self.cond1 if x[0] else self.cond0
        for xi, q in zip(x[1:], table):
            p *= q if xi else 1 - q
        return p


@dataclass(frozen=True)
class EmpiricalDataset:
    """Rows of a binary data matrix with multiplicities (row i occurs counts[i] times)."""

    rows: tuple[tuple[int, ...], ...]
    counts: tuple[int, ...] = None  # type: ignore[assignment]
    names: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        counts = tuple(1 for _ in rows) if self.counts is None else tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if not rows:
            raise ValueError("an empirical dataset needs at least one row")
        n = len(rows[0])
        if n < 1:
            raise ValueError("an empirical dataset needs at least one column")
        if any(len(r) != n for r in rows):
            raise SignatureError("ragged data matrix")
        if any(v not in (0, 1) for r in rows for v in r):
            raise ValueError("empirical datasets are 0/1 matrices")
        if len(counts) != len(rows) or any(c < 1 for c in counts):
            raise ValueError("row counts must be positive, one per row")

    @classmethod
    def from_matrix(cls, matrix: Iterable[Iterable[int]]) -> "EmpiricalDataset":
        return cls(tuple(tuple(r) for r in matrix))

    @property
    def n_features(self) -> int:
        return len(self.rows[0])

    @property
    def m(self) -> int:
        return sum(self.counts)

    def expanded(self) -> tuple[tuple[int, ...], ...]:
        """One row per occurrence; multiplicities become repeated rows."""
        return tuple(r for r, c in zip(self.rows, self.counts) for _ in range(c))

    def compressed(self) -> "EmpiricalDataset":
        tally = Counter(self.expanded())
        rows = sorted(tally)
        return EmpiricalDataset(tuple(rows), tuple(tally[r] for r in rows), self.names)

    def instances(self):
        m = self.m
        for r, c in zip(self.rows, self.counts):
            yield r, Fraction(c, m)

    def matching(self, event) -> list[int]:
        event = as_event(event)
        return [k for k, r in enumerate(self.rows) if all(r[i] == v for i, v in event.items())]


def _check_event(dist, event: dict[int, int]) -> None:
    n = dist.n_features
    for i in event:
        if not 0 <= i < n:
            raise SignatureError(f"event mentions feature {i} but the distribution has {n} features")


def event_probability(dist, event) -> Any:
    """Probability of the partial assignment ``event`` under ``dist``."""
    event = as_event(event)
    _check_event(dist, event)
    if isinstance(dist, ProductDistribution):
        prob = Fraction(1)
        for i, v in event.items():
            prob *= dist.prob(i, v)
        return prob
    if isinstance(dist, EmpiricalDataset):
        hits = sum(dist.counts[k] for k in dist.matching(event))
        return Fraction(hits, dist.m)
    if isinstance(dist, NaiveBayesNet):
        total = 0
        for x0 in (0, 1):
            if 0 in event and event[0] != x0:
                continue
            p = dist.prior if x0 else 1 - dist.prior
            table = dist.cond1 if x0 else dist.cond0
            for i, v in event.items():
                if i == 0:
                    continue
                q = table[i - 1]
                p *= q if v == 1 else 1 - q
            total += p
        return total
    raise TypeError(f"unsupported distribution {type(dist).__name__}")


def conditional_expectation(model, dist, event=None, *, brute_cap: int = BRUTE_FORCE_CAP) -> Any:
    """E[F | event] under ``dist``.

    Product distributions delegate to the model's expectation oracle on the
    pinned distribution and refuse zero-probability events.  Empirical
    distributions average over matching rows and return 0 when none match.
    Naive Bayes nets enumerate the joint (capped).
    """
    from .models import evaluate, expectation

    event = as_event(event)
    _check_event(dist, event)
    if isinstance(dist, ProductDistribution):
        return expectation(model, dist.condition(event), brute_cap=brute_cap)
    if isinstance(dist, EmpiricalDataset):
        rows = dist.matching(event)
        if not rows:
            return Fraction(0)
        total = sum(dist.counts[k] for k in rows)
        return sum((evaluate(model, dist.rows[k]) * dist.counts[k] for k in rows), Fraction(0)) / total
    if isinstance(dist, NaiveBayesNet):
        if dist.n_features > brute_cap:
            raise CapacityError(f"naive Bayes enumeration over {dist.n_features} features exceeds cap {brute_cap}")
        num = 0
        den = 0
        for x, p in dist.instances():
            if all(x[i] == v for i, v in event.items()):
                num += evaluate(model, x) * p
                den += p
        if den == 0:
            raise ZeroProbabilityError(f"event {event} has probability zero under the naive Bayes net")
        return num / den
    raise TypeError(f"unsupported distribution {type(dist).__name__}")


def enumerate_conditional_expectation(model, dist: ProductDistribution, event=None, *, brute_cap: int = BRUTE_FORCE_CAP):
    """E[F | event] by summing over every instance of the product space.

    Independent of any model-specific expectation routine, so it serves as the
    reference oracle for the reduction engine.
    """
    from .models import evaluate

    event = as_event(event)
    if dist.n_features > brute_cap:
        raise CapacityError(f"enumeration over {dist.n_features} features exceeds cap {brute_cap}")
    num = Fraction(0)
    den = Fraction(0)
    for x, p in dist.instances():
        if all(x[i] == v for i, v in event.items()):
            num += evaluate(model, x) * p
            den += p
    if den == 0:
        raise ZeroProbabilityError(f"event {event} has probability zero")
    return num / den


def nbn_posterior(nbn: NaiveBayesNet, features: Iterable[int], ctx=None):
    """Pr(X_0 = 1 | X_i = 1 for every i in ``features``), features numbered 1..n.

    Accumulates log-odds.  With exact log-odds parameters the sum is an exact
    rational and only the final sigmoid is evaluated in ``ctx`` (mpmath.mp by
    default; pass mpmath.iv for a rigorous enclosure).  With rational
    parameters and no context the odds product is evaluated exactly.
    """
    s = sorted(set(features))
    for i in s:
        if not 1 <= i <= len(nbn.cond1):
            raise SignatureError(f"feature {i} is not an evidence feature of the network")
    for i in s:
        if nbn.cond1[i - 1] == 0 and nbn.cond0[i - 1] == 0:
            raise ZeroProbabilityError(f"Pr(X_{i}=1) is zero under both classes; posterior is 0/0")
    if nbn.log_odds is not None and nbn.llr is not None:
        ctx = ctx or mpmath.mp
        weight = nbn.log_odds + sum((nbn.llr[i - 1] for i in s), Fraction(0))
        return _sigmoid(ctx, weight)
    params = (nbn.prior,) + nbn.cond1 + nbn.cond0
    if ctx is None and all(isinstance(p, (int, Fraction)) for p in params):
        num = Fraction(nbn.prior)
        den = 1 - Fraction(nbn.prior)
        for i in s:
            num *= nbn.cond1[i - 1]
            den *= nbn.cond0[i - 1]
        return num / (num + den)
    ctx = ctx or mpmath.mp
    for i in s:
        if nbn.cond1[i - 1] == 0:
            return ctx.mpf(0)
        if nbn.cond0[i - 1] == 0:
            return ctx.mpf(1)
    weight = ctx.log(_to_ctx(ctx, nbn.prior)) - ctx.log(1 - _to_ctx(ctx, nbn.prior))
    for i in s:
        weight += ctx.log(_to_ctx(ctx, nbn.cond1[i - 1])) - ctx.log(_to_ctx(ctx, nbn.cond0[i - 1]))
    return 1 / (1 + ctx.exp(-weight))


def _to_ctx(ctx, value):
    if isinstance(value, Fraction):
        return ctx.mpf(value.numerator) / value.denominator
    return ctx.mpf(value)


def _sigmoid(ctx, weight: Fraction):
    w = _to_ctx(ctx, Fraction(weight))
    return 1 / (1 + ctx.exp(-w))
