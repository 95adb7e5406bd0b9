"""Hardness gadgets: NUMPAR counting through a logistic expectation and NUMPAR
decision through a naive Bayes SHAP score, with exact reference oracles."""

from __future__ import annotations

import contextlib
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from .distributions import NaiveBayesNet, ProductDistribution, nbn_posterior
from .errors import CapacityError, PrecisionAuditError, StructureError
from .models import LogisticModel

BRUTE_PARTITION_CAP = 24
ENUMERATE_SUBSETS_CAP = 14


@contextlib.contextmanager
def iv_precision(bits: int):
    """Temporarily set the working precision of ``mpmath.iv``."""
    old = mpmath.iv.prec
    mpmath.iv.prec = bits
    try:
        yield mpmath.iv
    finally:
        mpmath.iv.prec = old


def interval_midpoint(x, bits: int):
    """Midpoint of an ``mpmath.iv`` interval as an ordinary mpf at ``bits`` precision."""
    with mpmath.workprec(bits):
        return +mpmath.mpf(x.mid.a)


@dataclass(frozen=True)
class NumparInstance:
    """NUMPAR: positive integers k_1..k_n; find S with sum_S k_i = sum_rest k_i.

    An odd total is normalized by doubling every k_i, which keeps the set of
    partitions unchanged.  ``c`` is half the normalized total.
    """

    k: tuple[int, ...]
    normalized: tuple[int, ...] = field(init=False)
    doubled: bool = field(init=False)

    def __post_init__(self):
        k = tuple(int(v) for v in self.k)
        if not k:
            raise StructureError("a NUMPAR instance needs at least one number")
        if any(v <= 0 for v in k):
            raise StructureError("NUMPAR numbers must be positive integers")
        object.__setattr__(self, "k", k)
        doubled = sum(k) % 2 == 1
        object.__setattr__(self, "doubled", doubled)
        object.__setattr__(self, "normalized", tuple(2 * v for v in k) if doubled else k)

    @property
    def n(self) -> int:
        return len(self.k)

    @property
    def c(self) -> int:
        return sum(self.normalized) // 2


@dataclass(frozen=True)
class GadgetParams:
    m: int
    epsilon: Fraction
    precision: int


def choose_m(epsilon: Fraction, safety: int = 2) -> int:
    """``safety`` times the least natural m with 2*sigmoid(-m/2) <= eps and 1 - sigmoid(m/2) <= eps.

    Both conditions reduce to m/2 >= log(2/eps - 1); the minimum is confirmed
    with interval arithmetic so rounding cannot pick a value that fails.
    """
    eps = Fraction(epsilon)
    if not 0 < eps < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    guess = max(1, math.floor(2 * math.log(2 / eps - 1)) - 2)
    with iv_precision(128) as iv:
        e = iv.mpf(eps.numerator) / eps.denominator

        def ok(m):
            low = 1 / (1 + iv.exp(iv.mpf(m) / 2))
            return (2 * low <= e) is True and (low <= e) is True

        m = guess
        while m > 1 and ok(m - 1):
            m -= 1
        while not ok(m):
            m += 1
    return safety * m


def _weight(inst: NumparInstance, m: int, subset_sum: int) -> Fraction:
    return Fraction(-m, 2) - m * inst.c + m * subset_sum


def counting_params(inst: NumparInstance) -> GadgetParams:
    eps = Fraction(1, 2 ** (inst.n + 3))
    m = choose_m(eps)
    bits = 64 + 4 * inst.n + (m * inst.c).bit_length()
    return GadgetParams(m, eps, bits)


def logistic_gadget(inst: NumparInstance, m: int | None = None) -> LogisticModel:
    """Logistic model with w_0 = -m/2 - m c and w_i = m k_i over n binary features."""
    m = counting_params(inst).m if m is None else m
    w0 = Fraction(-m, 2) - m * inst.c
    return LogisticModel((w0,) + tuple(Fraction(m * v) for v in inst.normalized))


@dataclass
class CountResult:
    count: int
    expectation: object
    params: GadgetParams
    doubled: bool


def count_partitions_via_expectation(inst: NumparInstance | list, precision: int | None = None) -> CountResult:
    """|P| = ceil(2^n - 2^(n+1) E[F] / (1 - eps)) with E[F] under the uniform distribution.

    E[F] is enclosed in an interval; if the two endpoints lead to different
    ceilings the result cannot be certified and PrecisionAuditError is raised.
    """
    if not isinstance(inst, NumparInstance):
        inst = NumparInstance(tuple(inst))
    params = counting_params(inst)
    bits = precision or params.precision
    model = logistic_gadget(inst, params.m)
    dist = ProductDistribution.uniform(inst.n)
    with iv_precision(bits) as iv:
        e = model.expectation_in(dist, iv, brute_cap=BRUTE_PARTITION_CAP)
        one_minus = 1 - iv.mpf(params.epsilon.numerator) / params.epsilon.denominator
        value = 2 ** inst.n - 2 ** (inst.n + 1) * e / one_minus
        lo, hi = int(mpmath.ceil(value.a)), int(mpmath.ceil(value.b))
    if lo != hi:
        raise PrecisionAuditError(
            f"interval [{value.a}, {value.b}] straddles an integer boundary at {bits} bits; raise the precision")
    params = GadgetParams(params.m, params.epsilon, bits)
    return CountResult(lo, e, params, inst.doubled)


def _a(n: int, k: int) -> Fraction:
    return Fraction(math.factorial(k) * math.factorial(n - k), math.factorial(n + 1))


def decision_params(inst: NumparInstance) -> GadgetParams:
    n = inst.n
    eps = _a(n, n // 2)
    m = choose_m(eps)
    bits = 64 + 8 * n + (m * inst.c).bit_length()
    return GadgetParams(m, eps, bits)


def _mpf(x: Fraction):
    return mpmath.mpf(x.numerator) / x.denominator


def nbn_gadget(inst: NumparInstance, m: int | None = None) -> tuple[NaiveBayesNet, Fraction]:
    """Naive Bayes network whose SHAP score of X_0 separates solvable instances.

    The prior is fixed by Pr(X_0)/Pr(not X_0) = exp(-m/2 - m c); evidence uses
    Pr(X_i | not X_0) = min(1/2, exp(-m k_i)) and Pr(X_i | X_0) = exp(m k_i) times
    that.  The exact log-odds and log-likelihood ratios are stored alongside.
    Returns the network and the decision threshold (1 + eps) / 2.
    """
    params = decision_params(inst)
    m = params.m if m is None else m
    log_odds = Fraction(-m, 2) - m * inst.c
    llr = tuple(Fraction(m * v) for v in inst.normalized)
    with mpmath.workprec(params.precision):
        prior = 1 / (1 + mpmath.exp(-_mpf(log_odds)))
        cond0 = tuple(min(mpmath.mpf(1) / 2, mpmath.exp(-_mpf(w))) for w in llr)
        cond1 = tuple(min(mpmath.mpf(1), mpmath.exp(_mpf(w)) * q) for w, q in zip(llr, cond0))
    net = NaiveBayesNet(prior, cond1, cond0, log_odds=log_odds, llr=llr)
    return net, (1 + params.epsilon) / 2


def _size_sum_counts(values: tuple[int, ...]) -> dict:
    """Number of subsets with each (size, sum)."""
    table = {(0, 0): 1}
    for v in values:
        nxt = dict(table)
        for (size, s), count in table.items():
            key = (size + 1, s + v)
            nxt[key] = nxt.get(key, 0) + count
        table = nxt
    return table


def nbn_shap_x0(net: NaiveBayesNet, ctx, enumerate_subsets: bool = False):
    """SHAP of X_0 for F = X_0 at the all-ones instance: 1 - sum_S a_|S| Pr(X_0 | X_S).

    By default subsets are grouped by (size, total log-likelihood ratio).
    ``enumerate_subsets`` walks all 2^n subsets through ``nbn_posterior``.
    """
    n = len(net.cond1)
    d = ctx.mpf(0)
    if enumerate_subsets:
        if n > ENUMERATE_SUBSETS_CAP:
            raise CapacityError(f"subset enumeration over {n} features exceeds cap {ENUMERATE_SUBSETS_CAP}")
        for size in range(n + 1):
            a = _a(n, size)
            coef = ctx.mpf(a.numerator) / a.denominator
            for s in itertools.combinations(range(1, n + 1), size):
                d += coef * nbn_posterior(net, s, ctx)
        return 1 - d
    if net.llr is None or net.log_odds is None:
        raise StructureError("grouped evaluation needs exact log-odds parameters")
    for (size, total), count in _size_sum_counts(net.llr).items():
        a = _a(n, size)
        w = net.log_odds + total
        d += count * (ctx.mpf(a.numerator) / a.denominator) / (1 + ctx.exp(-(ctx.mpf(w.numerator) / w.denominator)))
    return 1 - d


@dataclass
class DecisionResult:
    solvable: bool
    shap: object
    threshold: Fraction
    params: GadgetParams
    doubled: bool


def numpar_decide_via_shap(inst: NumparInstance | list, precision: int | None = None,
                           enumerate_subsets: bool = False) -> DecisionResult:
    """Decide NUMPAR by comparing SHAP(X_0) against (1 + eps)/2 (solvable iff strictly above)."""
    if not isinstance(inst, NumparInstance):
        inst = NumparInstance(tuple(inst))
    params = decision_params(inst)
    bits = precision or params.precision
    net, threshold = nbn_gadget(inst, params.m)
    with iv_precision(bits) as iv:
        shap = nbn_shap_x0(net, iv, enumerate_subsets)
        t = iv.mpf(threshold.numerator) / threshold.denominator
        above = shap > t
        below = shap <= t
    if above is True:
        solvable = True
    elif below is True:
        solvable = False
    else:
        raise PrecisionAuditError(
            f"SHAP enclosure [{shap.a}, {shap.b}] straddles the threshold at {bits} bits; raise the precision")
    return DecisionResult(solvable, shap, threshold, GadgetParams(params.m, params.epsilon, bits), inst.doubled)


def brute_partition_count(k) -> int:
    """Count subsets S with sum_S k_i = sum_rest k_i by enumeration."""
    k = tuple(int(v) for v in k)
    if len(k) > BRUTE_PARTITION_CAP:
        raise CapacityError(f"enumerating partitions of {len(k)} numbers exceeds cap {BRUTE_PARTITION_CAP}")
    total = sum(k)
    count = 0
    for mask in range(1 << len(k)):
        s = sum(v for i, v in enumerate(k) if mask >> i & 1)
        count += 2 * s == total
    return count


def dp_partition_count(k) -> int:
    """Pseudo-polynomial subset-sum count of partitions."""
    k = [int(v) for v in k]
    total = sum(k)
    if total % 2:
        return 0
    ways = [0] * (total // 2 + 1)
    ways[0] = 1
    for v in k:
        for s in range(total // 2, v - 1, -1):
            ways[s] += ways[s - v]
    return ways[total // 2]


def dp_numpar_decider(k) -> bool:
    """Pseudo-polynomial subset-sum decision."""
    k = [int(v) for v in k]
    total = sum(k)
    if total % 2:
        return False
    reach = 1
    for v in k:
        reach |= reach << v
    return bool(reach >> (total // 2) & 1)
