"""Exact SHAP scores: brute-force references and the expectation-oracle reduction.

The reduction works in the projected binary world where feature ``i`` is the
indicator ``[X_i = x_i]`` of the explained instance.  A binary query at
probabilities ``r`` is answered by one call to the model's expectation oracle
under the reweighted distribution ``p'`` (see :func:`projection_constants`).
For each feature the restricted value sums ``v_k`` are recovered by
interpolating ``(1+z)^n E_z`` at the probe points ``z = 1..n+1``.
"""

from __future__ import annotations

import functools
import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

import mpmath

from .distributions import (
    BRUTE_FORCE_CAP,
    EmpiricalDataset,
    NaiveBayesNet,
    ProductDistribution,
    conditional_expectation,
    enumerate_conditional_expectation,
)
from .errors import CapacityError, ReductionMismatch, SignatureError, ZeroProbabilityError
from .exact import coalition_weight, horner, interpolate
from .models import FunctionModel, Model, check_instance, evaluate, expectation, expectations_pinned_many

PERMUTATION_CAP = 8
SUBSET_CAP = 20

_REPORT_HOOKS: list[Callable[["ShapReport"], None]] = []


def add_report_hook(fn: Callable[["ShapReport"], None]) -> Callable[["ShapReport"], None]:
    """Register ``fn`` to be called on every report at construction."""
    _REPORT_HOOKS.append(fn)
    return fn


def remove_report_hook(fn) -> None:
    if fn in _REPORT_HOOKS:
        _REPORT_HOOKS.remove(fn)


def _close(a, b) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    a, b = mpmath.mpf(a), mpmath.mpf(b)
    return abs(a - b) <= mpmath.mpf(10) ** -20 * max(1, abs(a), abs(b))


@dataclass(frozen=True)
class ShapReport:
    """Per-feature SHAP scores for one instance, with provenance."""

    scores: tuple
    engine: str
    oracle_calls: int
    instance: tuple[int, ...]
    full_value: Any
    base_value: Any
    notes: tuple[str, ...] = ()
    intermediates: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "scores", tuple(self.scores))
        if len(self.scores) != len(self.instance):
            raise ValueError("one score per feature is required")
        if not self.sum_rule_holds():
            raise ReductionMismatch(
                f"sum rule violated: scores sum to {self.total} but F(x) - E[F] = {self.full_value - self.base_value}"
            )
        for hook in list(_REPORT_HOOKS):
            hook(self)

    @property
    def total(self):
        return sum(self.scores, Fraction(0))

    def sum_rule_holds(self) -> bool:
        return _close(self.total, self.full_value - self.base_value)

    @property
    def exact(self) -> bool:
        return all(isinstance(s, Fraction) for s in self.scores)

    def decimals(self, digits: int = 12) -> list[str]:
        return [render_decimal(s, digits) for s in self.scores]


def render_decimal(value, digits: int = 12) -> str:
    with mpmath.workdps(digits + 10):
        if isinstance(value, Fraction):
            value = mpmath.mpf(value.numerator) / value.denominator
        return mpmath.nstr(value, digits)


# --------------------------------------------------------------------------- helpers

def default_instance(dist) -> tuple[int, ...]:
    """The all-ones instance."""
    return tuple(1 for _ in range(dist.n_features))


def _as_model(model, n: int) -> Model:
    return model if isinstance(model, Model) else FunctionModel(model, n)


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("SHAPX_THREADS", "1")))
    except ValueError:
        return 1


def _chunks(items: list, parts: int) -> list[list]:
    parts = max(1, min(parts, len(items)))
    size = -(-len(items) // parts)
    return [items[k:k + size] for k in range(0, len(items), size)]


def _map(fn, items):
    threads = _thread_count()
    if threads == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


class _ValueFunction:
    """Memoized v(S) = E[F | X_S = x_S]; counts distinct evaluations.

    In ``enumerate`` mode over a product distribution the joint table of
    (instance, probability, F) is built once and every v(S) filters it.
    """

    def __init__(self, model, dist, x, brute_cap, mode):
        self.model, self.dist, self.x = model, dist, x
        self.brute_cap = brute_cap
        self.mode = mode
        self.cache: dict[frozenset, Any] = {}
        self._table = None

    def _joint_table(self):
        if self._table is None:
            if self.dist.n_features > self.brute_cap:
                raise CapacityError(f"enumeration over {self.dist.n_features} features exceeds cap {self.brute_cap}")
            self._table = [(z, p, evaluate(self.model, z)) for z, p in self.dist.instances() if p]
        return self._table

    def __call__(self, subset: frozenset):
        if subset not in self.cache:
            event = {j: self.x[j] for j in subset}
            if isinstance(self.dist, ProductDistribution) and self.mode == "enumerate":
                num = den = Fraction(0)
                for z, p, f in self._joint_table():
                    if all(z[j] == v for j, v in event.items()):
                        num += f * p
                        den += p
                if not den:
                    raise ZeroProbabilityError(f"event {event} has probability zero")
                value = num / den
            else:
                value = conditional_expectation(self.model, self.dist, event, brute_cap=self.brute_cap)
            self.cache[subset] = value
        return self.cache[subset]


def _prepare(model, dist, x):
    n = dist.n_features
    model = _as_model(model, n)
    if model.n_features != n:
        raise SignatureError(f"model has {model.n_features} features, distribution has {n}")
    x = default_instance(dist) if x is None else tuple(int(v) for v in x)
    if isinstance(dist, ProductDistribution):
        check_instance(n, x, dist)
    elif len(x) != n:
        raise SignatureError(f"instance has {len(x)} values, expected {n}")
    return model, x


# --------------------------------------------------------------------------- brute-force references

@functools.lru_cache(maxsize=None)
def _predecessor_tallies(n: int) -> tuple:
    """For each feature, how many of the n! orders place each set (bitmask) before it."""
    tallies = [dict() for _ in range(n)]
    for order in itertools.permutations(range(n)):
        mask = 0
        for j in order:
            t = tallies[j]
            t[mask] = t.get(mask, 0) + 1
            mask |= 1 << j
    return tuple(tallies)


def _members(mask: int) -> frozenset:
    return frozenset(j for j in range(mask.bit_length()) if mask >> j & 1)


def shap_brute_permutation(model, dist, feature: int, x=None, *, brute_cap: int = BRUTE_FORCE_CAP,
                           value_mode: str = "enumerate", _vf=None):
    """Average contribution of ``feature`` over all n! feature orders.

    The orders are enumerated once per n and tallied by the set of features
    preceding ``feature``; contributions are then summed with those counts.
    """
    model, x = _prepare(model, dist, x)
    n = dist.n_features
    if n > PERMUTATION_CAP:
        raise CapacityError(f"permutation enumeration over {n} features exceeds cap {PERMUTATION_CAP}")
    vf = _vf or _ValueFunction(model, dist, x, brute_cap, value_mode)
    total = Fraction(0)
    for mask, count in _predecessor_tallies(n)[feature].items():
        before = _members(mask)
        total += count * (vf(before | {feature}) - vf(before))
    return total / math.factorial(n)


def shap_brute_subset(model, dist, feature: int, x=None, *, brute_cap: int = BRUTE_FORCE_CAP,
                      value_mode: str = "enumerate", _vf=None):
    """Shapley subset form: sum over S of k!(n-k)!/(n+1)! [v(S + i) - v(S)], n others."""
    model, x = _prepare(model, dist, x)
    n = dist.n_features
    if n > SUBSET_CAP:
        raise CapacityError(f"subset enumeration over {n} features exceeds cap {SUBSET_CAP}")
    vf = _vf or _ValueFunction(model, dist, x, brute_cap, value_mode)
    others = [j for j in range(n) if j != feature]
    total = Fraction(0)
    for k in range(len(others) + 1):
        weight = coalition_weight(k, len(others))
        for subset in itertools.combinations(others, k):
            s = frozenset(subset)
            total += weight * (vf(s | {feature}) - vf(s))
    return total


def shap_brute(model, dist, x=None, *, method: str = "subset", brute_cap: int = BRUTE_FORCE_CAP,
               value_mode: str = "enumerate") -> ShapReport:
    """Full report from one of the brute-force formulas (shared value cache)."""
    model, x = _prepare(model, dist, x)
    vf = _ValueFunction(model, dist, x, brute_cap, value_mode)
    fn = shap_brute_permutation if method == "permutation" else shap_brute_subset
    scores = [fn(model, dist, i, x, brute_cap=brute_cap, _vf=vf) for i in range(dist.n_features)]
    everything = frozenset(range(dist.n_features))
    return ShapReport(
        scores=tuple(scores),
        engine=f"{method}-brute",
        oracle_calls=len(vf.cache),
        instance=x,
        full_value=vf(everything),
        base_value=vf(frozenset()),
    )


# --------------------------------------------------------------------------- reduction

def collect_vk(oracle: Callable[[Sequence[Fraction]], Any], p: Sequence, *, self_check: bool = True) -> list[Fraction]:
    """Recover v_0..v_n of a binary function G from an expectation oracle.

    ``oracle(r)`` must return E[G] when each X_i is independently 1 with
    probability ``r[i]``.  Probes ``z = 1..n+1`` give the values of the degree-n
    polynomial (1+z)^n E_z[G] = sum_k v_k z^k at shifted probabilities
    (p_i+z)/(1+z); the coefficients follow by interpolation.
    """
    p = [Fraction(v) for v in p]
    if any(v <= 0 for v in p):
        raise ZeroProbabilityError("every probability must be strictly positive")
    n = len(p)
    zs = list(range(1, n + 2))

    def probe(z):
        return (1 + z) ** n * oracle([(pi + z) / (1 + z) for pi in p])

    ys = [probe(z) for z in zs]
    coeffs = interpolate(zs, ys)
    if self_check:
        z = n + 2
        if horner(coeffs, z) != probe(z):
            raise ReductionMismatch(f"interpolation self-check failed at z={z}")
    return coeffs


@dataclass(frozen=True)
class ProjectionContext:
    """Instance-relative view of a product distribution.

    ``q[i] = Pr(X_i = x_i)``; features with ``q[i] == 1`` are inactive (they
    cannot move any expectation and score 0).
    """

    dist: ProductDistribution
    instance: tuple[int, ...]
    q: tuple[Fraction, ...]
    active: tuple[int, ...]

    @classmethod
    def build(cls, dist: ProductDistribution, x: Sequence[int]) -> "ProjectionContext":
        x = tuple(x)
        q = tuple(dist.prob(i, v) for i, v in enumerate(x))
        for i, qi in enumerate(q):
            if qi == 0:
                raise ZeroProbabilityError(f"feature {i}: instance value {x[i]} has probability zero")
        active = tuple(i for i, qi in enumerate(q) if qi != 1)
        return cls(dist, x, q, active)

    def vector(self, i: int, r: Fraction) -> tuple[Fraction, ...]:
        """Distribution of X_i giving the indicator [X_i = x_i] probability ``r``."""
        qi = self.q[i]
        xi = self.instance[i]
        if qi == 1:
            if r != 1:
                raise ZeroProbabilityError(f"feature {i} never differs from the instance value")
            return self.dist.probs[i]
        probs = self.dist.probs[i]
        if len(probs) == 2:
            return tuple(r if v == xi else 1 - r for v in self.dist.domains[i])
        rest = (1 - r) / (1 - qi)
        return tuple(r if v == xi else p * rest for v, p in zip(self.dist.domains[i], probs))

    def distribution(self, r: dict[int, Fraction]) -> ProductDistribution:
        """Every vector built here sums to 1 by construction, so validation is skipped."""
        probs = list(self.dist.probs)
        for i, ri in r.items():
            probs[i] = self.vector(i, ri)
        return ProductDistribution._trusted(tuple(probs), self.dist.domains)


def projection_constants(dist: ProductDistribution, x: Sequence[int], r: Sequence) -> dict:
    """The oracle-transfer constants w_i, Z, W and p'_ij for binary query probabilities ``r``.

    E_pi[F_pi] (query probabilities r) = Z * W * E'[F] with E' under p'.
    Every p' vector sums to 1 and Z * W = 1, so the transfer reduces to
    evaluating E[F] under p'.  A zero r_i is handled as the limit r_i -> 0.
    """
    r = [Fraction(v) for v in r]
    n = dist.n_features
    w: list[Fraction | None] = []
    factors = []
    p_new = []
    z_const = Fraction(1)
    for i in range(n):
        dom, probs = dist.domains[i], dist.probs[i]
        p1 = dist.prob(i, x[i])
        z_const *= r[i]
        if p1 == 1:
            if r[i] != 1:
                raise ZeroProbabilityError(f"feature {i}: no values besides the instance value")
            w.append(Fraction(0))
            factors.append(Fraction(1))
            p_new.append(tuple(probs))
            continue
        if r[i] == 0:
            # limit r_i -> 0: W_i r_i -> 1 and p'_ij -> p_ij/(1-p_i1)
            w.append(None)
            factors.append(None)
            p_new.append(tuple(Fraction(0) if v == x[i] else p / (1 - p1) for v, p in zip(dom, probs)))
            continue
        wi = (1 - r[i]) / r[i]
        wf = 1 + sum((p * wi / (1 - p1) for v, p in zip(dom, probs) if v != x[i]), Fraction(0))
        w.append(wi)
        factors.append(wf)
        p_new.append(tuple(1 / wf if v == x[i] else p * wi / (wf * (1 - p1)) for v, p in zip(dom, probs)))
    # Z * W with the r_i = 0 limits folded in factor by factor
    zw = Fraction(1)
    w_total = Fraction(1)
    for i in range(n):
        if factors[i] is None:
            continue
        zw *= r[i] * factors[i]
        w_total *= factors[i]
    return {"w": w, "Z": z_const, "W": w_total, "ZW": zw, "W_i": factors,
            "p_prime": ProductDistribution(tuple(p_new), dist.domains)}


def _check_tractable(model: Model, n_active: int, brute_cap: int) -> None:
    if not model.tractable and n_active > brute_cap:
        raise CapacityError(
            f"the reduction needs an expectation oracle, and expectation for {model.kind} models is "
            f"#P-hard in general; {n_active} features exceed the brute-force cap {brute_cap}"
        )


def _feature_polynomial(diffs: list, n_others: int):
    """Interpolate (1+z)^n' (E1 - E0) at z = 1..n'+1; returns (coeffs, check-pass)."""
    zs = list(range(1, n_others + 2))
    ys = [(1 + z) ** n_others * d for z, d in zip(zs, diffs[: n_others + 1])]
    coeffs = interpolate(zs, ys)
    z = n_others + 2
    check = horner(coeffs, z) == (1 + z) ** n_others * diffs[n_others + 1]
    return coeffs, check


def project_and_shap(model, dist: ProductDistribution, x=None, *, brute_cap: int = BRUTE_FORCE_CAP,
                     keep_intermediates: bool = False) -> ShapReport:
    """SHAP of every feature via the expectation-oracle reduction.

    Works for binary and multi-valued product distributions alike: queries in
    the projected binary world are answered by the model's own expectation
    oracle under the reweighted distribution.  Features whose instance value
    has probability 1 are stripped and score exactly 0.
    """
    model, x = _prepare(model, dist, x)
    if not isinstance(dist, ProductDistribution):
        raise SignatureError("the reduction engine needs a product distribution")
    check_instance(model, x, dist)
    ctx = ProjectionContext.build(dist, x)
    active = ctx.active
    _check_tractable(model, len(active), brute_cap)
    n_others = len(active) - 1
    calls = 0

    base_value = expectation(model, dist, brute_cap=brute_cap)
    calls += 1
    full_value = evaluate(model, x)

    scores: list[Any] = [Fraction(0)] * dist.n_features
    notes = []
    stripped = [i for i in range(dist.n_features) if i not in active]
    if stripped:
        notes.append(f"features {stripped} have Pr(X_i = x_i) = 1 and score 0")
    intermediates: dict = {}
    if active:
        order = list(active)
        zs = list(range(1, n_others + 3))

        pins = []
        for i in order:
            pins.append((i, ctx.vector(i, Fraction(1))))
            pins.append((i, ctx.vector(i, Fraction(0))))

        def batch(chunk):
            bases = [ctx.distribution({j: (ctx.q[j] + z) / (1 + z) for j in active}) for z in chunk]
            return expectations_pinned_many(model, bases, [pins] * len(chunk), brute_cap=brute_cap)

        results = [row for part in _map(batch, _chunks(zs, _thread_count())) for row in part]
        calls += sum(len(r) for r in results)
        for pos, i in enumerate(order):
            e1 = [res[2 * pos] for res in results]
            e0 = [res[2 * pos + 1] for res in results]
            diffs = [a - b for a, b in zip(e1, e0)]
            if not all(isinstance(d, Fraction) for d in diffs):
                raise SignatureError("the reduction engine needs an exact rational expectation oracle")
            coeffs, ok = _feature_polynomial(diffs, n_others)
            if not ok:
                raise ReductionMismatch(f"feature {i}: interpolation self-check failed")
            qi = ctx.q[i]
            score = sum((coalition_weight(k, n_others) * (1 - qi) * c for k, c in enumerate(coeffs)), Fraction(0))
            scores[i] = score
            if keep_intermediates:
                intermediates[i] = {"D": [(1 - qi) * c for c in coeffs], "E1": e1, "E0": e0}
    return ShapReport(
        scores=tuple(scores),
        engine="reduction",
        oracle_calls=calls,
        instance=x,
        full_value=full_value,
        base_value=base_value,
        notes=tuple(notes),
        intermediates=intermediates,
    )


def shap_reduction(model, dist: ProductDistribution, feature: int, x=None, *,
                   brute_cap: int = BRUTE_FORCE_CAP, with_calls: bool = False):
    """SHAP of a single feature via the reduction (2(n+1) pinned oracle calls)."""
    model, x = _prepare(model, dist, x)
    ctx = ProjectionContext.build(dist, x)
    if feature not in ctx.active:
        return (Fraction(0), 0) if with_calls else Fraction(0)
    _check_tractable(model, len(ctx.active), brute_cap)
    n_others = len(ctx.active) - 1
    zs = list(range(1, n_others + 3))
    bases = [ctx.distribution({j: (ctx.q[j] + z) / (1 + z) for j in ctx.active}) for z in zs]
    pins = [(feature, ctx.vector(feature, Fraction(1))), (feature, ctx.vector(feature, Fraction(0)))]
    rows = expectations_pinned_many(model, bases, [pins] * len(zs), brute_cap=brute_cap)
    e1 = [row[0] for row in rows]
    e0 = [row[1] for row in rows]
    v1, ok1 = _feature_polynomial(e1, n_others)
    v0, ok0 = _feature_polynomial(e0, n_others)
    if not (ok1 and ok0):
        raise ReductionMismatch(f"feature {feature}: interpolation self-check failed")
    qi = ctx.q[feature]
    score = sum((coalition_weight(k, n_others) * (1 - qi) * (a - b) for k, (a, b) in enumerate(zip(v1, v0))),
                Fraction(0))
    calls = 2 * (n_others + 2)
    return (score, calls) if with_calls else score


def shap_all(model, dist, x=None, *, engine: str = "auto", brute_cap: int = BRUTE_FORCE_CAP) -> ShapReport:
    """Explain every feature, choosing the computation path.

    ``auto`` uses the reduction for tractable model classes under product
    distributions, the direct subset formula for empirical datasets, and the
    brute-force subset formula (over the model's own expectation oracle)
    otherwise.
    """
    n = dist.n_features
    model = _as_model(model, n)
    if engine not in ("auto", "reduction", "brute", "permutation"):
        raise ValueError(f"unknown engine {engine!r}")
    if isinstance(dist, EmpiricalDataset):
        if engine == "reduction":
            raise SignatureError("the reduction engine needs a product distribution")
        if engine == "auto":
            from .empirical import empirical_shap_report

            return empirical_shap_report(dist, model, x)
        return shap_brute(model, dist, x, method="permutation" if engine == "permutation" else "subset",
                          brute_cap=brute_cap)
    if isinstance(dist, NaiveBayesNet):
        if engine == "reduction":
            raise SignatureError("the reduction engine needs a product distribution")
        return shap_brute(model, dist, x, brute_cap=brute_cap)
    if engine == "reduction" or (engine == "auto" and model.tractable):
        return project_and_shap(model, dist, x, brute_cap=brute_cap)
    if engine == "auto":
        _check_tractable(model, n, brute_cap)
        return shap_brute(model, dist, x, brute_cap=brute_cap, value_mode="oracle")
    if engine == "permutation":
        return shap_brute(model, dist, x, method="permutation", brute_cap=brute_cap)
    return shap_brute(model, dist, x, brute_cap=brute_cap)


def transfer_identity_holds(model, dist: ProductDistribution, x, r, *, brute_cap: int = BRUTE_FORCE_CAP) -> tuple:
    """Compare E_pi[F_pi] by enumeration of the projected space against Z*W*E'[F]."""
    model, x = _prepare(model, dist, x)
    consts = projection_constants(dist, x, r)
    rhs = consts["ZW"] * expectation(model, consts["p_prime"], brute_cap=brute_cap)
    lhs = projected_expectation_brute(model, dist, x, r, brute_cap=brute_cap)
    return lhs, rhs


def projected_expectation_brute(model, dist: ProductDistribution, x, r, *, brute_cap: int = BRUTE_FORCE_CAP):
    """E_pi[F_pi] by summing F_pi(theta) Pr(theta) over theta in {0,1}^n.

    F_pi(theta) = E[F | X_i = x_i for theta_i = 1, X_i != x_i for theta_i = 0];
    terms whose event has probability zero carry zero weight.
    """
    model, x = _prepare(model, dist, x)
    n = dist.n_features
    if n > brute_cap:
        raise CapacityError(f"projected enumeration over {n} features exceeds cap {brute_cap}")
    r = [Fraction(v) for v in r]
    total = Fraction(0)
    for theta in itertools.product((0, 1), repeat=n):
        weight = Fraction(1)
        for ri, t in zip(r, theta):
            weight *= ri if t else 1 - ri
        if not weight:
            continue
        num = Fraction(0)
        den = Fraction(0)
        for inst, p in dist.instances():
            if all((inst[i] == x[i]) == bool(theta[i]) for i in range(n)):
                num += evaluate(model, inst) * p
                den += p
        if den == 0:
            raise ZeroProbabilityError(f"projected event {theta} has probability zero but positive weight")
        total += weight * num / den
    return total
