"""SHAP over empirical distributions and its equivalence with PP2CNF expectation.

A 0/1 data matrix ``x`` (m rows, n columns) corresponds to the positive
partitioned 2CNF ``AND_{x_ij = 0} (U_i or V_j)``.  Two pipelines connect the
problems:

* :func:`empirical_shap_via_pp2cnf` computes SHAP scores with nothing but an
  oracle for E[Phi] under quasi-symmetric distributions (interpolate the
  bivariate polynomial Q, shift to P, read off v_k);
* :func:`pp2cnf_expectation_via_shap` computes E[Phi] with nothing but an
  oracle for SHAP over empirical distributions (Gamma row extensions, Delta
  column extensions, and the X_0 indicator column).

Both default to oracles implemented independently of the pipeline they serve,
so the round trips are genuine cross-checks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .distributions import EmpiricalDataset
from .errors import CapacityError, ReductionMismatch, SignatureError, StructureError
from .exact import as_fraction, coalition_weight, interpolate, solve_exact, vandermonde_det

SUBSET_CAP = 24
DIRECT_CAP = 20

Matrix = tuple[tuple[int, ...], ...]


# --------------------------------------------------------------------------- types

@dataclass(frozen=True)
class Pp2Cnf:
    """Clauses ``(i, j)`` mean ``U_i or V_j``; indices are 1-based."""

    m: int
    n: int
    clauses: frozenset = frozenset()

    def __post_init__(self):
        clauses = frozenset((int(i), int(j)) for i, j in self.clauses)
        object.__setattr__(self, "clauses", clauses)
        if self.m < 0 or self.n < 0:
            raise StructureError("variable counts must be non-negative")
        for i, j in clauses:
            if not (1 <= i <= self.m and 1 <= j <= self.n):
                raise StructureError(f"clause ({i}, {j}) out of range for m={self.m}, n={self.n}")

    def matrix(self) -> Matrix:
        """The 0/1 matrix whose zeros are exactly the clauses."""
        return tuple(tuple(0 if (i, j) in self.clauses else 1 for j in range(1, self.n + 1))
                     for i in range(1, self.m + 1))

    def evaluate(self, u: Sequence[int], v: Sequence[int]) -> bool:
        return all(u[i - 1] or v[j - 1] for i, j in self.clauses)


@dataclass(frozen=True)
class QuasiSymmetricAssignment:
    """Pr(U_i) = p unless i is pinned (then 1); Pr(V_j) = q unless j is pinned (1-based)."""

    p: Fraction
    q: Fraction
    pinned_u: frozenset = frozenset()
    pinned_v: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "p", as_fraction(self.p))
        object.__setattr__(self, "q", as_fraction(self.q))
        object.__setattr__(self, "pinned_u", frozenset(int(i) for i in self.pinned_u))
        object.__setattr__(self, "pinned_v", frozenset(int(j) for j in self.pinned_v))
        for value in (self.p, self.q):
            if not 0 <= value <= 1:
                raise ValueError("probabilities must lie in [0, 1]")

    def pu(self, i: int) -> Fraction:
        return Fraction(1) if i in self.pinned_u else self.p

    def pv(self, j: int) -> Fraction:
        return Fraction(1) if j in self.pinned_v else self.q


@dataclass(frozen=True)
class SubsetPolynomial:
    """P(u, v) = sum a[l][k] u^l v^k where a[l][k] = #{S : |S| = k, |g(S)| = l}."""

    a: tuple[tuple[int, ...], ...]

    @property
    def m(self) -> int:
        return len(self.a) - 1

    @property
    def n(self) -> int:
        return len(self.a[0]) - 1

    def b(self) -> tuple[tuple[int, ...], ...]:
        """Coefficients of Q(u, v) = P(1 + u, v)."""
        m, n = self.m, self.n
        return tuple(tuple(sum(self.a[l][k] * math.comb(l, t) for l in range(t, m + 1)) for k in range(n + 1))
                     for t in range(m + 1))

    def evaluate_p(self, u, v) -> Fraction:
        return _eval2(self.a, u, v)

    def evaluate_q(self, u, v) -> Fraction:
        return _eval2(self.b(), u, v)

    def v_k(self) -> list[Fraction]:
        """v_k = sum_{l >= 1} a_lk / l."""
        return [sum((Fraction(self.a[l][k], l) for l in range(1, self.m + 1)), Fraction(0))
                for k in range(self.n + 1)]


def _eval2(coeffs, u, v) -> Fraction:
    u, v = as_fraction(u), as_fraction(v)
    return sum((c * u ** l * v ** k for l, row in enumerate(coeffs) for k, c in enumerate(row) if c), Fraction(0))


# --------------------------------------------------------------------------- matrix helpers

def _matrix(data) -> Matrix:
    if isinstance(data, EmpiricalDataset):
        return data.expanded()
    if isinstance(data, Pp2Cnf):
        return data.matrix()
    return tuple(tuple(int(v) for v in row) for row in data)


def _n_cols(matrix: Matrix, n: int | None = None) -> int:
    if n is not None:
        return n
    return len(matrix[0]) if matrix else 0


def is_good(matrix: Matrix) -> bool:
    """The first row dominates every other row entrywise."""
    if not matrix:
        return True
    first = matrix[0]
    return all(all(a >= b for a, b in zip(first, row)) for row in matrix[1:])


def build_pp2cnf(dataset) -> Pp2Cnf:
    matrix = _matrix(dataset)
    m = len(matrix)
    n = _n_cols(matrix)
    clauses = {(i + 1, j + 1) for i, row in enumerate(matrix) for j, v in enumerate(row) if v == 0}
    return Pp2Cnf(m, n, frozenset(clauses))


def subset_polynomial(dataset, n: int | None = None) -> SubsetPolynomial:
    """Exact a_lk by enumerating every column subset S."""
    matrix = _matrix(dataset)
    m = len(matrix)
    n = _n_cols(matrix, n)
    if n > SUBSET_CAP:
        raise CapacityError(f"subset enumeration over {n} columns exceeds cap {SUBSET_CAP}")
    col_masks = [sum(1 << i for i in range(m) if matrix[i][j]) for j in range(n)]
    grid = [[0] * (n + 1) for _ in range(m + 1)]
    rows_of = [0] * (1 << n)
    rows_of[0] = (1 << m) - 1
    grid[m][0] = 1
    for s in range(1, 1 << n):
        low = s & -s
        rows_of[s] = rows_of[s ^ low] & col_masks[low.bit_length() - 1]
        grid[rows_of[s].bit_count()][s.bit_count()] += 1
    return SubsetPolynomial(tuple(tuple(r) for r in grid))


def q_coefficients_brute(dataset, n: int | None = None) -> tuple[tuple[int, ...], ...]:
    """b_lk counted straight from the definition of Q: all-ones rectangles T x S."""
    matrix = _matrix(dataset)
    m = len(matrix)
    n = _n_cols(matrix, n)
    if m + n > SUBSET_CAP:
        raise CapacityError(f"rectangle enumeration over {m}+{n} indices exceeds cap {SUBSET_CAP}")
    grid = [[0] * (n + 1) for _ in range(m + 1)]
    for rows in itertools.product((0, 1), repeat=m):
        t = [i for i in range(m) if rows[i]]
        for cols in itertools.product((0, 1), repeat=n):
            s = [j for j in range(n) if cols[j]]
            if all(matrix[i][j] for i in t for j in s):
                grid[len(t)][len(s)] += 1
    return tuple(tuple(r) for r in grid)


def _reduce(formula: Pp2Cnf, assignment: QuasiSymmetricAssignment):
    """Fold pinned variables: a pinned-true variable satisfies and deletes its clauses."""
    rows = [i for i in range(1, formula.m + 1) if i not in assignment.pinned_u]
    cols = [j for j in range(1, formula.n + 1) if j not in assignment.pinned_v]
    matrix = tuple(tuple(0 if (i, j) in formula.clauses else 1 for j in cols) for i in rows)
    return matrix, len(rows), len(cols)


def _expectation_from_q(b, m: int, n: int, p: Fraction, q: Fraction) -> Fraction:
    # p^m q^n Q((1-p)/p, (1-q)/q) expanded term by term, valid for p or q = 0 too
    total = Fraction(0)
    for l in range(m + 1):
        pu = (1 - p) ** l * p ** (m - l)
        if not pu:
            continue
        for k in range(n + 1):
            if b[l][k]:
                total += b[l][k] * pu * (1 - q) ** k * q ** (n - k)
    return total


def pp2cnf_expectation(formula: Pp2Cnf, assignment: QuasiSymmetricAssignment) -> Fraction:
    """E[Phi] from the subset polynomial of the reduced matrix."""
    matrix, m, n = _reduce(formula, assignment)
    p, q = assignment.p, assignment.q
    if min(m, n) > SUBSET_CAP:
        raise CapacityError(f"subset enumeration over {min(m, n)} variables exceeds cap {SUBSET_CAP}")
    if n > m:
        # Q is symmetric under transposing the matrix and swapping (u, v)
        matrix = tuple(zip(*matrix)) if matrix else ()
        m, n, p, q = n, m, q, p
    if m == 0 or n == 0:
        return Fraction(1)
    return _expectation_from_q(subset_polynomial(matrix, n).b(), m, n, p, q)


def pp2cnf_expectation_enumerate(formula: Pp2Cnf, assignment: QuasiSymmetricAssignment,
                                 cap: int = SUBSET_CAP) -> Fraction:
    """E[Phi] by enumerating assignments of the smaller side; the other side factorizes."""
    m, n = formula.m, formula.n
    clauses = formula.clauses
    if min(m, n) > cap:
        raise CapacityError(f"assignment enumeration over {min(m, n)} variables exceeds cap {cap}")
    side_u = m <= n
    outer = m if side_u else n
    inner = n if side_u else m
    p_out = [assignment.pu(i) if side_u else assignment.pv(i) for i in range(1, outer + 1)]
    p_in = [assignment.pv(j) if side_u else assignment.pu(j) for j in range(1, inner + 1)]
    partners = [[] for _ in range(outer)]
    for i, j in clauses:
        if side_u:
            partners[i - 1].append(j - 1)
        else:
            partners[j - 1].append(i - 1)
    total = Fraction(0)
    for bits in itertools.product((0, 1), repeat=outer):
        prob = Fraction(1)
        for b, p in zip(bits, p_out):
            prob *= p if b else 1 - p
            if not prob:
                break
        if not prob:
            continue
        forced = set()
        for idx, b in enumerate(bits):
            if not b:
                forced.update(partners[idx])
        for j in forced:
            prob *= p_in[j]
        total += prob
    return total


# --------------------------------------------------------------------------- direct SHAP over a dataset

def _recode(dataset: EmpiricalDataset, x: Sequence[int] | None):
    """Rows as bitmasks of agreement with the instance; duplicate rows are merged."""
    n = dataset.n_features
    x = tuple(1 for _ in range(n)) if x is None else tuple(int(v) for v in x)
    if len(x) != n:
        raise SignatureError(f"instance has {len(x)} values, expected {n}")
    masks = []
    for row in dataset.rows:
        masks.append(sum(1 << j for j in range(n) if row[j] == x[j]))
    return x, masks


def _zeta_superset(values: np.ndarray, n: int) -> np.ndarray:
    """out[S] = sum of values[T] over supersets T of S."""
    out = values.copy()
    for j in range(n):
        view = out.reshape(-1, 2, 1 << j)
        view[:, 0, :] += view[:, 1, :]
    return out


@lru_cache(maxsize=None)
def _subset_layout(n: int):
    size = 1 << n
    pop = np.array([s.bit_count() for s in range(size)], dtype=np.int64)
    return pop


def _weights(n_others: int, pop: np.ndarray) -> np.ndarray:
    table = np.array([coalition_weight(k, n_others) for k in range(n_others + 1)] + [Fraction(0)], dtype=object)
    return table[np.minimum(pop, n_others + 1)]


def _row_tables(dataset: EmpiricalDataset, x):
    n = dataset.n_features
    if n > DIRECT_CAP:
        raise CapacityError(f"subset enumeration over {n} features exceeds cap {DIRECT_CAP}")
    x, masks = _recode(dataset, x)
    size = 1 << n
    hist = np.zeros(size, dtype=object)
    for mask, c in zip(masks, dataset.counts):
        hist[mask] += c
    den = _zeta_superset(hist, n)
    inv = np.array([Fraction(1, int(d)) if d else Fraction(0) for d in den], dtype=object)
    return x, masks, inv


def _shap_from_values(values: np.ndarray, n: int, feature: int):
    pop = _subset_layout(n)
    idx = np.arange(1 << n)
    without = idx[(idx >> feature) & 1 == 0]
    weights = _weights(n - 1, pop[without])
    diff = values[without | (1 << feature)] - values[without]
    return sum(weights * diff, Fraction(0))


def row_indicator_shap(dataset: EmpiricalDataset, feature: int, x=None, _tables=None) -> list[Fraction]:
    """SHAP of ``feature`` for each row-indicator function F_r (one per distinct row)."""
    n = dataset.n_features
    x, masks, inv = _tables or _row_tables(dataset, x)
    idx = np.arange(1 << n)
    out = []
    for mask in masks:
        inside = (idx & ~mask) == 0
        out.append(_shap_from_values(np.where(inside, inv, Fraction(0)), n, feature))
    return out


def empirical_shap_direct(dataset: EmpiricalDataset, model, feature: int, x=None, _tables=None) -> Fraction:
    """Exact SHAP of ``feature`` by subset enumeration over the empirical distribution.

    F is decomposed into row indicators F_r with values y_r = F(row r); the
    score is recombined by linearity, sum_r c_r y_r Shap(F_r), where c_r is
    the multiplicity of row r.
    """
    from .models import evaluate

    tables = _tables or _row_tables(dataset, x)
    per_row = row_indicator_shap(dataset, feature, x, tables)
    total = Fraction(0)
    for row, c, s in zip(dataset.rows, dataset.counts, per_row):
        if s:
            total += c * as_fraction(evaluate(model, row)) * s
    return total


def empirical_value(dataset: EmpiricalDataset, model, event_mask: int, x) -> Fraction:
    """E[F | X_S = x_S] with S given as a bitmask; 0 when no row matches."""
    from .models import evaluate

    x, masks = _recode(dataset, x)
    num = Fraction(0)
    den = 0
    for row, mask, c in zip(dataset.rows, masks, dataset.counts):
        if mask & event_mask == event_mask:
            num += c * as_fraction(evaluate(model, row))
            den += c
    return num / den if den else Fraction(0)


def empirical_shap_report(dataset: EmpiricalDataset, model, x=None):
    from .engine import ShapReport

    tables = _row_tables(dataset, x)
    x = tables[0]
    n = dataset.n_features
    scores = tuple(empirical_shap_direct(dataset, model, i, x, tables) for i in range(n))
    return ShapReport(
        scores=scores,
        engine="empirical-direct",
        oracle_calls=0,
        instance=x,
        full_value=empirical_value(dataset, model, (1 << n) - 1, x),
        base_value=empirical_value(dataset, model, 0, x),
    )


# --------------------------------------------------------------------------- SHAP from a PP2CNF oracle

Pp2CnfOracle = Callable[[Pp2Cnf, QuasiSymmetricAssignment], Fraction]


@dataclass
class OracleLog:
    calls: int = 0
    determinants: list = field(default_factory=list)
    steps: list = field(default_factory=list)


def _vk_via_oracle(formula: Pp2Cnf, pinned_u: frozenset, n_cols: int, oracle: Pp2CnfOracle,
                   log: OracleLog) -> list[Fraction]:
    """v_0..v_{n_cols} for the matrix of ``formula`` with rows ``pinned_u`` removed.

    Column 1 of ``formula`` is the distinguished feature and is always pinned.
    Columns 2..n_cols+1 are the remaining features; row 1 is the row whose
    indicator function is explained.
    """
    rows = [i for i in range(1, formula.m + 1) if i not in pinned_u]
    if 1 in pinned_u:
        return [Fraction(0)] * (n_cols + 1)
    # restrict to J1, the columns where row 1 is 1; this makes the matrix good
    j1 = [j for j in range(2, n_cols + 2) if (1, j) not in formula.clauses]
    pinned_v = frozenset(j for j in range(1, formula.n + 1) if j not in j1)
    m_eff, n1 = len(rows), len(j1)
    reduced = tuple(tuple(0 if (i, j) in formula.clauses else 1 for j in j1) for i in rows)
    if not is_good(reduced):
        raise StructureError("restricted matrix is not good; v_k would be wrong")
    us = [Fraction(a + 1) for a in range(m_eff + 1)]
    vs = [Fraction(b + 1) for b in range(n1 + 1)]
    # Q(u_a, v_b) = (1+u)^m (1+v)^n E[Phi'] with Pr(U) = 1/(1+u), Pr(V) = 1/(1+v)
    grid = []
    for u in us:
        row = []
        for v in vs:
            assignment = QuasiSymmetricAssignment(1 / (1 + u), 1 / (1 + v), pinned_u, pinned_v)
            row.append((1 + u) ** m_eff * (1 + v) ** n1 * oracle(formula, assignment))
            log.calls += 1
        grid.append(row)
    # the Kronecker-Vandermonde system separates: interpolate in v, then in u
    log.determinants.append(vandermonde_det(us) ** (n1 + 1) * vandermonde_det(vs) ** (m_eff + 1))
    per_u = [interpolate(vs, row) for row in grid]
    b = [[Fraction(0)] * (n1 + 1) for _ in range(m_eff + 1)]
    for k in range(n1 + 1):
        coeffs = interpolate(us, [per_u[a][k] for a in range(m_eff + 1)])
        for t in range(m_eff + 1):
            b[t][k] = coeffs[t]
    # P(u, v) = Q(u - 1, v)
    a = [[sum((b[t][k] * math.comb(t, l) * (-1) ** (t - l) for t in range(l, m_eff + 1)), Fraction(0))
          for k in range(n1 + 1)] for l in range(m_eff + 1)]
    vk = [sum((a[l][k] / l for l in range(1, m_eff + 1)), Fraction(0)) for k in range(n1 + 1)]
    log.steps.append({"rows": rows, "J1": j1, "b": b, "a": a, "v": vk})
    return vk + [Fraction(0)] * (n_cols - n1)


def _shap_f1_via_oracle(matrix: Matrix, oracle: Pp2CnfOracle, log: OracleLog) -> Fraction:
    """Shap of column 0 for the indicator of row 0 (the matrix already has that row first)."""
    formula = build_pp2cnf(matrix)
    n_others = formula.n - 1
    plain = _vk_via_oracle(formula, frozenset(), n_others, oracle, log)
    dropped = frozenset(i + 1 for i, row in enumerate(matrix) if row[0] == 0)
    with_x0 = _vk_via_oracle(formula, dropped, n_others, oracle, log)
    return sum((coalition_weight(k, n_others) * (with_x0[k] - plain[k]) for k in range(n_others + 1)), Fraction(0))


def empirical_shap_via_pp2cnf(dataset: EmpiricalDataset, model, x=None, *, oracle: Pp2CnfOracle | None = None,
                              keep_intermediates: bool = False):
    """Every feature's SHAP score using only a PP2CNF expectation oracle."""
    from .engine import ShapReport
    from .models import evaluate

    oracle = oracle or pp2cnf_expectation_enumerate
    n = dataset.n_features
    x, _ = _recode(dataset, x)
    rows = dataset.expanded()
    recoded = [tuple(int(r[j] == x[j]) for j in range(n)) for r in rows]
    ys = [as_fraction(evaluate(model, r)) for r in rows]
    log = OracleLog()
    scores = []
    for feature in range(n):
        order = [feature] + [j for j in range(n) if j != feature]
        cache: dict[tuple, Fraction] = {}
        total = Fraction(0)
        for i, y in enumerate(ys):
            if not y:
                continue
            key = recoded[i]
            if key not in cache:
                # swap row i to the front, move the feature to column 0
                perm = [i] + [r for r in range(len(rows)) if r != i]
                matrix = tuple(tuple(recoded[r][j] for j in order) for r in perm)
                cache[key] = _shap_f1_via_oracle(matrix, oracle, log)
            total += y * cache[key]
        scores.append(total)
    if any(d == 0 for d in log.determinants):
        raise ReductionMismatch("a Kronecker-Vandermonde probe system was singular")
    intermediates = {"steps": log.steps} if keep_intermediates else {}
    return ShapReport(
        scores=tuple(scores),
        engine="empirical-pp2cnf",
        oracle_calls=log.calls,
        instance=x,
        full_value=empirical_value(dataset, model, (1 << n) - 1, x),
        base_value=empirical_value(dataset, model, 0, x),
        intermediates=intermediates,
    )


# --------------------------------------------------------------------------- PP2CNF expectation from a SHAP oracle

ShapOracle = Callable[[EmpiricalDataset, Any, int], Fraction]


def _default_shap_oracle(dataset: EmpiricalDataset, model, feature: int) -> Fraction:
    return empirical_shap_direct(dataset, model, feature)


def delta_matrix(n: int) -> list[list[Fraction]]:
    """A[Delta][k] = sum_q C(Delta, q) / C(2n, k + q)."""
    return [[sum((Fraction(math.comb(d, q), math.comb(2 * n, k + q)) for q in range(d + 1)), Fraction(0))
             for k in range(n + 1)] for d in range(n + 1)]


def gamma_matrix(m: int) -> list[list[Fraction]]:
    """Cauchy matrix 1 / (l + Gamma), Gamma = 1..m+1, l = 0..m."""
    return [[Fraction(1, l + g) for l in range(m + 1)] for g in range(1, m + 2)]


def _x0_indicator(row) -> Fraction:
    return Fraction(row[0])


def _v_via_shap(matrix: Matrix, n_cols: int, shap_oracle: ShapOracle, log: OracleLog) -> Fraction:
    """V for a good matrix: prepend the X_0 column (1, 0, ..., 0) and ask for Shap_{X_0}(X_0)."""
    from .models import FunctionModel

    augmented = tuple((1 if i == 0 else 0,) + tuple(row) for i, row in enumerate(matrix))
    dataset = EmpiricalDataset(augmented)
    shap = as_fraction(shap_oracle(dataset, FunctionModel(_x0_indicator, n_cols + 1), 0))
    log.calls += 1
    # E[F_1 | X_{S+0} = 1] is 1 exactly when S avoids row 1's zero columns
    ones_in_first = sum(matrix[0]) if matrix else 0
    c1 = sum((coalition_weight(k, n_cols) * math.comb(ones_in_first, k) for k in range(n_cols + 1)), Fraction(0))
    return c1 - shap


@lru_cache(maxsize=256)
def _a_via_shap_cached(matrix: Matrix, n: int, shap_oracle: ShapOracle) -> tuple:
    log = OracleLog()
    a = _a_via_shap(matrix, n, shap_oracle, log)
    return a, log.calls, tuple(log.determinants)


def _a_via_shap(matrix: Matrix, n: int, shap_oracle: ShapOracle, log: OracleLog) -> tuple:
    m = len(matrix)
    a_delta = delta_matrix(n)
    a_gamma = gamma_matrix(m)
    v_by_gamma = []
    for gamma in range(1, m + 2):
        extended = tuple((1,) * n for _ in range(gamma)) + matrix
        rhs = []
        for delta in range(n + 1):
            wide = tuple(row + (1,) * delta + (0,) * (n - delta) for row in extended)
            rhs.append((2 * n + 1) * _v_via_shap(wide, 2 * n, shap_oracle, log))
        vk, det = solve_exact(a_delta, rhs)
        log.determinants.append(("delta", gamma, det))
        v_by_gamma.append(vk)
    a = [[Fraction(0)] * (n + 1) for _ in range(m + 1)]
    for k in range(n + 1):
        coeffs, det = solve_exact(a_gamma, [v_by_gamma[g][k] for g in range(m + 1)])
        log.determinants.append(("gamma", k, det))
        for l in range(m + 1):
            a[l][k] = coeffs[l]
    return tuple(tuple(row) for row in a)


def pp2cnf_expectation_via_shap(formula: Pp2Cnf, assignment: QuasiSymmetricAssignment, *,
                                shap_oracle: ShapOracle | None = None, log: OracleLog | None = None) -> Fraction:
    """E[Phi] using only SHAP scores over empirical distributions."""
    matrix, m, n = _reduce(formula, assignment)
    if m == 0 or n == 0:
        return Fraction(1)
    oracle = shap_oracle or _default_shap_oracle
    a, calls, dets = _a_via_shap_cached(matrix, n, oracle)
    if log is not None:
        log.calls += calls
        log.determinants.extend(dets)
    if any(d[2] == 0 for d in dets):
        raise ReductionMismatch("a reverse-reduction linear system was singular")
    if any(v.denominator != 1 or v < 0 for row in a for v in row):
        raise ReductionMismatch("recovered subset counts a_lk are not non-negative integers")
    b = SubsetPolynomial(tuple(tuple(int(v) for v in row) for row in a)).b()
    return _expectation_from_q(b, m, n, assignment.p, assignment.q)
