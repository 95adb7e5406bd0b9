"""Exact rational helpers: coercion, interpolation, and small linear solves.

Everything here works on :class:`fractions.Fraction` (or plain ``int``) and never
rounds.  The interpolation routine is the workhorse of the expectation-oracle
reduction, so it has a fast path for the consecutive-integer probe points the
engine uses.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Sequence, Union

Rational = Union[int, Fraction]


def as_fraction(value) -> Fraction:
    """Coerce ``int``, ``Fraction``, numeric strings ("3/7", "0.25") or
    ``{"num": .., "den": ..}`` mappings to a Fraction.  Floats are converted
    exactly (their binary value), not by decimal rounding."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, float, str)):
        return Fraction(value)
    if isinstance(value, dict) and "num" in value and "den" in value:
        return Fraction(int(value["num"]), int(value["den"]))
    raise TypeError(f"cannot interpret {value!r} as a rational")


def fraction_to_json(value: Fraction) -> dict:
    value = as_fraction(value)
    return {"num": str(value.numerator), "den": str(value.denominator)}


@lru_cache(maxsize=None)
def coalition_weight(k: int, n_others: int) -> Fraction:
    """Shapley weight k!(n-k)!/(n+1)! of a coalition of size ``k`` drawn from
    ``n_others`` other players."""
    return Fraction(math.factorial(k) * math.factorial(n_others - k), math.factorial(n_others + 1))


def _common_denominator(values: Sequence[Fraction]) -> int:
    den = 1
    for v in values:
        den = math.lcm(den, v.denominator)
    return den


def _is_consecutive(xs: Sequence[Fraction]) -> bool:
    if any(Fraction(x).denominator != 1 for x in xs):
        return False
    return all(Fraction(xs[i + 1]) - Fraction(xs[i]) == 1 for i in range(len(xs) - 1))


def interpolate(xs: Sequence[Rational], ys: Sequence[Rational]) -> list[Fraction]:
    """Monomial coefficients ``c`` with ``sum(c[k] * x**k) == y`` at every node.

    Newton divided differences followed by a nested expansion to monomial form.
    Nodes must be distinct.  For consecutive integer nodes the divided
    differences reduce to forward differences over k!, which lets the whole
    computation run on integers with one common denominator.
    """
    if len(xs) != len(ys):
        raise ValueError("xs and ys must have the same length")
    if not xs:
        return []
    xs = [as_fraction(x) for x in xs]
    ys = [as_fraction(y) for y in ys]
    if len(set(xs)) != len(xs):
        raise ValueError("interpolation nodes must be distinct")
    if _is_consecutive(xs):
        return _interpolate_consecutive([int(x) for x in xs], ys)
    return _interpolate_general(xs, ys)


def _interpolate_general(xs: list[Fraction], ys: list[Fraction]) -> list[Fraction]:
    n = len(xs)
    dd = list(ys)
    newton = [dd[0]]
    for k in range(1, n):
        dd = [(dd[i + 1] - dd[i]) / (xs[i + k] - xs[i]) for i in range(n - k)]
        newton.append(dd[0])
    poly = [newton[-1]]
    for k in range(n - 2, -1, -1):
        # poly <- poly * (x - xs[k]) + newton[k]
        shifted = [Fraction(0)] + poly
        for i, c in enumerate(poly):
            shifted[i] -= c * xs[k]
        shifted[0] += newton[k]
        poly = shifted
    return poly


def _interpolate_consecutive(xs: list[int], ys: list[Fraction]) -> list[Fraction]:
    n = len(xs)
    den = _common_denominator(ys)
    diffs = [int(y * den) for y in ys]
    deg = n - 1
    fact = math.factorial(deg)
    # scaled Newton coefficients: C_k = (Delta^k y_0) * deg!/k!
    scaled = [diffs[0] * fact]
    row = diffs
    for k in range(1, n):
        row = [row[i + 1] - row[i] for i in range(len(row) - 1)]
        scaled.append(row[0] * (fact // math.factorial(k)))
    poly = [scaled[-1]]
    for k in range(n - 2, -1, -1):
        xk = xs[k]
        shifted = [0] + poly
        for i, c in enumerate(poly):
            shifted[i] -= c * xk
        shifted[0] += scaled[k]
        poly = shifted
    total = den * fact
    return [Fraction(c, total) for c in poly]


def horner(coeffs: Sequence[Rational], x: Rational) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def vandermonde_det(xs: Sequence[Rational]) -> Fraction:
    det = Fraction(1)
    for j in range(len(xs)):
        for i in range(j):
            det *= as_fraction(xs[j]) - as_fraction(xs[i])
    return det


def solve_exact(matrix: Sequence[Sequence[Rational]], rhs: Sequence[Rational]) -> tuple[list[Fraction], Fraction]:
    """Solve ``matrix @ x == rhs`` by Gaussian elimination over the rationals.

    Returns ``(x, det)``.  Raises ``ZeroDivisionError`` when the matrix is
    singular (the determinant is then exactly zero).
    """
    n = len(matrix)
    if any(len(row) != n for row in matrix) or len(rhs) != n:
        raise ValueError("solve_exact needs a square system")
    a = [[as_fraction(v) for v in row] + [as_fraction(r)] for row, r in zip(matrix, rhs)]
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            raise ZeroDivisionError("singular linear system (exact determinant 0)")
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            det = -det
        piv = a[col][col]
        det *= piv
        inv = 1 / piv
        pivot_row = [v * inv for v in a[col]]
        a[col] = pivot_row
        for r in range(n):
            if r != col and a[r][col] != 0:
                factor = a[r][col]
                row = a[r]
                a[r] = [row[c] - factor * pivot_row[c] for c in range(n + 1)]
    return [a[r][n] for r in range(n)], det
