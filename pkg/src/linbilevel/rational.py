"""Exact rational scalars, vectors and dense matrices.

Vectors are tuples of :class:`fractions.Fraction`, matrices are tuples of
row tuples.  Everything here is immutable so problem objects built on top
can be hashed and shared freely.
"""

from __future__ import annotations

import re
from fractions import Fraction
from math import lcm
from typing import Iterable, Sequence

Rational = Fraction
RatVector = tuple  # tuple[Fraction, ...]
RatMatrix = tuple  # tuple[tuple[Fraction, ...], ...]

RATIONAL_PATTERN = re.compile(r"-?[0-9]+(/[1-9][0-9]*)?")


class RationalFormatError(ValueError):
    pass


def q(value) -> Fraction:
    """Coerce ``value`` to an exact rational.

    Floats are refused on purpose: a float has already lost exactness.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


def parse_rational(text: str) -> Fraction:
    text = text.strip()
    if not RATIONAL_PATTERN.fullmatch(text):
        raise RationalFormatError(f"malformed rational {text!r}")
    return Fraction(text)


def format_rational(value: Fraction) -> str:
    return str(value)


def vec(values: Iterable) -> RatVector:
    return tuple(q(v) for v in values)


def mat(rows: Iterable[Iterable]) -> RatMatrix:
    return tuple(vec(r) for r in rows)


def zeros(n: int) -> RatVector:
    return (Fraction(0),) * n


def unit(n: int, i: int, scale=1) -> RatVector:
    return tuple(Fraction(scale) if j == i else Fraction(0) for j in range(n))


def identity(n: int) -> RatMatrix:
    return tuple(unit(n, i) for i in range(n))


def zero_matrix(rows: int, cols: int) -> RatMatrix:
    return tuple(zeros(cols) for _ in range(rows))


def dot(u: Sequence, v: Sequence) -> Fraction:
    if len(u) != len(v):
        raise ValueError(f"length mismatch {len(u)} != {len(v)}")
    return sum((a * b for a, b in zip(u, v) if a and b), Fraction(0))


def matvec(M: Sequence[Sequence], v: Sequence) -> RatVector:
    return tuple(dot(row, v) for row in M)


def add(u: Sequence, v: Sequence) -> RatVector:
    return tuple(a + b for a, b in zip(u, v, strict=True))


def sub(u: Sequence, v: Sequence) -> RatVector:
    return tuple(a - b for a, b in zip(u, v, strict=True))


def scale(s, v: Sequence) -> RatVector:
    s = q(s)
    return tuple(s * a for a in v)


def neg(v: Sequence) -> RatVector:
    return tuple(-a for a in v)


def hstack(*blocks: RatMatrix) -> RatMatrix:
    """Concatenate matrices column-wise; all blocks must share a row count."""
    nrows = {len(b) for b in blocks}
    if len(nrows) != 1:
        raise ValueError(f"row counts differ: {sorted(nrows)}")
    return tuple(sum((tuple(b[i]) for b in blocks), ()) for i in range(nrows.pop()))


def vstack(*blocks: RatMatrix) -> RatMatrix:
    return tuple(row for b in blocks for row in b)


def transpose(M: RatMatrix, ncols: int | None = None) -> RatMatrix:
    if not M:
        return tuple(() for _ in range(ncols or 0))
    return tuple(zip(*M))


def integer_row(coeffs: Sequence[Fraction]) -> tuple[int, list[int]]:
    """Return the smallest positive multiplier making ``coeffs`` integral, and the scaled row."""
    m = 1
    for c in coeffs:
        m = lcm(m, c.denominator)
    return m, [int(c * m) for c in coeffs]


def solve_square(M: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> RatVector | None:
    """Solve ``M z = rhs`` exactly; ``None`` when ``M`` is singular."""
    n = len(M)
    A = [list(M[i]) + [rhs[i]] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            return None
        A[col], A[piv] = A[piv], A[col]
        p = A[col][col]
        prow = A[col]
        for r in range(n):
            if r != col and A[r][col] != 0:
                f = A[r][col] / p
                row = A[r]
                for k in range(col, n + 1):
                    if prow[k]:
                        row[k] -= f * prow[k]
    return tuple(A[i][n] / A[i][i] for i in range(n))


def rank(M: Sequence[Sequence[Fraction]]) -> int:
    A = [list(r) for r in M]
    if not A:
        return 0
    ncols = len(A[0])
    r = 0
    for col in range(ncols):
        piv = next((i for i in range(r, len(A)) if A[i][col] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        for i in range(r + 1, len(A)):
            if A[i][col] != 0:
                f = A[i][col] / A[r][col]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        r += 1
        if r == len(A):
            break
    return r
