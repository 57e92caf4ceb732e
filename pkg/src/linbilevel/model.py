"""Linear bilevel problems and exact pointwise evaluators.

A :class:`BilevelProblem` couples a leader polyhedron ``X`` with the
x-parameterized follower LP ``min f^T y  s.t.  C x + D y >= b`` (plus
optional equality rows ``C_eq x + D_eq y = b_eq``).  Evaluators return
``None`` where the underlying set is empty.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .lp import (
    DimensionMismatchError,
    Polyhedron,
    enumerate_vertices,
    is_feasible,
    recession_cone_is_trivial,
    solve_rows,
)
from .rational import RatMatrix, RatVector, dot, matvec, neg, sub


class ProblemClass(enum.Enum):
    OPT_NC = "opt_nc"
    OPT_CC = "opt_cc"
    PESS_NC = "pess_nc"
    PESS_CC = "pess_cc"

    @property
    def pessimistic(self) -> bool:
        return self in (ProblemClass.PESS_NC, ProblemClass.PESS_CC)

    @property
    def coupled(self) -> bool:
        return self in (ProblemClass.OPT_CC, ProblemClass.PESS_CC)


@dataclass(frozen=True)
class LowerLevel:
    f: RatVector
    C: RatMatrix
    D: RatMatrix
    b: RatVector
    C_eq: RatMatrix = ()
    D_eq: RatMatrix = ()
    b_eq: RatVector = ()

    @property
    def nrows(self) -> int:
        return len(self.b)


@dataclass(frozen=True)
class CouplingBlock:
    A: RatMatrix
    B: RatMatrix
    a: RatVector

    @property
    def nrows(self) -> int:
        return len(self.a)


def _check_matrix(name, M, rows, cols):
    if len(M) != rows:
        raise DimensionMismatchError(f"{name} has {len(M)} rows, expected {rows}")
    for i, r in enumerate(M):
        if len(r) != cols:
            raise DimensionMismatchError(f"{name}[{i}] has length {len(r)}, expected {cols}")


@dataclass(frozen=True)
class BilevelProblem:
    kind: ProblemClass
    nx: int
    ny: int
    c: RatVector
    X: Polyhedron
    lower: LowerLevel
    d: RatVector | None = None
    coupling: CouplingBlock | None = None
    name: str = ""

    def __post_init__(self):
        nx, ny, low = self.nx, self.ny, self.lower
        if len(self.c) != nx:
            raise DimensionMismatchError(f"c has length {len(self.c)}, expected {nx}")
        if self.X.dim != nx:
            raise DimensionMismatchError(f"X has dimension {self.X.dim}, expected {nx}")
        if len(low.f) != ny:
            raise DimensionMismatchError(f"f has length {len(low.f)}, expected {ny}")
        _check_matrix("C", low.C, low.nrows, nx)
        _check_matrix("D", low.D, low.nrows, ny)
        _check_matrix("C_eq", low.C_eq, len(low.b_eq), nx)
        _check_matrix("D_eq", low.D_eq, len(low.b_eq), ny)
        if self.kind is ProblemClass.PESS_CC:
            if self.d is not None:
                raise DimensionMismatchError("pess_cc problems have no d vector")
        else:
            if self.d is None:
                raise DimensionMismatchError(f"{self.kind.value} problems need a d vector")
            if len(self.d) != ny:
                raise DimensionMismatchError(f"d has length {len(self.d)}, expected {ny}")
        if self.kind.coupled:
            if self.coupling is None:
                raise DimensionMismatchError(f"{self.kind.value} problems need a coupling block")
            cb = self.coupling
            _check_matrix("A", cb.A, cb.nrows, nx)
            _check_matrix("B", cb.B, cb.nrows, ny)
        elif self.coupling is not None:
            raise DimensionMismatchError(f"{self.kind.value} problems have no coupling block")

    @property
    def m(self) -> int:
        return self.coupling.nrows if self.coupling is not None else 0

    @property
    def m_lower(self) -> int:
        return self.lower.nrows


@dataclass(frozen=True)
class AssumptionReport:
    compact_for_all_x: bool
    nonempty_for_all_x: bool | None  # None: undecidable because X is unbounded
    X_nonempty: bool
    X_bounded: bool
    witnesses: tuple = ()  # (vertex of X, infeasibility measure) pairs

    @property
    def all_hold(self) -> bool:
        return bool(self.compact_for_all_x and self.nonempty_for_all_x and self.X_nonempty and self.X_bounded)

    def reasons(self) -> list[str]:
        out = []
        if not self.X_nonempty:
            out.append("X empty")
        if not self.X_bounded:
            out.append("X unbounded")
        if not self.compact_for_all_x:
            out.append("lower-level feasible set not compact")
        if self.nonempty_for_all_x is None:
            out.append("lower-level nonemptiness undecidable")
        elif not self.nonempty_for_all_x:
            out.append("lower-level feasible set empty for some x in X")
        return out


def _rhs(p: BilevelProblem, x: Sequence):
    low = p.lower
    return sub(low.b, matvec(low.C, x)), sub(low.b_eq, matvec(low.C_eq, x))


def solve_lower(p: BilevelProblem, x, objective, *, maximize=False, G=(), h=(), E=(), g=()):
    """LP over the follower's feasible set at ``x`` with optional extra rows in y."""
    if len(x) != p.nx:
        raise DimensionMismatchError(f"x has length {len(x)}, expected {p.nx}")
    hb, gb = _rhs(p, x)
    return solve_rows(
        p.ny,
        objective,
        p.lower.D + tuple(G),
        hb + tuple(h),
        p.lower.D_eq + tuple(E),
        gb + tuple(g),
        maximize=maximize,
    )


def lower_feasible(p: BilevelProblem, x, y) -> bool:
    low = p.lower
    hb, gb = _rhs(p, x)
    return all(dot(r, y) >= hi for r, hi in zip(low.D, hb)) and all(
        dot(r, y) == gi for r, gi in zip(low.D_eq, gb)
    )


def phi(p: BilevelProblem, x) -> Fraction | None:
    """Optimal value of the follower's LP at ``x``; ``None`` if infeasible."""
    sol = solve_lower(p, x, p.lower.f)
    if not sol.optimal:
        return None
    return sol.value


def lower_optimal_point(p: BilevelProblem, x) -> RatVector | None:
    sol = solve_lower(p, x, p.lower.f)
    return sol.point if sol.optimal else None


def in_S(p: BilevelProblem, x, y) -> bool:
    if len(y) != p.ny:
        raise DimensionMismatchError(f"y has length {len(y)}, expected {p.ny}")
    if not lower_feasible(p, x, y):
        return False
    return dot(p.lower.f, y) == phi(p, x)


def _over_S(p, x, w, maximize, G=(), h=()):
    level = phi(p, x)
    if level is None:
        return None
    sol = solve_lower(p, x, w, maximize=maximize, G=G, h=h, E=(p.lower.f,), g=(level,))
    return sol.value if sol.optimal else None


def pessimistic_inner(p: BilevelProblem, x, w) -> Fraction | None:
    """``max{w^T y : y in S(x)}``; ``None`` when ``S(x)`` is empty."""
    return _over_S(p, x, w, True)


def optimistic_inner(p: BilevelProblem, x, w, with_coupling=False) -> Fraction | None:
    """``min{w^T y : y in S(x)}``, optionally intersected with the coupling rows."""
    if not with_coupling or p.coupling is None:
        return _over_S(p, x, w, False)
    cb = p.coupling
    return _over_S(p, x, w, False, G=cb.B, h=sub(cb.a, matvec(cb.A, x)))


def coupling_row_min(p: BilevelProblem, x, i: int) -> Fraction | None:
    """``min{B_i y : y in S(x)}``."""
    v = pessimistic_inner(p, x, neg(p.coupling.B[i]))
    return None if v is None else -v


def check_pc_feasible(p: BilevelProblem, x) -> bool:
    if phi(p, x) is None:
        return False
    cb = p.coupling
    for i in range(cb.nrows):
        if coupling_row_min(p, x, i) < cb.a[i] - dot(cb.A[i], x):
            return False
    return True


def evaluate_leader(p: BilevelProblem, x) -> Fraction | None:
    """Leader objective at ``x`` for the problem's class; ``None`` if x is infeasible."""
    if not p.X.contains(x):
        return None
    base = dot(p.c, x)
    kind = p.kind
    if kind is ProblemClass.OPT_NC:
        inner = optimistic_inner(p, x, p.d)
    elif kind is ProblemClass.OPT_CC:
        inner = optimistic_inner(p, x, p.d, with_coupling=True)
    elif kind is ProblemClass.PESS_NC:
        inner = pessimistic_inner(p, x, p.d)
    else:
        return base if check_pc_feasible(p, x) else None
    return None if inner is None else base + inner


def _lower_cone_rows(p: BilevelProblem) -> RatMatrix:
    low = p.lower
    return low.D + low.D_eq + tuple(neg(r) for r in low.D_eq)


def check_standing_assumption(p: BilevelProblem) -> AssumptionReport:
    compact = recession_cone_is_trivial(_lower_cone_rows(p), p.ny)
    X_nonempty = is_feasible(p.X)
    X_bounded = (not X_nonempty) or recession_cone_is_trivial(p.X.G, p.nx)
    if not X_bounded:
        return AssumptionReport(compact, None, X_nonempty, False)
    witnesses = []
    low = p.lower
    for v in enumerate_vertices(p.X):
        # min s  s.t.  D y + s e >= b - C v,  +-(D_eq y) + s e >= +-(b_eq - C_eq v),  s >= 0
        hb, gb = _rhs(p, v)
        one, zero = Fraction(1), Fraction(0)
        G = [tuple(r) + (one,) for r in low.D]
        G += [tuple(r) + (one,) for r in low.D_eq]
        G += [tuple(-a for a in r) + (one,) for r in low.D_eq]
        G.append((zero,) * p.ny + (one,))
        h = list(hb) + list(gb) + [-a for a in gb] + [zero]
        sol = solve_rows(p.ny + 1, (zero,) * p.ny + (one,), G, h)
        witnesses.append((v, sol.value))
    nonempty = all(s == 0 for _, s in witnesses)
    return AssumptionReport(compact, nonempty, X_nonempty, True, tuple(witnesses))
