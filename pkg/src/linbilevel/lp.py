"""Exact primal simplex, vertex enumeration and recession-cone tests.

The simplex works on a fraction-free integer tableau: every row of the
standard form is scaled to integers once, and pivots use the Edmonds
update ``(a*p - b*c) // d`` with ``d`` the previous pivot, which keeps all
entries integral (they are minors of the scaled matrix).  Entering and
leaving variables follow Bland's rule, so degenerate problems terminate.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .rational import (
    RatMatrix,
    RatVector,
    dot,
    integer_row,
    mat,
    solve_square,
    vec,
)


class DimensionMismatchError(ValueError):
    pass


class UnboundedPolyhedronError(ValueError):
    pass


class Sense(enum.Enum):
    MINIMIZE = "min"
    MAXIMIZE = "max"


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class Polyhedron:
    """The set ``{z : G z >= h}`` in ``dim`` dimensions."""

    G: RatMatrix
    h: RatVector
    dim: int

    def __post_init__(self):
        if len(self.G) != len(self.h):
            raise DimensionMismatchError(f"G has {len(self.G)} rows but h has {len(self.h)}")
        if self.dim < 1:
            raise DimensionMismatchError("polyhedron dimension must be >= 1")
        for i, row in enumerate(self.G):
            if len(row) != self.dim:
                raise DimensionMismatchError(f"row {i} of G has length {len(row)}, expected {self.dim}")

    @classmethod
    def of(cls, G, h, dim: int | None = None) -> "Polyhedron":
        G = mat(G)
        if dim is None:
            if not G:
                raise DimensionMismatchError("dim is required when G has no rows")
            dim = len(G[0])
        return cls(G, vec(h), dim)

    @classmethod
    def box(cls, lower: Sequence, upper: Sequence) -> "Polyhedron":
        n = len(lower)
        G = [[1 if j == i else 0 for j in range(n)] for i in range(n)]
        G += [[-1 if j == i else 0 for j in range(n)] for i in range(n)]
        h = list(lower) + [-Fraction(u) for u in upper]
        return cls.of(G, h, n)

    @property
    def nrows(self) -> int:
        return len(self.G)

    def contains(self, z: Sequence) -> bool:
        if len(z) != self.dim:
            raise DimensionMismatchError(f"point has length {len(z)}, expected {self.dim}")
        return all(dot(row, z) >= hi for row, hi in zip(self.G, self.h))


@dataclass(frozen=True)
class LpProblem:
    sense: Sense
    objective: RatVector
    feasible_set: Polyhedron
    E: RatMatrix = ()
    g: RatVector = ()

    def __post_init__(self):
        n = self.feasible_set.dim
        if len(self.objective) != n:
            raise DimensionMismatchError(f"objective has length {len(self.objective)}, expected {n}")
        if len(self.E) != len(self.g):
            raise DimensionMismatchError("equality matrix and right-hand side differ in length")
        for i, row in enumerate(self.E):
            if len(row) != n:
                raise DimensionMismatchError(f"equality row {i} has length {len(row)}, expected {n}")

    @property
    def dim(self) -> int:
        return self.feasible_set.dim


@dataclass(frozen=True)
class LpSolution:
    """Result of :func:`solve_lp`.

    Duals always refer to the minimization form ``min s*c^T z`` with
    ``s = +1`` for minimize and ``s = -1`` for maximize, so that
    ``G^T y + E^T mu = s*c``, ``y >= 0`` and ``s*value = h^T y + g^T mu``.

    An infeasible result carries a Farkas certificate in ``duals``/``eq_duals``:
    ``G^T y + E^T mu = 0``, ``y >= 0``, ``h^T y + g^T mu > 0``.  An unbounded
    result carries a feasible ``point`` and a ``ray`` with ``G r >= 0``,
    ``E r = 0`` and ``s*c^T r < 0``.
    """

    status: LpStatus
    point: RatVector | None = None
    value: Fraction | None = None
    duals: RatVector | None = None
    eq_duals: RatVector | None = None
    active_set: frozenset = field(default_factory=frozenset)
    ray: RatVector | None = None

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def solve_lp(p: LpProblem) -> LpSolution:
    return solve_rows(
        p.dim,
        p.objective,
        p.feasible_set.G,
        p.feasible_set.h,
        p.E,
        p.g,
        maximize=p.sense is Sense.MAXIMIZE,
    )


def solve_rows(n, objective, G, h, E=(), g=(), *, maximize=False) -> LpSolution:
    """Solve ``min/max objective^T z`` over ``G z >= h, E z = g`` with free ``z``.

    This is the array-level entry point behind :func:`solve_lp`; unlike a
    :class:`Polyhedron` it accepts ``n == 0``.
    """
    if len(objective) != n:
        raise DimensionMismatchError(f"objective has length {len(objective)}, expected {n}")
    if len(G) != len(h) or len(E) != len(g):
        raise DimensionMismatchError("constraint matrix and right-hand side differ in length")
    if any(len(r) != n for r in G) or any(len(r) != n for r in E):
        raise DimensionMismatchError(f"constraint rows must have length {n}")
    sgn = -1 if maximize else 1
    return _Tableau(n, [sgn * c for c in objective], G, h, E, g).solve(objective, G, h, E)


class _Tableau:
    def __init__(self, n, cost, G, h, E, g):
        self.n = n
        self.n_e = len(E)
        # (kind, original index, multiplier, flip) per kept standard-form row
        self.rows = []
        coeffs = []
        for kind, M, rhs in (("G", G, h), ("E", E, g)):
            for i, (row, r) in enumerate(zip(M, rhs)):
                if not any(row):
                    if (kind == "G" and r > 0) or (kind == "E" and r != 0):
                        self.trivially_infeasible = (kind, i, 1 if r > 0 else -1)
                        return
                    continue
                s, ints = integer_row(list(row) + [r])
                coeffs.append((kind, i, s, ints))
        self.trivially_infeasible = None

        n_g = sum(1 for c in coeffs if c[0] == "G")
        self.slack_start = 2 * n
        self.art_start = 2 * n + n_g
        n_art = 0
        for kind, _, _, ints in coeffs:
            if kind == "E" or ints[-1] > 0:
                n_art += 1
        ncols = self.art_start + n_art
        self.ncols = ncols

        T = []
        basis = []
        slack = self.slack_start
        art = self.art_start
        self.slack_col = {}
        self.art_col = {}
        for kind, i, s, ints in coeffs:
            a, r = ints[:-1], ints[-1]
            row = [0] * (ncols + 1)
            if kind == "G":
                flip = -1 if r <= 0 else 1
                self.slack_col[i] = slack
                row[slack] = -flip
                if flip < 0:
                    basis.append(slack)
                slack += 1
            else:
                flip = -1 if r < 0 else 1
            for j, v in enumerate(a):
                if v:
                    row[j] = flip * v
                    row[n + j] = -flip * v
            row[ncols] = flip * r
            if kind == "E" or flip > 0:
                row[art] = 1
                self.art_col[(kind, i)] = art
                basis.append(art)
                art += 1
            T.append(row)
            self.rows.append((kind, i, s, flip))
        self.T = T
        self.basis = basis
        self.d = 1
        self.cost_scale, c_int = integer_row(list(cost))
        self.cost = c_int + [-v for v in c_int] + [0] * (ncols - 2 * n)
        self.original = [list(r) for r in T]
        self.deleted = False

    def _pivot(self, r, s):
        T = self.T
        prow = T[r]
        p = prow[s]
        d = self.d
        for row in T:
            if row is prow:
                continue
            f = row[s]
            if f:
                row[:] = [(a * p - f * b) // d for a, b in zip(row, prow)]
            elif p != d:
                row[:] = [a * p // d for a in row]
        obj = self.obj
        f = obj[s]
        if f:
            obj[:] = [(a * p - f * b) // d for a, b in zip(obj, prow)]
        elif p != d:
            obj[:] = [a * p // d for a in obj]
        self.basis[r] = s
        if p < 0:
            for row in T:
                row[:] = [-a for a in row]
            obj[:] = [-a for a in obj]
            p = -p
        self.d = p

    def _reprice(self, cost):
        d = self.d
        obj = [d * c for c in cost] + [0]
        for row, b in zip(self.T, self.basis):
            cb = cost[b]
            if cb:
                obj = [o - cb * a for o, a in zip(obj, row)]
        self.obj = obj

    def _run(self, limit) -> bool:
        """Bland's rule iterations; entering columns restricted to ``< limit``.

        Returns the entering column of an unbounded ray, or None at optimality.
        """
        T = self.T
        while True:
            obj = self.obj
            s = next((j for j in range(limit) if obj[j] < 0), None)
            if s is None:
                return None
            best = None
            for i, row in enumerate(T):
                a = row[s]
                if a > 0:
                    if best is None:
                        best = i
                        continue
                    brow = T[best]
                    lhs = row[-1] * brow[s]
                    rhs = brow[-1] * a
                    if lhs < rhs or (lhs == rhs and self.basis[i] < self.basis[best]):
                        best = i
            if best is None:
                return s
            self._pivot(best, s)

    def _point(self, column=None):
        """Current basic solution in z coordinates, or the ray along ``column``."""
        n, d = self.n, self.d
        values = [Fraction(0)] * self.ncols
        if column is None:
            for row, b in zip(self.T, self.basis):
                values[b] = Fraction(row[-1], d)
        else:
            values[column] = Fraction(1)
            for row, b in zip(self.T, self.basis):
                values[b] = Fraction(-row[column], d)
        return tuple(values[j] - values[n + j] for j in range(n))

    def _farkas(self, m_g, m_e):
        y = [Fraction(0)] * m_g
        mu = [Fraction(0)] * m_e
        if self.trivially_infeasible is not None:
            kind, i, sign = self.trivially_infeasible
            if kind == "G":
                y[i] = Fraction(1)
            else:
                mu[i] = Fraction(sign)
            return tuple(y), tuple(mu)
        # phase-one duals: B^T pi = c_B with unit cost on artificials
        B = [[Fraction(self.original[r][b]) for r in range(len(self.rows))] for b in self.basis]
        pi = solve_square(B, [Fraction(1 if b >= self.art_start else 0) for b in self.basis])
        for (kind, i, s, flip), val in zip(self.rows, pi):
            if kind == "G":
                y[i] = val * flip * s
            else:
                mu[i] = val * flip * s
        return tuple(y), tuple(mu)

    def solve(self, objective, G, h, E) -> LpSolution:
        if self.trivially_infeasible is not None:
            y, mu = self._farkas(len(G), len(E))
            return LpSolution(LpStatus.INFEASIBLE, duals=y, eq_duals=mu)
        if self.art_start < self.ncols:
            phase1 = [0] * self.art_start + [1] * (self.ncols - self.art_start)
            self._reprice(phase1)
            self._run(self.ncols)
            if self.obj[-1] != 0:
                y, mu = self._farkas(len(G), len(E))
                return LpSolution(LpStatus.INFEASIBLE, duals=y, eq_duals=mu)
            self._drive_out_artificials()
        self._reprice(self.cost)
        column = self._run(self.art_start)
        if column is not None:
            return LpSolution(LpStatus.UNBOUNDED, point=self._point(), ray=self._point(column))

        point = self._point()
        duals, eq_duals = self._duals(len(G))
        active = frozenset(i for i, (row, hi) in enumerate(zip(G, h)) if dot(row, point) == hi)
        return LpSolution(
            LpStatus.OPTIMAL,
            point=point,
            value=dot(objective, point),
            duals=duals,
            eq_duals=eq_duals,
            active_set=active,
        )

    def _drive_out_artificials(self):
        i = 0
        while i < len(self.T):
            if self.basis[i] >= self.art_start:
                row = self.T[i]
                j = next((j for j in range(self.art_start) if row[j] != 0), None)
                if j is None:
                    # redundant equation: all structural entries vanished
                    del self.T[i]
                    del self.basis[i]
                    del self.rows[i]
                    del self.original[i]
                    self.deleted = True
                    continue
                self._pivot(i, j)
            i += 1

    def _duals(self, m_g):
        n_e = self.n_e
        y = [Fraction(0)] * m_g
        mu = [Fraction(0)] * n_e
        s0 = self.cost_scale
        if not self.deleted:
            d = self.d
            for kind, i, s, flip in self.rows:
                if kind == "G":
                    y[i] = Fraction(self.obj[self.slack_col[i]] * s, d * s0)
                else:
                    mu[i] = Fraction(-self.obj[self.art_col[("E", i)]] * flip * s, d * s0)
            return tuple(y), tuple(mu)
        # fallback after dropping redundant rows: solve B^T pi = c_B directly
        B = [[Fraction(self.original[r][b]) for r in range(len(self.rows))] for b in self.basis]
        pi = solve_square(B, [Fraction(self.cost[b]) if b < self.art_start else Fraction(0) for b in self.basis])
        for (kind, i, s, flip), val in zip(self.rows, pi):
            if kind == "G":
                y[i] = val * flip * s / s0
            else:
                mu[i] = val * flip * s / s0
        return tuple(y), tuple(mu)


def certificate_violations(p: LpProblem, sol: LpSolution) -> list[str]:
    """List every way a solution fails its exact certificate (empty when valid)."""
    G, h = p.feasible_set.G, p.feasible_set.h
    if sol.status is LpStatus.INFEASIBLE:
        return _farkas_violations(p, sol)
    if sol.status is LpStatus.UNBOUNDED:
        return _ray_violations(p, sol)
    problems = []
    z = sol.point
    for i, (row, hi) in enumerate(zip(G, h)):
        if dot(row, z) < hi:
            problems.append(f"inequality row {i} violated")
    for k, (row, gk) in enumerate(zip(p.E, p.g)):
        if dot(row, z) != gk:
            problems.append(f"equality row {k} violated")
    if any(yi < 0 for yi in sol.duals):
        problems.append("negative inequality dual")
    sgn = -1 if p.sense is Sense.MAXIMIZE else 1
    for j in range(p.dim):
        lhs = sum((G[i][j] * sol.duals[i] for i in range(len(G))), Fraction(0))
        lhs += sum((p.E[k][j] * sol.eq_duals[k] for k in range(len(p.E))), Fraction(0))
        if lhs != sgn * p.objective[j]:
            problems.append(f"dual equation {j} violated")
    dual_value = dot(h, sol.duals) + dot(p.g, sol.eq_duals)
    if dual_value != sgn * sol.value:
        problems.append(f"duality gap: primal {sgn * sol.value} vs dual {dual_value}")
    if sol.value != dot(p.objective, z):
        problems.append("reported value differs from objective at point")
    return problems


def _farkas_violations(p: LpProblem, sol: LpSolution) -> list[str]:
    G, h = p.feasible_set.G, p.feasible_set.h
    y, mu = sol.duals, sol.eq_duals
    if y is None or mu is None or len(y) != len(G) or len(mu) != len(p.E):
        return ["missing Farkas certificate"]
    problems = []
    if any(yi < 0 for yi in y):
        problems.append("negative Farkas multiplier")
    for j in range(p.dim):
        lhs = sum((G[i][j] * y[i] for i in range(len(G))), Fraction(0))
        lhs += sum((p.E[k][j] * mu[k] for k in range(len(p.E))), Fraction(0))
        if lhs != 0:
            problems.append(f"Farkas combination nonzero in column {j}")
    if dot(h, y) + dot(p.g, mu) <= 0:
        problems.append("Farkas right-hand side not positive")
    return problems


def _ray_violations(p: LpProblem, sol: LpSolution) -> list[str]:
    if sol.point is None or sol.ray is None:
        return ["missing feasible point or ray"]
    G, h = p.feasible_set.G, p.feasible_set.h
    problems = []
    z, r = sol.point, sol.ray
    for i, (row, hi) in enumerate(zip(G, h)):
        if dot(row, z) < hi:
            problems.append(f"inequality row {i} violated")
        if dot(row, r) < 0:
            problems.append(f"ray leaves inequality row {i}")
    for k, (row, gk) in enumerate(zip(p.E, p.g)):
        if dot(row, z) != gk:
            problems.append(f"equality row {k} violated")
        if dot(row, r) != 0:
            problems.append(f"ray leaves equality row {k}")
    sgn = -1 if p.sense is Sense.MAXIMIZE else 1
    if sgn * dot(p.objective, r) >= 0:
        problems.append("ray does not improve the objective")
    return problems


def is_feasible(P: Polyhedron) -> bool:
    return solve_rows(P.dim, (Fraction(0),) * P.dim, P.G, P.h).optimal


def recession_cone_is_trivial(D: RatMatrix, ncols: int | None = None) -> bool:
    """True iff ``{y : D y >= 0} = {0}``.

    Decided by maximizing and minimizing each coordinate over the cone
    intersected with the unit box.
    """
    n = ncols if ncols is not None else (len(D[0]) if D else 0)
    if n == 0:
        return True
    zero = Fraction(0)
    G = [tuple(r) for r in D]
    h = [zero] * len(G)
    for j in range(n):
        e = tuple(Fraction(1) if k == j else zero for k in range(n))
        G.append(e)
        h.append(Fraction(-1))
        G.append(tuple(-v for v in e))
        h.append(Fraction(-1))
    for j in range(n):
        e = tuple(Fraction(1) if k == j else zero for k in range(n))
        for maximize in (True, False):
            sol = solve_rows(n, e, G, h, maximize=maximize)
            if sol.value != 0:
                return False
    return True


def enumerate_vertices(P: Polyhedron) -> list[RatVector]:
    """All extreme points of the bounded polyhedron ``P``, sorted lexicographically."""
    if not is_feasible(P):
        return []
    if not recession_cone_is_trivial(P.G, P.dim):
        raise UnboundedPolyhedronError("polyhedron is unbounded")
    return basic_feasible_points(P)


def basic_feasible_points(P: Polyhedron) -> list[RatVector]:
    """Extreme points of ``P`` without the boundedness check (empty if ``P`` has none)."""
    found = set()
    for rows in combinations(range(P.nrows), P.dim):
        z = solve_square([P.G[i] for i in rows], [P.h[i] for i in rows])
        if z is not None and P.contains(z):
            found.add(z)
    return sorted(found)
