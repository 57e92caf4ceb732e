"""Independent exact solvers and falsifiers for bilevel problems.

The optimistic solver enumerates complementarity patterns: a set ``J`` of
follower rows is *valid* when the follower objective lies in the cone of
those rows (plus the span of equality rows).  Forcing the rows of a valid
``J`` tight certifies follower optimality by weak duality, and every
bilevel-feasible pair lies in the region of some inclusion-minimal valid
``J``, which has at most ``ny`` rows.  Regions shrink as ``J`` grows, so
only minimal patterns are solved.

The pessimistic solvers use the same idea twice: one pattern certifies the
follower's value, a second certifies a worst-case (or coupling-minimal)
response among the follower's optima.
"""

from __future__ import annotations

import functools
import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product

from .lp import (
    LpStatus,
    Polyhedron,
    UnboundedPolyhedronError,
    basic_feasible_points,
    enumerate_vertices,
    is_feasible,
    recession_cone_is_trivial,
    solve_rows,
)
from .model import (
    BilevelProblem,
    ProblemClass,
    check_pc_feasible,
    coupling_row_min,
    evaluate_leader,
    lower_optimal_point,
    optimistic_inner,
    pessimistic_inner,
    solve_lower,
)
from .rational import RatVector, dot, neg, unit, zeros
from .reform import ReformTrace, Transform

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BilevelSolution:
    status: LpStatus
    x: RatVector | None = None
    witness_y: RatVector | None = None
    value: Fraction | None = None
    pattern: tuple = ()

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


INFEASIBLE = BilevelSolution(LpStatus.INFEASIBLE)
UNBOUNDED = BilevelSolution(LpStatus.UNBOUNDED)


@functools.lru_cache(maxsize=4096)
def _cone_contains(rows: tuple, free: tuple, target: tuple) -> bool:
    """Is ``target`` in ``cone(rows) + span(free)``?"""
    k, r = len(rows), len(free)
    n = len(target)
    if k + r == 0:
        return not any(target)
    cols = rows + free
    E = tuple(tuple(cols[j][i] for j in range(k + r)) for i in range(n))
    G = tuple(tuple(Fraction(1) if j == i else Fraction(0) for j in range(k + r)) for i in range(k))
    sol = solve_rows(k + r, zeros(k + r), G, zeros(k), E, target)
    return sol.optimal


@functools.lru_cache(maxsize=1024)
def minimal_valid_patterns(D: tuple, free: tuple, target: tuple) -> tuple:
    """Inclusion-minimal row sets ``J`` with ``target in cone(D_J) + span(free)``, in enumeration order."""
    ny = len(target)
    found = []
    for size in range(ny + 1):
        for J in combinations(range(len(D)), size):
            Js = frozenset(J)
            if any(v <= Js for v in found):
                continue
            if _cone_contains(tuple(D[j] for j in J), free, target):
                found.append(Js)
    return tuple(tuple(sorted(J)) for J in found)


class _Blocks:
    """Row builder for LPs over ``(x, y^0, y^1, ...)`` with several follower copies."""

    def __init__(self, p: BilevelProblem, copies: int):
        self.p = p
        self.n = p.nx + copies * p.ny
        self.G, self.h, self.E, self.g = [], [], [], []
        for r, hi in zip(p.X.G, p.X.h):
            self.G.append(tuple(r) + zeros(self.n - p.nx))
            self.h.append(hi)

    def row(self, x_part, ys: dict) -> tuple:
        p = self.p
        out = list(x_part) if x_part is not None else [Fraction(0)] * p.nx
        out += [Fraction(0)] * (self.n - p.nx)
        for k, coeffs in ys.items():
            base = p.nx + k * p.ny
            for j, v in enumerate(coeffs):
                out[base + j] += v
        return tuple(out)

    def follower(self, k: int, tight: tuple):
        """Copy ``k`` is follower-feasible, with the rows in ``tight`` holding with equality."""
        low = self.p.lower
        tight = set(tight)
        for i, (cr, dr, br) in enumerate(zip(low.C, low.D, low.b)):
            target = (self.E, self.g) if i in tight else (self.G, self.h)
            target[0].append(self.row(cr, {k: dr}))
            target[1].append(br)
        for cr, dr, br in zip(low.C_eq, low.D_eq, low.b_eq):
            self.E.append(self.row(cr, {k: dr}))
            self.g.append(br)

    def solve(self, objective, maximize=False):
        return solve_rows(self.n, objective, self.G, self.h, self.E, self.g, maximize=maximize)


def _follower_patterns(p: BilevelProblem) -> tuple:
    return minimal_valid_patterns(p.lower.D, p.lower.D_eq, tuple(p.lower.f))


def _response_patterns(p: BilevelProblem, w) -> tuple:
    """Patterns certifying ``y in argmin{w^T y : y in S(x)}``."""
    return minimal_valid_patterns(p.lower.D, p.lower.D_eq + (tuple(p.lower.f),), tuple(w))


def _optimistic_region(p: BilevelProblem, J) -> _Blocks:
    blk = _Blocks(p, 1)
    blk.follower(0, J)
    if p.coupling is not None:
        for ar, br, ai in zip(p.coupling.A, p.coupling.B, p.coupling.a):
            blk.G.append(blk.row(ar, {0: br}))
            blk.h.append(ai)
    return blk


def solve_optimistic(p: BilevelProblem) -> BilevelSolution:
    if p.kind not in (ProblemClass.OPT_NC, ProblemClass.OPT_CC):
        raise ValueError(f"solve_optimistic needs an optimistic problem, got {p.kind.value}")
    objective = tuple(p.c) + tuple(p.d)
    best = None
    for J in _follower_patterns(p):
        sol = _optimistic_region(p, J).solve(objective)
        if sol.status is LpStatus.UNBOUNDED:
            return UNBOUNDED
        if sol.optimal:
            key = (sol.value, sol.point)
            if best is None or key < best[0]:
                best = (key, J)
    if best is None:
        return INFEASIBLE
    (value, point), J = best
    return BilevelSolution(LpStatus.OPTIMAL, point[: p.nx], point[p.nx :], value, J)


def max_on_optimal_set(p: BilevelProblem, value: Fraction, weights) -> Fraction | None:
    """Largest ``weights^T (x, y)`` over all optimal bilevel pairs of an optimistic problem.

    ``value`` is the known optimal value.
    """
    objective = tuple(p.c) + tuple(p.d)
    best = None
    for J in _follower_patterns(p):
        blk = _optimistic_region(p, J)
        blk.G.append(neg(objective))
        blk.h.append(-value)
        sol = blk.solve(tuple(weights), maximize=True)
        if sol.status is LpStatus.UNBOUNDED:
            raise ValueError("optimal set is unbounded in the requested direction")
        if sol.optimal and (best is None or sol.value > best):
            best = sol.value
    return best


def solve_pessimistic_nc(p: BilevelProblem) -> BilevelSolution:
    if p.kind is not ProblemClass.PESS_NC:
        raise ValueError(f"solve_pessimistic_nc needs a pess_nc problem, got {p.kind.value}")
    nx, ny = p.nx, p.ny
    objective = tuple(p.c) + zeros(ny) + tuple(p.d)
    worst = _response_patterns(p, neg(p.d))
    f = p.lower.f
    candidates = []
    for J in _follower_patterns(p):
        for K in worst:
            blk = _Blocks(p, 2)
            blk.follower(0, J)
            blk.follower(1, K)
            blk.E.append(blk.row(None, {0: neg(f), 1: f}))
            blk.g.append(Fraction(0))
            sol = blk.solve(objective)
            if sol.status is LpStatus.UNBOUNDED:
                return UNBOUNDED
            if sol.optimal:
                candidates.append((sol.value, sol.point, (J, K)))
    for value, point, pattern in sorted(candidates):
        x = point[:nx]
        if evaluate_leader(p, x) == value:
            return BilevelSolution(LpStatus.OPTIMAL, x, point[nx + ny :], value, pattern)
        log.warning("pess_nc candidate %s failed certification", x)
    return INFEASIBLE


def solve_pessimistic_cc(p: BilevelProblem) -> BilevelSolution:
    if p.kind is not ProblemClass.PESS_CC:
        raise ValueError(f"solve_pessimistic_cc needs a pess_cc problem, got {p.kind.value}")
    nx, ny, m, cb = p.nx, p.ny, p.m, p.coupling
    f = p.lower.f
    objective = tuple(p.c) + zeros((m + 1) * ny)
    per_row = [_response_patterns(p, cb.B[i]) for i in range(m)]
    candidates = []
    for J in _follower_patterns(p):
        base = _Blocks(p, 1)
        base.follower(0, J)
        if not base.solve(zeros(base.n)).optimal:
            continue
        for Ks in product(*per_row):
            blk = _Blocks(p, m + 1)
            blk.follower(0, J)
            for i, K in enumerate(Ks):
                blk.follower(i + 1, K)
                blk.E.append(blk.row(None, {0: neg(f), i + 1: f}))
                blk.g.append(Fraction(0))
                blk.G.append(blk.row(cb.A[i], {i + 1: cb.B[i]}))
                blk.h.append(cb.a[i])
            sol = blk.solve(objective)
            if sol.status is LpStatus.UNBOUNDED:
                return UNBOUNDED
            if sol.optimal:
                candidates.append((sol.value, sol.point[:nx], sol.point[nx : nx + ny], (J, Ks)))
    for value, x, y, pattern in sorted(candidates):
        if check_pc_feasible(p, x):
            return BilevelSolution(LpStatus.OPTIMAL, x, y, value, pattern)
        log.warning("pess_cc candidate %s failed certification", x)
    return INFEASIBLE


def solve(p: BilevelProblem) -> BilevelSolution:
    """Dispatch to the oracle matching the problem's class."""
    if p.kind is ProblemClass.PESS_CC:
        return solve_pessimistic_cc(p)
    if p.kind is ProblemClass.PESS_NC:
        return solve_pessimistic_nc(p)
    return solve_optimistic(p)


def bounded_window(P: Polyhedron) -> Polyhedron:
    """``P`` itself if bounded, else ``P`` cut by a box one unit past its extreme points.

    Coordinates bounded over ``P`` keep their exact LP bounds.
    """
    if recession_cone_is_trivial(P.G, P.dim):
        return P
    verts = basic_feasible_points(P)
    if not verts:
        raise UnboundedPolyhedronError("cannot sample a polyhedron without extreme points")
    lower, upper = [], []
    for j in range(P.dim):
        e = unit(P.dim, j)
        lo = solve_rows(P.dim, e, P.G, P.h)
        hi = solve_rows(P.dim, e, P.G, P.h, maximize=True)
        lower.append(lo.value if lo.optimal else min(v[j] for v in verts) - 1)
        upper.append(hi.value if hi.optimal else max(v[j] for v in verts) + 1)
    box = Polyhedron.box(lower, upper)
    return Polyhedron(P.G + box.G, P.h + box.h, P.dim)


@functools.lru_cache(maxsize=256)
def _vertices(P: Polyhedron) -> tuple:
    if not is_feasible(P):
        return ()
    return tuple(enumerate_vertices(bounded_window(P)))


def sample_points(P: Polyhedron, count: int, rng: random.Random) -> list:
    """Exact rational points of ``P``: random convex combinations of vertices.

    Roughly a quarter of the draws are vertices themselves.  Unbounded
    polyhedra are sampled inside :func:`bounded_window`.
    """
    verts = _vertices(P)
    if not verts:
        return []
    out = []
    for _ in range(count):
        if rng.random() < 0.25:
            out.append(verts[rng.randrange(len(verts))])
            continue
        w = [rng.randint(0, 6) for _ in verts]
        if not any(w):
            w[rng.randrange(len(w))] = 1
        total = sum(w)
        out.append(
            tuple(sum((Fraction(wi, total) * v[j] for wi, v in zip(w, verts) if wi), Fraction(0)) for j in range(P.dim))
        )
    return out


def falsify(p: BilevelProblem, claimed: BilevelSolution, samples: int, seed: int) -> bool:
    """True iff some sampled leader point beats the claimed optimal value."""
    if not claimed.optimal:
        return False
    rng = random.Random(seed)
    seen = {}
    for x in sample_points(p.X, samples, rng):
        if x not in seen:
            seen[x] = evaluate_leader(p, x)
        v = seen[x]
        if v is not None and v < claimed.value:
            return True
    return False


def _row_holds_for_some_response(p: BilevelProblem, x, i: int, ybar) -> bool:
    cb, f = p.coupling, p.lower.f
    sol = solve_lower(p, x, cb.B[i], G=(neg(f),), h=(-dot(f, ybar),))
    return dot(cb.B[i], sol.point) >= cb.a[i] - dot(cb.A[i], x)


def check_coupling_row(p: BilevelProblem, x, i: int) -> tuple[bool, bool]:
    """(direct check of coupling row ``i`` over S(x), existence-form check with some ybar)."""
    if p.coupling is None or not 0 <= i < p.m:
        raise IndexError(f"no coupling row {i}")
    ybar = lower_optimal_point(p, x)
    if ybar is None:
        raise ValueError("S(x) is empty; both sides are undefined")
    cb = p.coupling
    direct = coupling_row_min(p, x, i) >= cb.a[i] - dot(cb.A[i], x)
    return direct, _row_holds_for_some_response(p, x, i, ybar)


def check_joint_rows(p: BilevelProblem, x) -> tuple[bool, bool]:
    """(check_pc_feasible, existence form with one shared ybar for every row)."""
    ybar = lower_optimal_point(p, x)
    if ybar is None:
        return check_pc_feasible(p, x), False
    return check_pc_feasible(p, x), all(_row_holds_for_some_response(p, x, i, ybar) for i in range(p.m))


def lift_point(t: ReformTrace, x) -> RatVector | None:
    """Map a feasible source leader point into the target leader space; ``None`` if x is infeasible."""
    src = t.source
    kind = t.transform
    if kind is Transform.PESS_CC_TO_OPT_CC:
        ybar = lower_optimal_point(src, x)
        return None if ybar is None else tuple(x) + ybar
    if kind is Transform.EPS_AUX:
        best = optimistic_inner(src, x, src.d)
        if best is None:
            return None
        level = dot(src.lower.f, lower_optimal_point(src, x))
        sol = solve_lower(src, x, src.d, E=(src.lower.f, src.d), g=(level, best))
        return tuple(x) + sol.point
    if kind is Transform.EPIGRAPH_NORMALIZE:
        t_val = pessimistic_inner(src, x, src.d)
        return None if t_val is None else tuple(x) + (t_val,)
    return tuple(x)
