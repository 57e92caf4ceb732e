import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from linbilevel.lp import (
    DimensionMismatchError,
    LpProblem,
    LpStatus,
    Polyhedron,
    Sense,
    UnboundedPolyhedronError,
    basic_feasible_points,
    certificate_violations,
    enumerate_vertices,
    is_feasible,
    recession_cone_is_trivial,
    solve_lp,
    solve_rows,
)
from linbilevel.rational import dot, mat, vec

from conftest import rationals

F = Fraction


def lp(c, G, h, E=(), g=(), sense=Sense.MINIMIZE):
    n = len(c)
    return LpProblem(sense, vec(c), Polyhedron.of(mat(G), vec(h), n), mat(E), vec(g))


def solved(p):
    sol = solve_lp(p)
    assert certificate_violations(p, sol) == []
    return sol


def test_textbook_max():
    # max 3x + 2y  s.t.  x + y <= 4, x + 3y <= 6, x, y >= 0
    p = lp([3, 2], [[-1, -1], [-1, -3], [1, 0], [0, 1]], [-4, -6, 0, 0], sense=Sense.MAXIMIZE)
    sol = solved(p)
    assert sol.value == 12 and sol.point == (4, 0)
    assert 0 in sol.active_set


def test_infeasible_carries_farkas():
    p = lp([1], [[1], [-1]], [1, 0])  # x >= 1 and x <= 0
    sol = solved(p)
    assert sol.status is LpStatus.INFEASIBLE
    assert dot(p.feasible_set.h, sol.duals) > 0


def test_unbounded_carries_ray():
    sol = solved(lp([-1, 0], [[1, 0], [0, 1]], [0, 0]))
    assert sol.status is LpStatus.UNBOUNDED
    assert sol.ray[0] > 0


def test_zero_row_infeasible():
    sol = solved(lp([1], [[0]], [1]))
    assert sol.status is LpStatus.INFEASIBLE


def test_equalities_and_redundant_rows():
    # x + y = 1 stated twice, with its double; min x - y over the simplex
    E = [[1, 1], [1, 1], [2, 2]]
    p = lp([1, -1], [[1, 0], [0, 1]], [0, 0], E, [1, 1, 2])
    sol = solved(p)
    assert sol.value == -1 and sol.point == (0, 1)


def test_inconsistent_equalities():
    sol = solved(lp([0], [], [], [[1], [1]], [0, 1]))
    assert sol.status is LpStatus.INFEASIBLE


def test_beale_cycling_example_terminates():
    # the classical cycling instance for Dantzig's rule; Bland's rule must finish
    c = [F(-3, 4), 150, F(-1, 50), 6]
    G = [
        [F(-1, 4), 60, F(1, 25), -9],
        [F(-1, 2), 90, F(1, 50), -3],
        [0, 0, -1, 0],
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, 1, 0],
        [0, 0, 0, 1],
    ]
    sol = solved(lp(c, G, [0, 0, -1, 0, 0, 0, 0]))
    assert sol.value == F(-1, 20)


def test_zero_dimensional_rows():
    assert solve_rows(0, (), [()], [F(0)]).value == 0
    assert solve_rows(0, (), [()], [F(1)]).status is LpStatus.INFEASIBLE


def test_dimension_checks():
    with pytest.raises(DimensionMismatchError):
        lp([1, 2], [[1]], [0])
    with pytest.raises(DimensionMismatchError):
        solve_rows(2, (F(1),), [], [])
    with pytest.raises(DimensionMismatchError):
        Polyhedron.box([0], [1]).contains((0, 0))


def test_box_vertices():
    P = Polyhedron.box([0, 0], [1, 2])
    assert enumerate_vertices(P) == [(0, 0), (0, 2), (1, 0), (1, 2)]
    assert P.contains((F(1, 2), 2)) and not P.contains((2, 0))


def test_empty_and_unbounded_vertices():
    empty = Polyhedron.of(mat([[1], [-1]]), vec([1, 0]))
    assert enumerate_vertices(empty) == []
    assert not is_feasible(empty)
    ray = Polyhedron.of(mat([[1]]), vec([0]))
    with pytest.raises(UnboundedPolyhedronError):
        enumerate_vertices(ray)
    assert basic_feasible_points(ray) == [(0,)]


def test_recession_cone():
    assert recession_cone_is_trivial(mat([[1], [-1]]))
    assert not recession_cone_is_trivial(mat([[1, 0], [-1, 0]]))
    assert recession_cone_is_trivial((), 0)


def _random_problem(rng, bounded):
    n = rng.randint(1, 4)
    rq = lambda: F(rng.randint(-5, 5), rng.choice((1, 1, 2, 3)))
    G = [[rq() for _ in range(n)] for _ in range(rng.randint(0, 6))]
    h = [rq() for _ in G]
    if bounded:
        for j in range(n):
            for s in (1, -1):
                G.append([F(s) if k == j else F(0) for k in range(n)])
                h.append(F(-rng.randint(1, 4)))
    E = [[rq() for _ in range(n)] for _ in range(rng.randint(0, 2))]
    g = [rq() for _ in E]
    sense = rng.choice(list(Sense))
    return lp([rq() for _ in range(n)], G, h, E, g, sense)


@given(st.integers(0, 10**9), st.booleans())
def test_certificates_always_verify(seed, bounded):
    p = _random_problem(random.Random(seed), bounded)
    sol = solved(p)
    if bounded:
        assert sol.status is not LpStatus.UNBOUNDED


@given(st.integers(0, 10**9))
def test_solver_is_deterministic(seed):
    p = _random_problem(random.Random(seed), True)
    assert solve_lp(p) == solve_lp(p)


@given(st.integers(0, 10**9))
def test_vertex_enumeration_agrees_with_lp(seed):
    rng = random.Random(seed)
    p = _random_problem(rng, True)
    P = p.feasible_set
    sol = solve_lp(LpProblem(p.sense, p.objective, P))
    verts = enumerate_vertices(P)
    if not sol.optimal:
        assert verts == []
        return
    best = (min if p.sense is Sense.MINIMIZE else max)(dot(p.objective, v) for v in verts)
    assert best == sol.value
    assert all(P.contains(v) for v in verts)


@given(st.lists(st.tuples(rationals(), rationals()), min_size=1, max_size=3))
def test_box_contains_its_corners(bounds):
    lower = [min(a, b) for a, b in bounds]
    upper = [max(a, b) for a, b in bounds]
    P = Polyhedron.box(lower, upper)
    assert P.contains(tuple(lower)) and P.contains(tuple(upper))
