import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from linbilevel import corpus, instance_io, oracle
from linbilevel.lp import LpStatus, Polyhedron
from linbilevel.model import ProblemClass, check_pc_feasible, evaluate_leader
from linbilevel.oracle import BilevelSolution, minimal_valid_patterns
from linbilevel.rational import mat, vec

F = Fraction


@pytest.mark.parametrize(
    "name, x, value",
    [
        ("E1", (1,), 1),
        ("E2", (0,), 0),
        ("E3-opt", (1,), -1),
        ("E3-pess", (1,), -1),
        ("E4", (1,), 1),
        ("E1-pess-obj", None, 1),
        ("E1-opt", None, 0),
        ("m0", (F(1, 4),), F(1, 4)),
    ],
)
def test_corpus_optima(name, x, value):
    p = corpus.ALL[name]()
    sol = oracle.solve(p)
    assert sol.optimal and sol.value == value
    if x is not None:
        assert sol.x == x
    assert evaluate_leader(p, sol.x) == value
    assert not oracle.falsify(p, sol, 200, 0)


def test_unsatisfiable_coupling_is_infeasible():
    assert oracle.solve(corpus.unsatisfiable_coupling()).status is LpStatus.INFEASIBLE


def test_e1_witness_is_the_worst_response():
    sol = oracle.solve(corpus.e1())
    assert sol.witness_y == (0,)


def test_falsifier_catches_a_wrong_claim():
    p = corpus.e3_opt()
    wrong = BilevelSolution(LpStatus.OPTIMAL, (0,), (0,), F(-1, 2))
    assert oracle.falsify(p, wrong, 100, 0)
    assert not oracle.falsify(p, oracle.INFEASIBLE, 100, 0)


def test_class_guards():
    with pytest.raises(ValueError):
        oracle.solve_optimistic(corpus.e1())
    with pytest.raises(ValueError):
        oracle.solve_pessimistic_nc(corpus.e2())
    with pytest.raises(ValueError):
        oracle.solve_pessimistic_cc(corpus.e3_opt())


def test_minimal_patterns_box():
    D = mat([[1], [-1]])
    assert minimal_valid_patterns(D, (), vec([1])) == ((0,),)
    assert minimal_valid_patterns(D, (), vec([-1])) == ((1,),)
    assert minimal_valid_patterns(D, (), vec([0])) == ((),)


def test_max_on_optimal_set():
    # E1-opt: min y over y in [0, 1] for every x in [0, 1]; optimal value 0 at y = 0
    p = corpus.e1_opt()
    assert oracle.max_on_optimal_set(p, F(0), vec([1, 0])) == 1
    assert oracle.max_on_optimal_set(p, F(0), vec([0, 1])) == 0


def test_sample_points_stay_inside():
    P = Polyhedron.box([0, -1], [2, 3])
    pts = oracle.sample_points(P, 50, random.Random(3))
    assert len(pts) == 50 and all(P.contains(z) for z in pts)
    assert oracle.sample_points(Polyhedron.box([1], [0]), 5, random.Random(0)) == []


def test_sample_points_on_unbounded_set():
    P = Polyhedron.of(mat([[1, 0], [0, 1]]), vec([0, 0]))
    pts = oracle.sample_points(P, 30, random.Random(1))
    assert all(P.contains(z) for z in pts)


def test_coupling_row_check_e1():
    p = corpus.e1()
    assert oracle.check_coupling_row(p, (1,), 0) == (True, True)
    assert oracle.check_coupling_row(p, (F(1, 2),), 0) == (False, False)
    assert oracle.check_joint_rows(p, (F(1, 2),)) == (False, False)
    with pytest.raises(IndexError):
        oracle.check_coupling_row(p, (1,), 3)


instances = st.tuples(
    st.sampled_from([k.value for k in ProblemClass]),
    st.integers(0, 10**6),
    st.integers(1, 2),
    st.integers(1, 2),
    st.integers(0, 2),
    st.integers(1, 2),
)


def _gen(kind, seed, nx, ny, extra, m):
    return instance_io.generate(seed, nx, ny, 2 * ny + extra, m if ProblemClass(kind).coupled else 0, kind)


@given(instances)
def test_oracle_value_is_attained_and_unbeaten(args):
    p = _gen(*args)
    sol = oracle.solve(p)
    assert sol.optimal  # generated instances are feasible at the anchor corner
    assert evaluate_leader(p, sol.x) == sol.value
    if p.kind is ProblemClass.PESS_CC:
        assert check_pc_feasible(p, sol.x)
    assert not oracle.falsify(p, sol, 60, args[1])


@given(instances)
def test_oracles_are_deterministic(args):
    p = _gen(*args)
    assert oracle.solve(p) == oracle.solve(p)


@given(instances, st.integers(0, 10**6))
def test_row_check_forms_agree(args, sample_seed):
    kind, *rest = args
    p = _gen("pess_cc", *rest)
    for x in oracle.sample_points(p.X, 5, random.Random(sample_seed)):
        for i in range(p.m):
            direct, exist = oracle.check_coupling_row(p, x, i)
            assert direct == exist
        a, b = oracle.check_joint_rows(p, x)
        assert a == b
