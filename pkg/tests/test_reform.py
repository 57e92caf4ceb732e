import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from linbilevel import corpus, instance_io, oracle
from linbilevel.model import ProblemClass, evaluate_leader
from linbilevel.reform import (
    KappaParameterError,
    ReformError,
    ReformTrace,
    Transform,
    compose_projections,
    epigraph_normalize,
    eps_penalize,
    full_chain,
    opt_cc_to_opt_nc,
    opt_nc_to_eps_aux,
    opt_to_pess_swap,
    pess_cc_to_opt_cc,
)

F = Fraction

gen_sizes = st.tuples(
    st.integers(0, 10**6),
    st.integers(1, 2),
    st.integers(1, 2),
    st.integers(0, 2),
    st.integers(0, 2),
)


def generated(kind, seed, nx, ny, extra, m):
    return instance_io.generate(seed, nx, ny, 2 * ny + extra, m if ProblemClass(kind).coupled else 0, kind)


def test_stacked_follower_sizes_e1():
    t = pess_cc_to_opt_cc(corpus.e1())
    p = t.target
    assert p.kind is ProblemClass.OPT_CC
    assert (p.nx, p.ny, p.m_lower, p.m) == (2, 1, 3, 1)
    assert t.x_projection == (0,)
    assert t.project((F(1), F(0))) == (1,)


def test_stacked_follower_sizes_e4():
    p = pess_cc_to_opt_cc(corpus.e4()).target
    assert (p.nx, p.ny, p.m_lower, p.m) == (2, 2, 6, 2)


def test_empty_coupling_note():
    t = pess_cc_to_opt_cc(corpus.m0_pess_cc())
    assert t.target.ny == 0 and t.notes
    assert oracle.solve(t.target).value == F(1, 4)


def test_penalty_lift_shape_e2():
    t = opt_cc_to_opt_nc(corpus.e2(), 2)
    p = t.target
    assert p.kind is ProblemClass.OPT_NC and p.coupling is None
    assert (p.nx, p.ny, p.m_lower) == (1, 2, 4)
    assert p.d == (0, 2) and t.kappa == 2


def test_eps_aux_shape_e3():
    t = opt_nc_to_eps_aux(corpus.e3_opt())
    p = t.target
    assert p.kind is ProblemClass.OPT_CC
    assert (p.nx, p.ny, p.m_lower, p.m) == (2, 2, 3, 2)
    assert len(p.lower.b_eq) == 1
    assert p.c == (0, -1)


def test_swap_only_changes_the_class():
    t4 = eps_penalize(opt_nc_to_eps_aux(corpus.e3_opt()), 2)
    t5 = opt_to_pess_swap(t4)
    assert t5.target.kind is ProblemClass.PESS_NC
    assert t5.target.lower == t4.target.lower and t5.target.d == t4.target.d


def test_epigraph_shape():
    t = epigraph_normalize(corpus.e1_pess_obj())
    p = t.target
    assert p.kind is ProblemClass.PESS_CC and p.nx == 2 and p.m == 1
    assert oracle.solve(p).value == 1


@pytest.mark.parametrize(
    "fn, name",
    [
        (pess_cc_to_opt_cc, "E2"),
        (opt_nc_to_eps_aux, "E1"),
        (epigraph_normalize, "E1"),
        (epigraph_normalize, "E3-opt"),
        (full_chain, "E2"),
    ],
)
def test_wrong_source_class(fn, name):
    with pytest.raises(ReformError):
        fn(corpus.ALL[name]())


@pytest.mark.parametrize("kappa", [0, -1, "-1/2"])
def test_nonpositive_kappa(kappa):
    with pytest.raises(KappaParameterError):
        opt_cc_to_opt_nc(corpus.e2(), kappa)


def test_trace_rejects_bad_projection():
    p = corpus.e1()
    with pytest.raises(ReformError):
        ReformTrace(p, p, Transform.PESS_CC_TO_OPT_CC, (0, 0))
    with pytest.raises(ReformError):
        ReformTrace(p, p, Transform.PESS_CC_TO_OPT_CC, (5,))


def test_full_chain_e1():
    traces = full_chain(corpus.e1())
    assert [t.transform for t in traces] == [
        Transform.PESS_CC_TO_OPT_CC,
        Transform.PENALTY_LIFT,
        Transform.EPS_AUX,
        Transform.EPS_PENALIZE,
        Transform.OPT_TO_PESS_SWAP,
    ]
    assert [t.kappa for t in traces[1:2] + traces[3:4]] == [2, 2]
    values = [oracle.solve(traces[0].source).value] + [oracle.solve(t.target).value for t in traces]
    assert values == [1] * 6
    last = oracle.solve(traces[-1].target)
    x = tuple(last.x[i] for i in compose_projections(traces))
    assert x == (1,)


def test_transforms_do_not_mutate_source():
    p = corpus.e1()
    before = repr(p)
    full_chain(p)
    assert repr(p) == before


@given(gen_sizes)
def test_stacked_sizes(args):
    seed, nx, ny, extra, m = args
    p = generated("pess_cc", seed, nx, ny, extra, m)
    t = pess_cc_to_opt_cc(p).target
    assert t.nx == p.nx + p.ny
    assert t.ny == p.m * p.ny
    assert t.m_lower == p.m * (p.m_lower + 1)
    assert t.m == p.m


@given(gen_sizes)
def test_penalty_and_eps_sizes(args):
    seed, nx, ny, extra, m = args
    p = generated("opt_cc", seed, nx, ny, extra, m)
    t2 = opt_cc_to_opt_nc(p, 1).target
    assert (t2.nx, t2.ny, t2.m_lower) == (p.nx, p.ny + 1, p.m + p.m_lower + 1)
    t3 = opt_nc_to_eps_aux(t2).target
    assert (t3.nx, t3.ny, t3.m_lower, t3.m) == (t2.nx + t2.ny, t2.ny + 1, t2.m_lower + 1, 2)


@given(gen_sizes, st.integers(0, 10**6))
def test_lifted_points_keep_their_value(args, sample_seed):
    seed, nx, ny, extra, m = args
    rng = random.Random(sample_seed)
    p = generated("pess_cc", seed, nx, ny, extra, m)
    t = pess_cc_to_opt_cc(p)
    for x in oracle.sample_points(p.X, 4, rng):
        assert evaluate_leader(t.target, oracle.lift_point(t, x)) == evaluate_leader(p, x)
    q = generated("opt_nc", seed, nx, ny, extra, 0)
    t = opt_nc_to_eps_aux(q)
    for x in oracle.sample_points(q.X, 4, rng):
        assert evaluate_leader(t.target, oracle.lift_point(t, x)) == evaluate_leader(q, x)
