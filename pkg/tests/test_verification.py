from fractions import Fraction

import pytest

from linbilevel import corpus
from linbilevel.reform import Transform
from linbilevel.verification import CHECKS, verify_problem

SMALL = dict(row=10, inner=10, falsifier=100)


@pytest.mark.parametrize("name", ["E1", "E4", "m0", "E1-pess-obj", "E3-pess"])
def test_pessimistic_instances_pass_every_check(name):
    rep = verify_problem(corpus.ALL[name](), samples=SMALL)
    assert rep.passed, rep.failures
    assert all(rep.checks[c] is True for c in CHECKS)


@pytest.mark.parametrize("name, skipped", [("E2", {"row_equivalence", "joint_equivalence", "stacked_follower"}),
                                           ("E3-opt", {"row_equivalence", "joint_equivalence", "stacked_follower", "penalty_equivalence"})])
def test_optimistic_instances_skip_upstream_checks(name, skipped):
    rep = verify_problem(corpus.ALL[name](), samples=SMALL)
    d = rep.to_dict()
    assert rep.passed
    assert {k for k, v in d["checks"].items() if v is None} == skipped


def test_e1_report_contents():
    d = verify_problem(corpus.e1(), samples=SMALL).to_dict()
    assert [s["name"] for s in d["stages"]] == ["pess_cc", "opt_cc", "opt_nc", "eps_aux", "eps_penalize", "pess_swap"]
    assert {s["value"] for s in d["stages"]} == {"1"}
    assert [(k["transform"], k["kappa"]) for k in d["kappas"]] == [("penalty_lift", "2"), ("eps_penalize", "2")]


def test_fixed_invalid_kappa_fails_eps_equivalence():
    rep = verify_problem(corpus.e3_opt(), samples=SMALL, kappas={Transform.EPS_PENALIZE: Fraction(1, 2)})
    assert not rep.passed and rep.checks["eps_equivalence"] is False


def test_unsatisfiable_coupling_fails_in_kappa_search():
    rep = verify_problem(corpus.unsatisfiable_coupling(), samples=SMALL)
    assert not rep.passed
    assert rep.checks["penalty_equivalence"] is False
    assert "kappa search failed" in rep.failures[0]


def test_render_mentions_every_check():
    text = verify_problem(corpus.e2(), samples=SMALL).render()
    assert text.startswith("instance E2 (opt_cc)  PASS")
    assert all(c in text for c in CHECKS)
