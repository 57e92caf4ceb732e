"""Hand-derived instances with known optima.

E1   pess_cc  X=[0,1], follower min 0 s.t. 0<=y<=1, coupling x+y>=1, leader min x.
             Every y in [0,1] is optimal, so y=0 must satisfy the row: x*=1, value 1.
E2   opt_cc   X=[0,1], follower min -y s.t. 0<=y<=1 so S(x)={1}, coupling x+y<=1,
             leader min -x: only x=0 is feasible, value 0.
E3   opt_nc   X=[0,1], follower min y s.t. x<=y<=2 so S(x)={x}, leader min -y:
             x*=1, value -1.  The slack between the follower's upper bound and X
             is what makes small penalty parameters fail on the ε-stage.
E4   pess_cc  E1 with its coupling row listed twice.
"""

from __future__ import annotations

from .lp import Polyhedron
from .model import BilevelProblem, CouplingBlock, LowerLevel, ProblemClass
from .rational import mat, vec

UNIT_INTERVAL = Polyhedron.box([0], [1])

_BOX_FOLLOWER = dict(C=mat([[0], [0]]), D=mat([[1], [-1]]), b=vec([0, -1]))


def e1() -> BilevelProblem:
    return BilevelProblem(
        ProblemClass.PESS_CC,
        1,
        1,
        vec([1]),
        UNIT_INTERVAL,
        LowerLevel(f=vec([0]), **_BOX_FOLLOWER),
        coupling=CouplingBlock(mat([[1]]), mat([[1]]), vec([1])),
        name="E1",
    )


def e1_pess_obj() -> BilevelProblem:
    return BilevelProblem(
        ProblemClass.PESS_NC,
        1,
        1,
        vec([0]),
        UNIT_INTERVAL,
        LowerLevel(f=vec([0]), **_BOX_FOLLOWER),
        d=vec([1]),
        name="E1-pess-obj",
    )


def e1_opt() -> BilevelProblem:
    return BilevelProblem(
        ProblemClass.OPT_NC,
        1,
        1,
        vec([0]),
        UNIT_INTERVAL,
        LowerLevel(f=vec([0]), **_BOX_FOLLOWER),
        d=vec([1]),
        name="E1-opt",
    )


def e2() -> BilevelProblem:
    return BilevelProblem(
        ProblemClass.OPT_CC,
        1,
        1,
        vec([-1]),
        UNIT_INTERVAL,
        LowerLevel(f=vec([-1]), **_BOX_FOLLOWER),
        d=vec([0]),
        coupling=CouplingBlock(mat([[-1]]), mat([[-1]]), vec([-1])),
        name="E2",
    )


def _e3_follower() -> LowerLevel:
    # y - x >= 0, -y >= -2
    return LowerLevel(f=vec([1]), C=mat([[-1], [0]]), D=mat([[1], [-1]]), b=vec([0, -2]))


def e3_opt() -> BilevelProblem:
    return BilevelProblem(
        ProblemClass.OPT_NC, 1, 1, vec([0]), UNIT_INTERVAL, _e3_follower(), d=vec([-1]), name="E3-opt"
    )


def e3_pess() -> BilevelProblem:
    return BilevelProblem(
        ProblemClass.PESS_NC, 1, 1, vec([0]), UNIT_INTERVAL, _e3_follower(), d=vec([-1]), name="E3-pess"
    )


def e4() -> BilevelProblem:
    return BilevelProblem(
        ProblemClass.PESS_CC,
        1,
        1,
        vec([1]),
        UNIT_INTERVAL,
        LowerLevel(f=vec([0]), **_BOX_FOLLOWER),
        coupling=CouplingBlock(mat([[1], [1]]), mat([[1], [1]]), vec([1, 1])),
        name="E4",
    )


def unsatisfiable_coupling() -> BilevelProblem:
    """E2's data with the coupling row replaced by ``0 x + 0 y >= 1``."""
    return BilevelProblem(
        ProblemClass.OPT_CC,
        1,
        1,
        vec([-1]),
        UNIT_INTERVAL,
        LowerLevel(f=vec([-1]), **_BOX_FOLLOWER),
        d=vec([0]),
        coupling=CouplingBlock(mat([[0]]), mat([[0]]), vec([1])),
        name="unsat-coupling",
    )


def m0_pess_cc() -> BilevelProblem:
    """pess_cc with an empty coupling block: min x over X=[0,1] with a box follower."""
    return BilevelProblem(
        ProblemClass.PESS_CC,
        1,
        1,
        vec([1]),
        Polyhedron.box([vec(["1/4"])[0]], [1]),
        LowerLevel(f=vec([1]), **_BOX_FOLLOWER),
        coupling=CouplingBlock((), (), ()),
        name="m0",
    )


ALL = {
    "E1": e1,
    "E1-pess-obj": e1_pess_obj,
    "E1-opt": e1_opt,
    "E2": e2,
    "E3-opt": e3_opt,
    "E3-pess": e3_pess,
    "E4": e4,
    "unsat-coupling": unsatisfiable_coupling,
    "m0": m0_pess_cc,
}
