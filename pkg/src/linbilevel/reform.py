"""Problem-to-problem reformulations between the four bilevel classes.

Every transform is a syntactic map: it builds the target problem's data
from the source's and records how source leader coordinates sit inside
the target's leader vector.  Nothing is solved here (the epigraph bounds
on ``t`` are the one exception, see :func:`epigraph_normalize`).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from fractions import Fraction

from .lp import Polyhedron, solve_rows
from .model import BilevelProblem, CouplingBlock, LowerLevel, ProblemClass
from .rational import RatVector, neg, q, zeros


class ReformError(ValueError):
    pass


class KappaParameterError(ReformError):
    pass


class Transform(enum.Enum):
    EPIGRAPH_NORMALIZE = "epigraph_normalize"
    PESS_CC_TO_OPT_CC = "pess_cc_to_opt_cc"
    PENALTY_LIFT = "penalty_lift"
    EPS_AUX = "eps_aux"
    EPS_PENALIZE = "eps_penalize"
    OPT_TO_PESS_SWAP = "opt_to_pess_swap"


@dataclass(frozen=True)
class ReformTrace:
    source: BilevelProblem
    target: BilevelProblem
    transform: Transform
    x_projection: tuple
    kappa: Fraction | None = None
    notes: tuple = ()

    def __post_init__(self):
        if len(self.x_projection) != self.source.nx:
            raise ReformError("projection length differs from the source leader dimension")
        if any(not 0 <= i < self.target.nx for i in self.x_projection):
            raise ReformError("projection index outside the target leader vector")

    def project(self, z) -> RatVector:
        return tuple(z[i] for i in self.x_projection)


def compose_projections(traces) -> tuple:
    """Indices of the first source's leader coordinates inside the last target's leader vector."""
    idx = None
    for t in reversed(traces):
        idx = list(t.x_projection) if idx is None else [idx[i] for i in t.x_projection]
    return tuple(idx)


def _pad(row, before, after):
    return (Fraction(0),) * before + tuple(row) + (Fraction(0),) * after


def _extended_domain(p: BilevelProblem) -> Polyhedron:
    """``{(x, ybar) : x in X, D ybar >= b - C x}`` (equality rows as pairs)."""
    nx, ny, low = p.nx, p.ny, p.lower
    G = [_pad(r, 0, ny) for r in p.X.G]
    h = list(p.X.h)
    G += [tuple(cr) + tuple(dr) for cr, dr in zip(low.C, low.D)]
    h += list(low.b)
    for cr, dr, be in zip(low.C_eq, low.D_eq, low.b_eq):
        G.append(tuple(cr) + tuple(dr))
        h.append(be)
        G.append(neg(tuple(cr) + tuple(dr)))
        h.append(-be)
    return Polyhedron(tuple(G), tuple(h), nx + ny)


def epigraph_normalize(p: BilevelProblem) -> ReformTrace:
    """Move ``d^T y`` into a leader variable ``t`` guarded by the row ``t - d^T y >= 0``.

    ``t`` is boxed by the min/max of ``d^T y`` over the joint feasible set,
    which keeps the leader set bounded without cutting off any optimum.
    """
    if p.d is None or not p.kind.pessimistic:
        raise ReformError("epigraph normalization needs a pessimistic problem with a d vector")
    nx, ny, low = p.nx, p.ny, p.lower
    joint_G = [_pad(r, 0, ny) for r in p.X.G] + [tuple(cr) + tuple(dr) for cr, dr in zip(low.C, low.D)]
    joint_h = list(p.X.h) + list(low.b)
    joint_E = [tuple(cr) + tuple(dr) for cr, dr in zip(low.C_eq, low.D_eq)]
    obj = zeros(nx) + tuple(p.d)
    bounds = []
    for maximize in (False, True):
        sol = solve_rows(nx + ny, obj, joint_G, joint_h, joint_E, low.b_eq, maximize=maximize)
        if not sol.optimal:
            raise ReformError(f"cannot bound d^T y over the joint feasible set ({sol.status.value})")
        bounds.append(sol.value)
    lo, hi = bounds
    G = [tuple(r) + (Fraction(0),) for r in p.X.G]
    h = list(p.X.h)
    G.append(zeros(nx) + (Fraction(1),))
    h.append(lo)
    G.append(zeros(nx) + (Fraction(-1),))
    h.append(-hi)
    X = Polyhedron(tuple(G), tuple(h), nx + 1)
    lowt = replace(
        low,
        C=tuple(tuple(r) + (Fraction(0),) for r in low.C),
        C_eq=tuple(tuple(r) + (Fraction(0),) for r in low.C_eq),
    )
    old = p.coupling
    A = tuple(tuple(r) + (Fraction(0),) for r in old.A) if old else ()
    B = old.B if old else ()
    a = old.a if old else ()
    coupling = CouplingBlock(
        A + (zeros(nx) + (Fraction(1),),),
        B + (neg(p.d),),
        a + (Fraction(0),),
    )
    target = BilevelProblem(
        ProblemClass.PESS_CC,
        nx + 1,
        ny,
        tuple(p.c) + (Fraction(1),),
        X,
        lowt,
        d=None,
        coupling=coupling,
        name=_derived_name(p, "epi"),
    )
    return ReformTrace(p, target, Transform.EPIGRAPH_NORMALIZE, tuple(range(nx)))


def pess_cc_to_opt_cc(p: BilevelProblem) -> ReformTrace:
    """Stack one follower copy per coupling row behind a leader-chosen reference point."""
    if p.kind is not ProblemClass.PESS_CC:
        raise ReformError(f"expected a pess_cc problem, got {p.kind.value}")
    nx, ny, m, low, cb = p.nx, p.ny, p.m, p.lower, p.coupling
    nyt = m * ny
    C, D, b = [], [], []
    Ce, De, be = [], [], []
    for i in range(m):
        before, after = i * ny, (m - i - 1) * ny
        for cr, dr, br in zip(low.C, low.D, low.b):
            C.append(_pad(cr, 0, ny))
            D.append(_pad(dr, before, after))
            b.append(br)
        # f^T ybar - f^T y^i >= 0
        C.append(zeros(nx) + tuple(low.f))
        D.append(_pad(neg(low.f), before, after))
        b.append(Fraction(0))
        for cr, dr, br in zip(low.C_eq, low.D_eq, low.b_eq):
            Ce.append(_pad(cr, 0, ny))
            De.append(_pad(dr, before, after))
            be.append(br)
    f = sum((tuple(cb.B[i]) for i in range(m)), ())
    lower = LowerLevel(tuple(f), tuple(C), tuple(D), tuple(b), tuple(Ce), tuple(De), tuple(be))
    coupling = CouplingBlock(
        tuple(_pad(cb.A[i], 0, ny) for i in range(m)),
        tuple(_pad(cb.B[i], i * ny, (m - i - 1) * ny) for i in range(m)),
        tuple(cb.a),
    )
    target = BilevelProblem(
        ProblemClass.OPT_CC,
        nx + ny,
        nyt,
        tuple(p.c) + zeros(ny),
        _extended_domain(p),
        lower,
        d=zeros(nyt),
        coupling=coupling,
        name=_derived_name(p, "optcc"),
    )
    notes = ("empty lower block: target is a single-level LP",) if m == 0 else ()
    return ReformTrace(p, target, Transform.PESS_CC_TO_OPT_CC, tuple(range(nx)), notes=notes)


def _positive_kappa(kappa) -> Fraction:
    kappa = q(kappa)
    if kappa <= 0:
        raise KappaParameterError(f"kappa must be positive, got {kappa}")
    return kappa


def opt_cc_to_opt_nc(p: BilevelProblem, kappa) -> ReformTrace:
    """Relax the coupling rows with one slack ``eps`` the leader pays ``kappa`` per unit for."""
    if p.kind is not ProblemClass.OPT_CC:
        raise ReformError(f"expected an opt_cc problem, got {p.kind.value}")
    kappa = _positive_kappa(kappa)
    nx, ny, low, cb = p.nx, p.ny, p.lower, p.coupling
    one, zero = Fraction(1), Fraction(0)
    C = list(cb.A) + list(low.C) + [zeros(nx)]
    D = [tuple(r) + (one,) for r in cb.B]
    D += [tuple(r) + (zero,) for r in low.D]
    D.append(zeros(ny) + (one,))
    b = list(cb.a) + list(low.b) + [zero]
    lower = LowerLevel(
        tuple(low.f) + (zero,),
        tuple(C),
        tuple(D),
        tuple(b),
        low.C_eq,
        tuple(tuple(r) + (zero,) for r in low.D_eq),
        low.b_eq,
    )
    target = BilevelProblem(
        ProblemClass.OPT_NC,
        nx,
        ny + 1,
        p.c,
        p.X,
        lower,
        d=tuple(p.d) + (kappa,),
        name=_derived_name(p, "optnc"),
    )
    return ReformTrace(p, target, Transform.PENALTY_LIFT, tuple(range(nx)), kappa=kappa)


def opt_nc_to_eps_aux(p: BilevelProblem) -> ReformTrace:
    """Let the leader propose ``ybar``; the follower reports its optimality gap as ``eps``."""
    if p.kind is not ProblemClass.OPT_NC:
        raise ReformError(f"expected an opt_nc problem, got {p.kind.value}")
    nx, ny, low = p.nx, p.ny, p.lower
    one, zero = Fraction(1), Fraction(0)
    C = [_pad(r, 0, ny) for r in low.C] + [zeros(nx + ny)]
    D = [tuple(r) + (zero,) for r in low.D] + [zeros(ny) + (one,)]
    b = list(low.b) + [zero]
    # f^T ybar - f^T y - eps = 0
    Ce = [zeros(nx) + tuple(low.f)] + [_pad(r, 0, ny) for r in low.C_eq]
    De = [neg(low.f) + (-one,)] + [tuple(r) + (zero,) for r in low.D_eq]
    be = [zero] + list(low.b_eq)
    lower = LowerLevel(tuple(low.f) + (zero,), tuple(C), tuple(D), tuple(b), tuple(Ce), tuple(De), tuple(be))
    eps = zeros(ny) + (one,)
    coupling = CouplingBlock((zeros(nx + ny), zeros(nx + ny)), (eps, neg(eps)), (zero, zero))
    target = BilevelProblem(
        ProblemClass.OPT_CC,
        nx + ny,
        ny + 1,
        tuple(p.c) + tuple(p.d),
        _extended_domain(p),
        lower,
        d=zeros(ny + 1),
        coupling=coupling,
        name=_derived_name(p, "epsaux"),
    )
    return ReformTrace(p, target, Transform.EPS_AUX, tuple(range(nx)))


def penalize_eps_problem(p: BilevelProblem, kappa) -> BilevelProblem:
    """The ε-auxiliary problem with its ``eps = 0`` row moved into the objective as ``kappa*eps``."""
    kappa = _positive_kappa(kappa)
    return BilevelProblem(
        ProblemClass.OPT_NC,
        p.nx,
        p.ny,
        p.c,
        p.X,
        p.lower,
        d=zeros(p.ny - 1) + (kappa,),
        name=_derived_name(p, "epspen"),
    )


def eps_penalize(t: ReformTrace, kappa) -> ReformTrace:
    if t.transform is not Transform.EPS_AUX:
        raise ReformError(f"expected an eps_aux trace, got {t.transform.value}")
    kappa = _positive_kappa(kappa)
    target = penalize_eps_problem(t.target, kappa)
    return ReformTrace(t.target, target, Transform.EPS_PENALIZE, tuple(range(t.target.nx)), kappa=kappa)


def opt_to_pess_swap(t: ReformTrace) -> ReformTrace:
    if t.transform is not Transform.EPS_PENALIZE:
        raise ReformError(f"expected an eps_penalize trace, got {t.transform.value}")
    target = replace(t.target, kind=ProblemClass.PESS_NC, name=_derived_name(t.target, "pess"))
    return ReformTrace(t.target, target, Transform.OPT_TO_PESS_SWAP, tuple(range(t.target.nx)), kappa=t.kappa)


def full_chain(p: BilevelProblem, kappas: tuple | None = None) -> list[ReformTrace]:
    """Run every arc from pess_cc down to pess_nc.

    ``kappas`` optionally fixes the two penalty parameters instead of
    searching for them; fixed values are used as given.
    """
    from .kappa import search_kappa

    if p.kind is not ProblemClass.PESS_CC:
        raise ReformError(f"expected a pess_cc problem, got {p.kind.value}")
    t1 = pess_cc_to_opt_cc(p)
    k1 = kappas[0] if kappas else search_kappa(t1.target, Transform.PENALTY_LIFT).kappa
    t2 = opt_cc_to_opt_nc(t1.target, k1)
    t3 = opt_nc_to_eps_aux(t2.target)
    k2 = kappas[1] if kappas else search_kappa(t3.target, Transform.EPS_PENALIZE).kappa
    t4 = eps_penalize(t3, k2)
    t5 = opt_to_pess_swap(t4)
    return [t1, t2, t3, t4, t5]


def _derived_name(p: BilevelProblem, suffix: str) -> str:
    return f"{p.name}/{suffix}" if p.name else suffix
