"""Certified penalty parameters for the two penalty-based transforms."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .model import BilevelProblem, ProblemClass, evaluate_leader
from .oracle import max_on_optimal_set, solve_optimistic
from .reform import ReformError, Transform, opt_cc_to_opt_nc, penalize_eps_problem
from .rational import q, unit

MAX_DOUBLINGS = 64


class NoValidKappa(ReformError):
    def __init__(self, message, last_slack=None, kappa=None):
        super().__init__(message)
        self.last_slack = last_slack
        self.kappa = kappa


@dataclass(frozen=True)
class KappaCertificate:
    kappa: Fraction
    transform: Transform
    witness_value: Fraction
    slack_at_optimum: Fraction
    iterations: int


def penalized_problem(source: BilevelProblem, transform: Transform, kappa) -> BilevelProblem:
    if transform is Transform.PENALTY_LIFT:
        return opt_cc_to_opt_nc(source, kappa).target
    if transform is Transform.EPS_PENALIZE:
        return penalize_eps_problem(source, kappa)
    raise ReformError(f"{transform.value} has no penalty parameter")


@dataclass(frozen=True)
class _Probe:
    kappa: Fraction
    value: Fraction | None
    x: tuple | None
    slack: Fraction | None  # largest eps over the penalized optimal set

    @property
    def clean(self) -> bool:
        return self.value is not None and self.slack == 0


def _probe(source, transform, kappa) -> _Probe:
    target = penalized_problem(source, transform, kappa)
    sol = solve_optimistic(target)
    if not sol.optimal:
        return _Probe(kappa, None, None, None)
    # eps is the last follower variable in both penalized forms
    weights = unit(target.nx + target.ny, target.nx + target.ny - 1)
    slack = max_on_optimal_set(target, sol.value, weights)
    return _Probe(kappa, sol.value, sol.x, slack)


def _check_source(source: BilevelProblem, transform: Transform):
    if source.kind is not ProblemClass.OPT_CC:
        raise ReformError(f"{transform.value} expects an opt_cc source, got {source.kind.value}")


def search_kappa(source: BilevelProblem, transform: Transform, max_doublings: int = MAX_DOUBLINGS) -> KappaCertificate:
    """Smallest ``kappa = 2**k`` whose penalized optimum has zero slack and is stable under doubling.

    For :attr:`Transform.EPS_PENALIZE` the source is the ε-auxiliary problem.
    """
    _check_source(source, transform)
    kappa = Fraction(1)
    cur = _probe(source, transform, kappa)
    for k in range(max_doublings + 1):
        nxt = _probe(source, transform, 2 * kappa)
        if cur.clean and nxt.clean and cur.value == nxt.value:
            return KappaCertificate(kappa, transform, cur.value, cur.slack, k + 1)
        if k == max_doublings:
            break
        kappa *= 2
        cur = nxt
    raise NoValidKappa(
        f"no valid kappa up to 2**{max_doublings}; last slack {cur.slack}",
        last_slack=cur.slack,
        kappa=kappa,
    )


def validate_kappa(cert: KappaCertificate, source: BilevelProblem) -> bool:
    kappa = q(cert.kappa)
    if kappa <= 0:
        return False
    a = _probe(source, cert.transform, kappa)
    b = _probe(source, cert.transform, 2 * kappa)
    if not (a.clean and b.clean and a.value == b.value):
        return False
    return evaluate_leader(source, a.x) == a.value
