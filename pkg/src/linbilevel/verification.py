"""End-to-end verification of every reformulation arc on one instance."""

from __future__ import annotations

import os
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction

from . import oracle
from .kappa import KappaCertificate, NoValidKappa, search_kappa, validate_kappa
from .model import (
    BilevelProblem,
    ProblemClass,
    check_pc_feasible,
    evaluate_leader,
    optimistic_inner,
    pessimistic_inner,
)
from .rational import dot
from .reform import (
    ReformTrace,
    Transform,
    compose_projections,
    epigraph_normalize,
    eps_penalize,
    opt_cc_to_opt_nc,
    opt_nc_to_eps_aux,
    opt_to_pess_swap,
    pess_cc_to_opt_cc,
)

CHECKS = ("row_equivalence", "joint_equivalence", "stacked_follower", "penalty_equivalence", "inner_agreement", "eps_equivalence", "chain_values", "falsifier")


def default_samples() -> dict:
    return dict(
        row=int(os.environ.get("LINBILEVEL_ROW_SAMPLES", 50)),
        inner=int(os.environ.get("LINBILEVEL_INNER_SAMPLES", 100)),
        falsifier=int(os.environ.get("LINBILEVEL_FALSIFY_SAMPLES", 1000)),
    )


def _s(v):
    return None if v is None else str(v)


@dataclass
class Stage:
    name: str
    problem: BilevelProblem
    solution: oracle.BilevelSolution
    seconds: float

    def to_dict(self) -> dict:
        p, sol = self.problem, self.solution
        return {
            "name": self.name,
            "kind": p.kind.value,
            "nx": p.nx,
            "ny": p.ny,
            "m_lower": p.m_lower,
            "m": p.m,
            "status": sol.status.value,
            "value": _s(sol.value),
            "x": None if sol.x is None else [str(v) for v in sol.x],
            "seconds": round(self.seconds, 4),
        }


@dataclass
class VerificationReport:
    instance: str
    kind: str
    seed: int
    stages: list = field(default_factory=list)
    kappas: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures and all(v is not False for v in self.checks.values())

    def fail(self, check: str, why: str):
        self.checks[check] = False
        self.failures.append(f"{check}: {why}")

    def set(self, check: str, ok: bool, why: str = ""):
        if ok:
            self.checks.setdefault(check, True)
        else:
            self.fail(check, why or "check failed")

    def to_dict(self) -> dict:
        return {
            "instance": self.instance,
            "kind": self.kind,
            "seed": self.seed,
            "passed": self.passed,
            "stages": [s.to_dict() for s in self.stages],
            "kappas": self.kappas,
            "checks": {k: self.checks.get(k) for k in CHECKS},
            "failures": self.failures,
        }

    def render(self) -> str:
        lines = [f"instance {self.instance} ({self.kind})  {'PASS' if self.passed else 'FAIL'}"]
        for s in self.stages:
            d = s.to_dict()
            lines.append(
                f"  stage {d['name']:<18} {d['kind']:<8} nx={d['nx']} ny={d['ny']} rows={d['m_lower']} m={d['m']}"
                f"  value={d['value']}  ({d['seconds']:.3f}s)"
            )
        for k in self.kappas:
            lines.append(f"  kappa {k['transform']:<13} {k['kappa']}  valid={k['valid']}")
        for name in CHECKS:
            v = self.checks.get(name)
            mark = "n/a" if v is None else ("pass" if v else "FAIL")
            lines.append(f"  check {name:<13} {mark}")
        for f in self.failures:
            lines.append(f"  ! {f}")
        return "\n".join(lines)


class _Run:
    def __init__(self, report: VerificationReport, samples: dict, kappas: dict):
        self.report = report
        self.samples = samples
        self.fixed_kappas = kappas
        self.rng = random.Random(report.seed)

    def stage(self, name, p) -> Stage:
        t = time.perf_counter()
        sol = oracle.solve(p)
        st = Stage(name, p, sol, time.perf_counter() - t)
        self.report.stages.append(st)
        return st

    def kappa(self, source: BilevelProblem, transform: Transform) -> Fraction | None:
        rep = self.report
        check = "penalty_equivalence" if transform is Transform.PENALTY_LIFT else "eps_equivalence"
        fixed = self.fixed_kappas.get(transform)
        if fixed is None:
            try:
                cert = search_kappa(source, transform)
            except NoValidKappa as exc:
                rep.fail(check, f"kappa search failed: {exc}")
                rep.kappas.append({"transform": transform.value, "kappa": None, "valid": False})
                return None
        else:
            cert = KappaCertificate(Fraction(fixed), transform, Fraction(0), Fraction(0), 0)
        valid = validate_kappa(cert, source)
        rep.kappas.append(
            {
                "transform": transform.value,
                "kappa": str(cert.kappa),
                "iterations": cert.iterations,
                "searched": fixed is None,
                "valid": valid,
            }
        )
        if not valid:
            rep.fail(check, f"kappa {cert.kappa} invalid for {transform.value}")
        return cert.kappa


def verify_problem(p: BilevelProblem, seed: int = 0, samples: dict | None = None, kappas: dict | None = None):
    samples = {**default_samples(), **(samples or {})}
    report = VerificationReport(p.name or "<unnamed>", p.kind.value, seed)
    run = _Run(report, samples, kappas or {})
    source = p
    if p.kind is ProblemClass.PESS_NC:
        s_nc = run.stage("pess_nc", p)
        epi = epigraph_normalize(p)
        s_epi = run.stage("epigraph", epi.target)
        report.set("chain_values", s_nc.solution.value == s_epi.solution.value, "epigraph changed the value")
        _verify_pess_cc(run, epi.target, s_epi)
    elif p.kind is ProblemClass.PESS_CC:
        _verify_pess_cc(run, p)
    elif p.kind is ProblemClass.OPT_CC:
        top = run.stage("opt_cc", p)
        _verify_from_opt_cc(run, p, top, [])
    else:
        top = run.stage("opt_nc", p)
        _verify_from_opt_nc(run, p, top, [])
    _falsifier(run, source, report.stages[0].solution)
    return report


def _falsifier(run: _Run, p: BilevelProblem, sol):
    n = run.samples["falsifier"]
    if not sol.optimal:
        run.report.checks.setdefault("falsifier", None)
        return
    hit = oracle.falsify(p, sol, n, run.report.seed)
    run.report.set("falsifier", not hit, f"a sampled point beats value {sol.value}")


def _verify_pess_cc(run: _Run, p: BilevelProblem, top: Stage | None = None):
    rep = run.report
    n = run.samples["row"]
    row_ok = joint_ok = True
    for x in oracle.sample_points(p.X, n, run.rng):
        for i in range(p.m):
            direct, exist = oracle.check_coupling_row(p, x, i)
            row_ok &= direct == exist
        a, b = oracle.check_joint_rows(p, x)
        joint_ok &= a == b
    rep.set("row_equivalence", row_ok, "direct and existence checks disagree")
    rep.set("joint_equivalence", joint_ok, "check_pc_feasible disagrees with the shared-ybar form")

    if top is None:
        top = run.stage("pess_cc", p)
    t1 = pess_cc_to_opt_cc(p)
    s1 = run.stage("opt_cc", t1.target)
    v0, v1 = top.solution.value, s1.solution.value
    ok = v0 == v1 and top.solution.status == s1.solution.status
    if ok and s1.solution.optimal:
        x = t1.project(s1.solution.x)
        ok = check_pc_feasible(p, x) and dot(p.c, x) == v0
    rep.set("stacked_follower", ok, f"pess_cc value {v0} vs stacked opt_cc value {v1}")
    if not s1.solution.optimal:
        rep.fail("chain_values", f"opt_cc stage is {s1.solution.status.value}")
        return
    _verify_from_opt_cc(run, t1.target, s1, [t1])


def _verify_from_opt_cc(run: _Run, p: BilevelProblem, top: Stage, traces: list):
    rep = run.report
    kappa = run.kappa(p, Transform.PENALTY_LIFT)
    if kappa is None:
        return
    t2 = opt_cc_to_opt_nc(p, kappa)
    s2 = run.stage("opt_nc", t2.target)
    ok = s2.solution.optimal and s2.solution.value == top.solution.value
    if ok:
        ok = evaluate_leader(p, s2.solution.x) == top.solution.value
    rep.set("penalty_equivalence", ok, f"penalized value {s2.solution.value} vs coupled value {top.solution.value}")
    if not s2.solution.optimal:
        return
    _verify_from_opt_nc(run, t2.target, s2, traces + [t2])


def _verify_from_opt_nc(run: _Run, p: BilevelProblem, top: Stage, traces: list):
    rep = run.report
    t3 = opt_nc_to_eps_aux(p)
    s3 = run.stage("eps_aux", t3.target)
    kappa = run.kappa(t3.target, Transform.EPS_PENALIZE)
    if kappa is None:
        return
    t4 = eps_penalize(t3, kappa)
    s4 = run.stage("eps_penalize", t4.target)
    t5 = opt_to_pess_swap(t4)
    s5 = run.stage("pess_swap", t5.target)

    v = top.solution.value
    ok = s3.solution.value == v and s4.solution.value == v and s5.solution.value == v
    if ok and s5.solution.optimal:
        x = compose_projections([t3, t4, t5])
        ok = evaluate_leader(p, tuple(s5.solution.x[i] for i in x)) == v
    rep.set("eps_equivalence", ok, f"opt_nc value {v}, eps stages {s3.solution.value}/{s4.solution.value}/{s5.solution.value}")

    inner_ok = True
    pen = t4.target
    for z in oracle.sample_points(pen.X, run.samples["inner"], run.rng):
        lo = optimistic_inner(pen, z, pen.d)
        hi = pessimistic_inner(pen, z, pen.d)
        inner_ok &= lo == hi
    rep.set("inner_agreement", inner_ok, "inner min and inner max differ at a sampled point")

    values = {s.solution.value for s in rep.stages}
    rep.set("chain_values", len(values) == 1, f"stage values differ: {sorted(map(str, values))}")
    all_traces = traces + [t3, t4, t5]
    _check_projection(run, all_traces, s5)


def _check_projection(run: _Run, traces: list[ReformTrace], last: Stage):
    rep = run.report
    original = traces[0].source
    if not last.solution.optimal:
        return
    z = last.solution.x
    x = tuple(z[i] for i in compose_projections(traces))
    v0 = rep.stages[0].solution.value
    if original.kind is ProblemClass.PESS_CC:
        ok = check_pc_feasible(original, x) and dot(original.c, x) == v0
    else:
        ok = evaluate_leader(original, x) == v0
    rep.set("chain_values", ok, "final optimum does not project onto an optimum of the source")
