"""Command-line front end: ``linbilevel check|reformulate|solve|verify|generate``.

Exit codes: 0 pass, 1 semantic failure (infeasible, invalid, falsified),
2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import instance_io, oracle
from .kappa import KappaCertificate, NoValidKappa, search_kappa, validate_kappa
from .model import BilevelProblem, ProblemClass, check_standing_assumption
from .rational import RationalFormatError, format_rational, parse_rational
from .reform import (
    ReformError,
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
from .verification import verify_problem

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
TRACE_VERSION = 1

_T = Transform
# (from, to) -> arcs applied in order
ARCS = {
    ("pess_nc", "pess_cc"): (_T.EPIGRAPH_NORMALIZE,),
    ("pess_cc", "opt_cc"): (_T.PESS_CC_TO_OPT_CC,),
    ("opt_cc", "opt_nc"): (_T.PENALTY_LIFT,),
    ("opt_nc", "opt_cc"): (_T.EPS_AUX,),
    ("opt_nc", "pess_nc"): (_T.EPS_AUX, _T.EPS_PENALIZE, _T.OPT_TO_PESS_SWAP),
    ("opt_cc", "pess_nc"): (_T.PENALTY_LIFT, _T.EPS_AUX, _T.EPS_PENALIZE, _T.OPT_TO_PESS_SWAP),
    ("pess_cc", "opt_nc"): (_T.PESS_CC_TO_OPT_CC, _T.PENALTY_LIFT),
    ("pess_cc", "pess_nc"): (
        _T.PESS_CC_TO_OPT_CC,
        _T.PENALTY_LIFT,
        _T.EPS_AUX,
        _T.EPS_PENALIZE,
        _T.OPT_TO_PESS_SWAP,
    ),
}


class UsageError(Exception):
    pass


class SemanticFailure(Exception):
    pass


def _emit(args, human: str, payload: dict):
    if getattr(args, "json", False):
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(human)


def _load(path: str) -> BilevelProblem:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return instance_io.parse(text)


def _sizes(p: BilevelProblem) -> dict:
    return {"kind": p.kind.value, "nx": p.nx, "ny": p.ny, "m_lower": p.m_lower, "m": p.m}


def _vec(v):
    return None if v is None else [format_rational(x) for x in v]


# check ---------------------------------------------------------------------


def cmd_check(args) -> int:
    p = _load(args.path)
    rep = check_standing_assumption(p)
    payload = {
        "instance": p.name,
        "passed": rep.all_hold,
        "X_nonempty": rep.X_nonempty,
        "X_bounded": rep.X_bounded,
        "compact_for_all_x": rep.compact_for_all_x,
        "nonempty_for_all_x": rep.nonempty_for_all_x,
        "reasons": rep.reasons(),
    }
    lines = [f"{p.name or args.path}: {'OK' if rep.all_hold else 'FAILED'}"]
    lines += [f"  {r}" for r in rep.reasons()]
    _emit(args, "\n".join(lines), payload)
    return EXIT_OK if rep.all_hold else EXIT_FAIL


# reformulate ---------------------------------------------------------------


def _kappa_list(raw: str | None):
    if raw is None:
        return None
    try:
        return [parse_rational(tok.strip()) for tok in raw.split(",")]
    except RationalFormatError as exc:
        raise UsageError(f"--kappa: {exc}") from None


def _apply(transform: Transform, current: BilevelProblem, prev: ReformTrace | None, kappa) -> ReformTrace:
    if transform is _T.EPIGRAPH_NORMALIZE:
        return epigraph_normalize(current)
    if transform is _T.PESS_CC_TO_OPT_CC:
        return pess_cc_to_opt_cc(current)
    if transform is _T.PENALTY_LIFT:
        return opt_cc_to_opt_nc(current, kappa)
    if transform is _T.EPS_AUX:
        return opt_nc_to_eps_aux(current)
    if transform is _T.EPS_PENALIZE:
        return eps_penalize(prev, kappa)
    return opt_to_pess_swap(prev)


def run_arcs(p: BilevelProblem, arcs, kappas=None):
    """Apply ``arcs`` to ``p``; returns (traces, kappa certificate dicts).

    ``kappas`` (one value, or one per penalty arc) are validated instead of searched.
    Raises :class:`SemanticFailure` when a κ is invalid or cannot be found.
    """
    n_pen = sum(t in (_T.PENALTY_LIFT, _T.EPS_PENALIZE) for t in arcs)
    if kappas is not None and len(kappas) not in (1, n_pen):
        raise UsageError(f"--kappa needs 1 or {n_pen} values, got {len(kappas)}")
    traces, certs = [], []
    current, prev, used = p, None, 0
    for transform in arcs:
        kappa = None
        if transform in (_T.PENALTY_LIFT, _T.EPS_PENALIZE):
            source = current if transform is _T.PENALTY_LIFT else prev.target
            if kappas is None:
                try:
                    cert = search_kappa(source, transform)
                except NoValidKappa as exc:
                    raise SemanticFailure(f"{transform.value}: {exc}") from None
            else:
                fixed = kappas[min(used, len(kappas) - 1)]
                cert = KappaCertificate(fixed, transform, Fraction(0), Fraction(0), 0)
                if not validate_kappa(cert, source):
                    raise SemanticFailure(f"kappa invalid: {format_rational(fixed)} for {transform.value} on {source.name}")
            used += 1
            kappa = cert.kappa
            certs.append(
                {
                    "transform": transform.value,
                    "kappa": format_rational(cert.kappa),
                    "searched": kappas is None,
                    "iterations": cert.iterations,
                }
            )
        prev = _apply(transform, current, prev, kappa)
        traces.append(prev)
        current = prev.target
    return traces, certs


def trace_document(traces, certs) -> dict:
    return {
        "trace_version": TRACE_VERSION,
        "source": traces[0].source.name,
        "target": traces[-1].target.name,
        "x_projection": list(compose_projections(traces)),
        "arcs": [
            {
                "transform": t.transform.value,
                "kappa": None if t.kappa is None else format_rational(t.kappa),
                "source": _sizes(t.source),
                "target": _sizes(t.target),
                "x_projection": list(t.x_projection),
                "notes": list(t.notes),
            }
            for t in traces
        ],
        "kappa_certificates": certs,
    }


def sidecar_path(out: str) -> Path:
    return Path(out + ".trace.json")


def cmd_reformulate(args) -> int:
    arcs = ARCS.get((args.source_kind, args.target_kind))
    if arcs is None:
        raise UsageError(f"unsupported arc {args.source_kind} -> {args.target_kind}")
    p = _load(args.path)
    if p.kind.value != args.source_kind:
        raise UsageError(f"--from {args.source_kind} but {args.path} holds a {p.kind.value} instance")
    traces, certs = run_arcs(p, arcs, _kappa_list(args.kappa))
    target = traces[-1].target
    doc = trace_document(traces, certs)
    text = instance_io.serialize(target, {"derived_from": p.name})
    if args.out:
        Path(args.out).write_text(text)
        sidecar_path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(text)
        return EXIT_OK
    lines = [f"wrote {args.out} ({target.kind.value} nx={target.nx} ny={target.ny} rows={target.m_lower} m={target.m})"]
    lines += [f"  {a['transform']}" + (f" kappa={a['kappa']}" if a["kappa"] else "") for a in doc["arcs"]]
    lines.append(f"  trace {sidecar_path(args.out)}")
    _emit(args, "\n".join(lines), doc)
    return EXIT_OK


# solve ---------------------------------------------------------------------


def cmd_solve(args) -> int:
    p = _load(args.path)
    sol = oracle.solve(p)
    payload = {
        "instance": p.name,
        "status": sol.status.value,
        "x": _vec(sol.x),
        "value": None if sol.value is None else format_rational(sol.value),
        "witness_y": _vec(sol.witness_y),
        "pattern": None if sol.pattern is None else _pattern(sol.pattern),
    }
    if not sol.optimal:
        _emit(args, f"{p.name or args.path}: {sol.status.value}", payload)
        return EXIT_FAIL
    lines = [
        f"{p.name or args.path}: optimal",
        f"  x       = ({', '.join(payload['x'])})",
        f"  value   = {payload['value']}",
    ]
    if sol.witness_y is not None:
        lines.append(f"  witness = ({', '.join(payload['witness_y'])})")
    if sol.pattern is not None:
        lines.append(f"  pattern = {payload['pattern']}")
    _emit(args, "\n".join(lines), payload)
    return EXIT_OK


def _pattern(pat):
    if isinstance(pat, (tuple, list, frozenset, set)):
        return [_pattern(v) for v in (sorted(pat) if isinstance(pat, (set, frozenset)) else pat)]
    return pat


# verify --------------------------------------------------------------------

_GEN_KEYS = {"nx": int, "ny": int, "m_lower": int, "m_coupling": int, "kind": str}


def _generator_params(pairs) -> dict:
    params = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or key not in _GEN_KEYS:
            raise UsageError(f"bad generator parameter {pair!r}; expected one of {sorted(_GEN_KEYS)} as key=value")
        try:
            params[key] = _GEN_KEYS[key](value)
        except ValueError:
            raise UsageError(f"bad value in {pair!r}") from None
    params.setdefault("nx", 1)
    params.setdefault("ny", 1)
    params.setdefault("kind", "pess_cc")
    try:
        kind = ProblemClass(params["kind"])
    except ValueError:
        raise UsageError(f"unknown kind {params['kind']!r}") from None
    params.setdefault("m_lower", 2 * params["ny"] + 1)
    params.setdefault("m_coupling", 1 if kind.coupled else 0)
    return params


def generated_instances(seed: int, count: int, params: dict):
    for i in range(count):
        try:
            yield instance_io.generate(seed + i, **params)
        except ValueError as exc:
            raise UsageError(str(exc)) from None


def _trace_kappas(path: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
        kappas = {}
        for arc in doc["arcs"]:
            if arc.get("kappa") is not None:
                kappas[Transform(arc["transform"])] = parse_rational(arc["kappa"])
        return kappas
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"malformed trace {path}: {exc}") from None


def _comparable(report: dict) -> dict:
    """The deterministic part of a report dict (timings dropped)."""
    out = {k: v for k, v in report.items() if k != "stages"}
    out["stages"] = [{k: v for k, v in s.items() if k != "seconds"} for s in report["stages"]]
    return out


def cmd_verify(args) -> int:
    if (args.path is None) == (args.generate is None):
        raise UsageError("verify takes an instance path or --generate SEED COUNT [key=value ...]")
    if args.path is not None:
        problems = [_load(args.path)]
    else:
        if len(args.generate) < 2:
            raise UsageError("--generate needs SEED COUNT")
        try:
            seed, count = int(args.generate[0]), int(args.generate[1])
        except ValueError:
            raise UsageError("--generate SEED and COUNT must be integers") from None
        problems = list(generated_instances(seed, count, _generator_params(args.generate[2:])))
    kappas = _trace_kappas(args.trace) if args.trace else None
    samples = {}
    for key in ("row", "inner", "falsifier"):
        v = getattr(args, f"{key}_samples")
        if v is not None:
            samples[key] = v

    reports = [verify_problem(p, seed=args.seed, samples=samples, kappas=kappas) for p in problems]
    docs = [r.to_dict() for r in reports]
    mismatch = []
    if args.expect:
        try:
            expected = json.loads(Path(args.expect).read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read expected report {args.expect}: {exc}") from None
        expected = expected.get("reports", expected) if isinstance(expected, dict) else expected
        if not isinstance(expected, list) or len(expected) != len(docs):
            mismatch.append("expected report covers a different number of instances")
        else:
            for got, want in zip(docs, expected):
                try:
                    same = _comparable(got) == _comparable(want)
                except (KeyError, TypeError, AttributeError):
                    same = False
                if not same:
                    mismatch.append(f"{got['instance']}: report differs from {args.expect}")
    passed = sum(r.passed for r in reports)
    ok = passed == len(reports) and not mismatch
    summary = f"{passed}/{len(reports)} pass"
    human = "\n".join([r.render() for r in reports] + [f"! {m}" for m in mismatch] + [summary])
    _emit(args, human, {"passed": ok, "summary": summary, "mismatches": mismatch, "reports": docs})
    return EXIT_OK if ok else EXIT_FAIL


# generate ------------------------------------------------------------------


def cmd_generate(args) -> int:
    params = _generator_params(args.params)
    problems = list(generated_instances(args.seed, args.count, params))
    if args.out_dir is None:
        if len(problems) != 1:
            raise UsageError("--out-dir is required when --count > 1")
        sys.stdout.write(instance_io.serialize(problems[0], {"seed": args.seed}))
        return EXIT_OK
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, p in enumerate(problems):
        (out / f"{p.name}.blvl").write_text(instance_io.serialize(p, {"seed": args.seed + i}))
    print(f"wrote {len(problems)} instances to {out}")
    return EXIT_OK


# entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="linbilevel", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    kinds = [k.value for k in ProblemClass]

    def add(name, func, help):
        sp = sub.add_parser(name, help=help)
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        sp.set_defaults(func=func)
        return sp

    sp = add("check", cmd_check, "check the standing assumption")
    sp.add_argument("path")

    sp = add("reformulate", cmd_reformulate, "apply a reformulation arc")
    sp.add_argument("path")
    sp.add_argument("--from", dest="source_kind", required=True, choices=kinds)
    sp.add_argument("--to", dest="target_kind", required=True, choices=kinds)
    sp.add_argument("--out", help="target instance file; the trace goes to OUT.trace.json")
    sp.add_argument("--kappa", help="penalty parameter(s) to validate instead of searching, comma separated")

    sp = add("solve", cmd_solve, "solve with the class oracle")
    sp.add_argument("path")
    sp.add_argument("--method", choices=["oracle"], default="oracle")

    sp = add("verify", cmd_verify, "verify every arc end to end")
    sp.add_argument("path", nargs="?")
    sp.add_argument("--generate", nargs="+", metavar="ARG", help="SEED COUNT [key=value ...]")
    sp.add_argument("--seed", type=int, default=0, help="sampling seed (default 0)")
    sp.add_argument("--trace", help="trace sidecar whose kappa values are used instead of searching")
    sp.add_argument("--expect", help="stored --json report to compare against")
    sp.add_argument("--row-samples", type=int)
    sp.add_argument("--inner-samples", type=int)
    sp.add_argument("--falsifier-samples", type=int)

    sp = add("generate", cmd_generate, "write random instances")
    sp.add_argument("seed", type=int)
    sp.add_argument("params", nargs="*", metavar="key=value")
    sp.add_argument("--count", type=int, default=1)
    sp.add_argument("--out-dir")
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, instance_io.InstanceFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SemanticFailure, ReformError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
