"""JSON instance files and a seeded random instance generator.

A file is one JSON object::

    {"format_version": 1, "kind": "pess_cc", "nx": 1, "ny": 1,
     "c": ["1"], "f": ["0"],
     "G": [["1"], ["-1"]], "h": ["0", "-1"],
     "C": [["0"], ["0"]], "D": [["1"], ["-1"]], "b": ["0", "-1"],
     "A": [["1"]], "B": [["1"]], "a": ["1"],
     "metadata": {"name": "E1"}}

``d`` is required except for ``pess_cc`` (where it is forbidden); ``A``,
``B``, ``a`` are required for ``*_cc`` kinds and forbidden otherwise.
Follower equality rows go in the optional ``Ceq``, ``Deq``, ``beq``.
Every number is a string matching ``-?[0-9]+(/[1-9][0-9]*)?``.
"""

from __future__ import annotations

import json
import random
from fractions import Fraction

from .lp import DimensionMismatchError, Polyhedron
from .model import BilevelProblem, CouplingBlock, LowerLevel, ProblemClass
from .rational import RATIONAL_PATTERN, format_rational

FORMAT_VERSION = 1
CAPS = dict(nx=3, ny=3, m_lower=8, m_coupling=3)


class InstanceFormatError(ValueError):
    def __init__(self, message, field=None, line=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.field = field
        self.line = line


def _field_line(text: str, field: str) -> int | None:
    key = f'"{field.split("[")[0]}"'
    for no, line in enumerate(text.splitlines(), 1):
        if key in line:
            return no
    return None


class _Reader:
    def __init__(self, doc: dict, text: str):
        self.doc = doc
        self.text = text

    def fail(self, message, field):
        raise InstanceFormatError(message, field, _field_line(self.text, field))

    def rational(self, value, field) -> Fraction:
        if not isinstance(value, str) or not RATIONAL_PATTERN.fullmatch(value):
            self.fail(f"malformed rational {value!r}", field)
        return Fraction(value)

    def vector(self, key, length) -> tuple:
        value = self.doc.get(key)
        if not isinstance(value, list):
            self.fail("expected an array of rational strings", key)
        if len(value) != length:
            self.fail(f"expected {length} entries, got {len(value)}", key)
        return tuple(self.rational(v, f"{key}[{i}]") for i, v in enumerate(value))

    def matrix(self, key, rows, cols) -> tuple:
        value = self.doc.get(key, [] if rows == 0 else None)
        if not isinstance(value, list):
            self.fail("expected a row-major array of arrays", key)
        if len(value) != rows:
            self.fail(f"expected {rows} rows, got {len(value)}", key)
        out = []
        for i, row in enumerate(value):
            if not isinstance(row, list) or len(row) != cols:
                self.fail(f"expected a row of {cols} entries", f"{key}[{i}]")
            out.append(tuple(self.rational(v, f"{key}[{i}][{j}]") for j, v in enumerate(row)))
        return tuple(out)

    def count(self, key) -> int:
        value = self.doc.get(key)
        if not isinstance(value, list):
            self.fail("expected an array", key)
        return len(value)


def parse(text: str) -> BilevelProblem:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"syntax error: {exc.msg}", line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise InstanceFormatError("top level must be an object", line=1)
    r = _Reader(doc, text)
    version = doc.get("format_version")
    if not isinstance(version, int) or isinstance(version, bool):
        r.fail("format_version must be an integer", "format_version")
    if version != FORMAT_VERSION:
        r.fail(f"unsupported format_version {version}", "format_version")
    try:
        kind = ProblemClass(doc.get("kind"))
    except ValueError:
        r.fail(f"unknown kind {doc.get('kind')!r}", "kind")
    nx, ny = doc.get("nx"), doc.get("ny")
    for key, v in (("nx", nx), ("ny", ny)):
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            r.fail("expected a non-negative integer", key)
    if nx < 1:
        r.fail("nx must be at least 1", "nx")

    if kind is ProblemClass.PESS_CC and "d" in doc:
        r.fail("d is not allowed for kind pess_cc", "d")
    if not kind.coupled:
        for key in ("A", "B", "a"):
            if key in doc:
                r.fail(f"coupling data is not allowed for kind {kind.value}", key)

    c = r.vector("c", nx)
    f = r.vector("f", ny)
    d = None if kind is ProblemClass.PESS_CC else r.vector("d", ny)
    mx = r.count("h")
    G = r.matrix("G", mx, nx)
    h = r.vector("h", mx)
    ml = r.count("b")
    C = r.matrix("C", ml, nx)
    D = r.matrix("D", ml, ny)
    b = r.vector("b", ml)
    me = r.count("beq") if "beq" in doc else 0
    Ceq = r.matrix("Ceq", me, nx)
    Deq = r.matrix("Deq", me, ny)
    beq = r.vector("beq", me) if me else ()
    coupling = None
    if kind.coupled:
        m = r.count("a")
        coupling = CouplingBlock(r.matrix("A", m, nx), r.matrix("B", m, ny), r.vector("a", m))
    meta = doc.get("metadata", {})
    if not isinstance(meta, dict):
        r.fail("metadata must be an object", "metadata")
    try:
        return BilevelProblem(
            kind,
            nx,
            ny,
            c,
            Polyhedron(G, h, nx),
            LowerLevel(f, C, D, b, Ceq, Deq, beq),
            d=d,
            coupling=coupling,
            name=str(meta.get("name", "")),
        )
    except DimensionMismatchError as exc:
        raise InstanceFormatError(str(exc)) from None


def _strs(v):
    return [format_rational(a) for a in v]


def to_document(p: BilevelProblem, metadata: dict | None = None) -> dict:
    low = p.lower
    doc = {"format_version": FORMAT_VERSION, "kind": p.kind.value, "nx": p.nx, "ny": p.ny}
    doc["c"] = _strs(p.c)
    if p.d is not None:
        doc["d"] = _strs(p.d)
    doc["f"] = _strs(low.f)
    doc["G"] = [_strs(r) for r in p.X.G]
    doc["h"] = _strs(p.X.h)
    doc["C"] = [_strs(r) for r in low.C]
    doc["D"] = [_strs(r) for r in low.D]
    doc["b"] = _strs(low.b)
    if low.b_eq:
        doc["Ceq"] = [_strs(r) for r in low.C_eq]
        doc["Deq"] = [_strs(r) for r in low.D_eq]
        doc["beq"] = _strs(low.b_eq)
    if p.coupling is not None:
        doc["A"] = [_strs(r) for r in p.coupling.A]
        doc["B"] = [_strs(r) for r in p.coupling.B]
        doc["a"] = _strs(p.coupling.a)
    meta = {"name": p.name} if p.name else {}
    meta.update(metadata or {})
    if meta:
        doc["metadata"] = meta
    return doc


def serialize(p: BilevelProblem, metadata: dict | None = None) -> str:
    return _dump(to_document(p, metadata))


def _dump(doc: dict) -> str:
    # one matrix row per line keeps diffs of golden files readable
    lines = ["{"]
    items = list(doc.items())
    for k, (key, value) in enumerate(items):
        comma = "," if k < len(items) - 1 else ""
        if isinstance(value, list) and value and isinstance(value[0], list):
            rows = ",\n".join("    " + json.dumps(row) for row in value)
            lines.append(f"  {json.dumps(key)}: [\n{rows}\n  ]{comma}")
        else:
            lines.append(f"  {json.dumps(key)}: {json.dumps(value, sort_keys=True)}{comma}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _rand_q(rng: random.Random, lo=-3, hi=3, denominators=(1, 1, 2, 3)) -> Fraction:
    return Fraction(rng.randint(lo, hi), rng.choice(denominators))


def generate(seed: int, nx: int, ny: int, m_lower: int, m_coupling: int, kind) -> BilevelProblem:
    """Random instance whose follower set is a nonempty box-bounded polytope for every x in X.

    ``m_lower`` counts all follower rows, including the ``2*ny`` box rows.
    """
    kind = ProblemClass(kind)
    for name, v in (("nx", nx), ("ny", ny), ("m_lower", m_lower), ("m_coupling", m_coupling)):
        if v > CAPS[name]:
            raise ValueError(f"{name}={v} exceeds the cap {CAPS[name]}")
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be at least 1")
    if m_lower < 2 * ny:
        raise ValueError(f"m_lower must be at least 2*ny = {2 * ny}")
    if not kind.coupled and m_coupling:
        raise ValueError(f"kind {kind.value} takes no coupling rows")
    rng = random.Random(seed)

    lo = [_rand_q(rng, -2, 1) for _ in range(nx)]
    hi = [l + Fraction(rng.randint(1, 4), rng.choice((1, 2))) for l in lo]
    X = Polyhedron.box(lo, hi)
    corners = [(l, u) for l, u in zip(lo, hi)]

    def min_over_X(row):
        return sum((min(a * l, a * u) for a, (l, u) in zip(row, corners)), Fraction(0))

    y_ref = [_rand_q(rng, -2, 2) for _ in range(ny)]
    C, D, b = [], [], []
    for j in range(ny):
        for sign in (1, -1):
            row_d = [Fraction(sign) if k == j else Fraction(0) for k in range(ny)]
            row_c = [_rand_q(rng, -2, 2) for _ in range(nx)]
            # y_ref feasible for every x in X, widened by a random margin
            bound = min_over_X(row_c) + sign * y_ref[j] - Fraction(rng.randint(0, 4), rng.choice((1, 2)))
            C.append(row_c)
            D.append(row_d)
            b.append(bound)
    for _ in range(m_lower - 2 * ny):
        row_c = [_rand_q(rng) for _ in range(nx)]
        row_d = [_rand_q(rng) for _ in range(ny)]
        bound = min_over_X(row_c) + sum((a * y for a, y in zip(row_d, y_ref)), Fraction(0))
        bound -= Fraction(rng.randint(0, 2), rng.choice((1, 2)))
        C.append(row_c)
        D.append(row_d)
        b.append(bound)

    c = [_rand_q(rng) for _ in range(nx)]
    f = [_rand_q(rng) for _ in range(ny)]
    d = None if kind is ProblemClass.PESS_CC else [_rand_q(rng) for _ in range(ny)]

    coupling = None
    if kind.coupled:
        # anchor at a random corner of X: the row holds there for every y in the follower box
        x_ref = [rng.choice(pair) for pair in corners]
        A, B, a = [], [], []
        for _ in range(m_coupling):
            # tilting A toward c turns the row into a lower bound on the leader objective
            tilt = Fraction(rng.choice((0, 1, 1, 2)), rng.choice((1, 2)))
            row_a = [tilt * ci + _rand_q(rng, -1, 1) for ci in c]
            row_b = [_rand_q(rng) for _ in range(ny)]
            total = sum((ai * xi for ai, xi in zip(row_a, x_ref)), Fraction(0))
            for j, bj in enumerate(row_b):
                ylo = b[2 * j] - sum((cc * xi for cc, xi in zip(C[2 * j], x_ref)), Fraction(0))
                yhi = -(b[2 * j + 1] - sum((cc * xi for cc, xi in zip(C[2 * j + 1], x_ref)), Fraction(0)))
                total += min(bj * ylo, bj * yhi)
            A.append(row_a)
            B.append(row_b)
            a.append(total)
        coupling = CouplingBlock(tuple(map(tuple, A)), tuple(map(tuple, B)), tuple(a))

    return BilevelProblem(
        kind,
        nx,
        ny,
        tuple(c),
        X,
        LowerLevel(tuple(f), tuple(map(tuple, C)), tuple(map(tuple, D)), tuple(b)),
        d=None if d is None else tuple(d),
        coupling=coupling,
        name=f"gen-{kind.value}-s{seed}-{nx}x{ny}-{m_lower}-{m_coupling}",
    )
