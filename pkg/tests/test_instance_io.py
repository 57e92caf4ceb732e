import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from linbilevel import corpus, instance_io
from linbilevel.instance_io import InstanceFormatError, generate, parse, serialize
from linbilevel.model import ProblemClass, check_standing_assumption
from linbilevel.reform import full_chain, pess_cc_to_opt_cc


def e1_doc():
    return instance_io.to_document(corpus.e1())


def reparse(doc):
    return parse(json.dumps(doc, indent=1))


@pytest.mark.parametrize("name", sorted(corpus.ALL))
def test_corpus_roundtrip(name):
    p = corpus.ALL[name]()
    assert parse(serialize(p)) == p


def test_corpus_files_match_builders(corpus_dir):
    for name, build in corpus.ALL.items():
        assert parse((corpus_dir / f"{name}.blvl").read_text()) == build()


def test_derived_instances_roundtrip():
    for t in full_chain(corpus.e1()):
        assert parse(serialize(t.target)) == t.target
    empty = pess_cc_to_opt_cc(corpus.m0_pess_cc()).target
    assert parse(serialize(empty)) == empty


def test_metadata_is_kept():
    doc = json.loads(serialize(corpus.e2(), {"seed": 4}))
    assert doc["metadata"] == {"name": "E2", "seed": 4}


@pytest.mark.parametrize(
    "edit, field",
    [
        (lambda d: d.update(format_version=2), "format_version"),
        (lambda d: d.update(kind="bogus"), "kind"),
        (lambda d: d.update(nx="1"), "nx"),
        (lambda d: d.update(c=["0.5"]), "c[0]"),
        (lambda d: d.update(a=[1]), "a[0]"),
        (lambda d: d.update(d=["1"]), "d"),
        (lambda d: d.update(D=[["1"]]), "D"),
        (lambda d: d.update(G=[["1", "2"], ["-1"]]), "G[0]"),
        (lambda d: d.pop("f"), "f"),
        (lambda d: d.update(metadata=[]), "metadata"),
    ],
)
def test_field_diagnostics(edit, field):
    doc = e1_doc()
    edit(doc)
    with pytest.raises(InstanceFormatError) as err:
        reparse(doc)
    assert err.value.field == field
    assert field.split("[")[0] in str(err.value)


def test_coupling_forbidden_without_cc():
    doc = instance_io.to_document(corpus.e3_opt())
    doc["A"] = [["1"]]
    with pytest.raises(InstanceFormatError) as err:
        reparse(doc)
    assert err.value.field == "A"


def test_syntax_error_has_line():
    with pytest.raises(InstanceFormatError) as err:
        parse('{\n  "kind": "opt_nc",\n  oops\n}')
    assert err.value.line == 3


def test_diagnostic_line_points_at_field():
    text = serialize(corpus.e1()).replace('"c": ["1"]', '"c": ["x"]')
    with pytest.raises(InstanceFormatError) as err:
        parse(text)
    assert err.value.line == text.splitlines().index('  "c": ["x"],') + 1


def test_generator_caps_and_shape_checks():
    with pytest.raises(ValueError):
        generate(0, 4, 1, 2, 0, "opt_nc")
    with pytest.raises(ValueError):
        generate(0, 1, 2, 3, 0, "opt_nc")
    with pytest.raises(ValueError):
        generate(0, 1, 1, 2, 1, "opt_nc")
    with pytest.raises(ValueError):
        generate(0, 1, 1, 2, 4, "opt_cc")


def test_generator_is_deterministic():
    assert generate(5, 2, 2, 5, 2, "pess_cc") == generate(5, 2, 2, 5, 2, "pess_cc")
    assert generate(5, 2, 2, 5, 2, "pess_cc") != generate(6, 2, 2, 5, 2, "pess_cc")


generated = st.builds(
    lambda seed, kind, nx, ny, extra, m: generate(
        seed, nx, ny, 2 * ny + extra, m if ProblemClass(kind).coupled else 0, kind
    ),
    st.integers(0, 10**9),
    st.sampled_from([k.value for k in ProblemClass]),
    st.integers(1, 3),
    st.integers(1, 3),
    st.integers(0, 2),
    st.integers(0, 3),
)


@given(generated)
def test_generated_roundtrip(p):
    text = serialize(p)
    assert parse(text) == p
    assert serialize(parse(text)) == text


@given(generated)
def test_generated_instances_satisfy_the_standing_assumption(p):
    rep = check_standing_assumption(p)
    assert rep.all_hold, rep.reasons()
