import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from axred.dsl import parse_formula, parse_theory, serialize_theory
from axred.errors import DslError
from axred.theories import all_theories, get_theory, theory_text

METRIC_SRC = """
theory metric.reduced {
  sort Point
  value Real
  fn d(Point, Point) -> Real
  axiom M2: d(x, y) = 0 <-> x = y
  axiom M4var: d(x, y) <= d(x, z) + d(y, z)
}
"""


def test_parse_metric_reduced():
    t = parse_theory(METRIC_SRC)
    assert t.axiom_names == ["M2", "M4var"]
    assert t == get_theory("metric.reduced").with_axioms(t.axioms)


def test_parse_ip_reduced_has_four_axioms():
    t = parse_theory(theory_text("ip.reduced"))
    assert t.axiom_names == ["S9", "S10", "S11", "S13"]


def test_arity_mismatch_reports_span():
    src = "theory bad {\n  sort P\n  value R\n  fn d(P, P) -> R\n  axiom A: d(x) = 0\n}\n"
    with pytest.raises(DslError) as info:
        parse_theory(src)
    err = info.value
    assert err.line == 5
    line = src.splitlines()[4]
    assert line[err.col - 1:err.end_col - 1] == "d(x)"
    assert "arguments" in err.message or "arity" in err.message


def test_serialize_metric_full_lists_four_axioms():
    text = serialize_theory(get_theory("metric.full"))
    lines = [ln.strip() for ln in text.splitlines() if ln.strip().startswith("axiom ")]
    assert [ln.split(":")[0] for ln in lines] == ["axiom M1", "axiom M2", "axiom M3", "axiom M4"]


def test_serialize_involution_reduced_lists_two_axioms():
    text = serialize_theory(get_theory("invol.reduced"))
    lines = [ln.strip() for ln in text.splitlines() if ln.strip().startswith("axiom ")]
    assert [ln.split(":")[0] for ln in lines] == ["axiom C3", "axiom C5"]


def test_empty_theory_serializes_declarations_only():
    t = get_theory("metric.full").with_axioms([], name="bare")
    text = serialize_theory(t)
    assert "axiom" not in text
    assert parse_theory(text) == t


@pytest.mark.parametrize("theory", all_theories(), ids=lambda t: t.name)
def test_catalog_round_trip(theory):
    text = serialize_theory(theory)
    again = parse_theory(text)
    assert again == theory
    assert serialize_theory(again) == text


@pytest.mark.parametrize("src,fragment", [
    ("theory t { sort P fn f(P) -> Q }", "Q"),
    ("theory t { sort P axiom A: x = }", None),
    ("theory t { sort P value R fn d(P, P) -> R axiom A: d(x, y) = x }", None),
    ("theory t { sort P fn f(P) -> P axiom A: f(y) = y axiom A: f(x) = x }", "twice"),
])
def test_malformed_sources_raise_dsl_errors(src, fragment):
    with pytest.raises(DslError) as info:
        parse_theory(src)
    if fragment:
        assert fragment in str(info.value)


def test_deep_nesting_is_a_dsl_error():
    src = "theory t { sort P axiom A: " + "not " * 5000 + "x = x }"
    with pytest.raises(DslError):
        parse_theory(src)


def test_parse_formula_against_signature():
    sig = get_theory("metric.full").signature
    f = parse_formula("d(x, y) <= d(y, x)", sig, {"x": "Point", "y": "Point"})
    assert "d" in repr(f)


# -- generated well-typed theories ----------------------------------------------------

HEADER = """theory gen {
  scalar F
  sort V
  value R
  fn add(V, V) -> V
  fn smul(F, V) -> V
  fn ip(V, V) -> F
  fn size(V) -> R
"""

vec_var = st.sampled_from(["x", "y", "z"])
scal_var = st.sampled_from(["l", "m"])


def vec_terms():
    return st.recursive(vec_var, lambda inner: st.one_of(
        st.tuples(inner, inner).map(lambda p: f"add({p[0]}, {p[1]})"),
        st.tuples(scal_terms_leaf(), inner).map(lambda p: f"smul({p[0]}, {p[1]})")), max_leaves=4)


def scal_terms_leaf():
    return st.one_of(scal_var, st.integers(0, 3).map(str))


def scal_terms():
    base = st.one_of(scal_terms_leaf(), st.tuples(vec_terms(), vec_terms()).map(lambda p: f"ip({p[0]}, {p[1]})"))
    return st.recursive(base, lambda inner: st.one_of(
        st.tuples(inner, inner).map(lambda p: f"({p[0]} + {p[1]})"),
        st.tuples(inner, inner).map(lambda p: f"({p[0]} * {p[1]})"),
        inner.map(lambda a: f"-({a})")), max_leaves=4)


def real_terms():
    base = st.one_of(vec_terms().map(lambda v: f"size({v})"), st.integers(0, 2).map(str))
    return st.recursive(base, lambda inner: st.tuples(inner, inner).map(lambda p: f"({p[0]} + {p[1]})"),
                        max_leaves=3)


def atoms():
    # each atom mentions a typed symbol so every variable's sort can be inferred
    return st.one_of(
        st.tuples(vec_terms(), vec_terms()).map(lambda p: f"add(x, {p[0]}) = {p[1]}"),
        st.tuples(scal_terms(), scal_terms()).map(lambda p: f"ip(x, y) + {p[0]} = {p[1]}"),
        st.tuples(real_terms(), real_terms(), st.sampled_from(["<=", "<"])).map(
            lambda p: f"size(x) + {p[0]} {p[2]} {p[1]}"))


def formulas():
    return st.recursive(atoms(), lambda inner: st.one_of(
        inner.map(lambda f: f"not ({f})"),
        st.tuples(inner, inner, st.sampled_from(["/\\", "->", "<->"])).map(
            lambda p: f"({p[0]}) {p[2]} ({p[1]})"),
        st.tuples(st.sampled_from(["w", "k"]), inner).map(
            lambda p: f"exists {p[0]}:{'V' if p[0] == 'w' else 'F'}. ({p[1]})")), max_leaves=4)


@settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.lists(formulas(), min_size=0, max_size=3))
def test_generated_theories_round_trip(fs):
    src = HEADER + "".join(f"  axiom A{i}: {f}\n" for i, f in enumerate(fs)) + "}\n"
    theory = parse_theory(src)
    text = serialize_theory(theory)
    assert parse_theory(text) == theory
    assert serialize_theory(parse_theory(text)) == text


# -- fuzzing ---------------------------------------------------------------------------------

def _parse_or_dsl_error(text):
    try:
        parse_theory(text)
    except DslError:
        pass


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=200))
def test_arbitrary_text_only_raises_dsl_errors(text):
    _parse_or_dsl_error(text)


ALPHABET = list("(){}:;,.=<>-+*/\\ \n") + ["exists", "not", "axiom", "fn", "sort", "value", "scalar",
                                            "const", "mode", "linear-algebra", "dim", "abs", "x", "F", "V"]


@settings(max_examples=300, deadline=None)
@given(st.sampled_from([theory_text(t.name) for t in all_theories()]),
       st.lists(st.tuples(st.integers(0, 400), st.integers(0, 3), st.sampled_from(ALPHABET)), max_size=4))
def test_mutated_catalog_sources_only_raise_dsl_errors(src, edits):
    text = src
    for pos, cut, ins in edits:
        pos = pos % (len(text) + 1)
        text = text[:pos] + ins + text[pos + cut:]
    _parse_or_dsl_error(text)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(ALPHABET), max_size=40))
def test_token_soup_only_raises_dsl_errors(tokens):
    _parse_or_dsl_error("theory t { sort V scalar F " + " ".join(tokens) + " }")
