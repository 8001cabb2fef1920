from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from axred.domains import EnumeratedCarrier, RationalGrid
from axred.dsl import parse_formula, parse_theory
from axred.errors import IllTypedInput, SignatureError, UnsupportedQuantifier
from axred.kernel import (UNDEFINED, Interpretation, Status, Table, check_axiom, eval_formula, eval_term,
                          instances)
from axred.syntax import App, Arith, Const, Elem, Exists, Var, substitute, substitute_term
from axred.theories import get_fixture, get_theory

SPLIT = get_theory("metric.reduced.split")
FULL = get_theory("metric.full")
SIG = SPLIT.signature


def metric(values, grid=None):
    n = int(len(values) ** 0.5)
    names = ("a", "b", "c")[:n]
    dom = {"Point": EnumeratedCarrier(n, names), "Real": RationalGrid.parse(grid) if grid else None}
    vals = [UNDEFINED if v is None else Fraction(v) for v in values]
    return Interpretation(SIG, dom, {"d": Table((n, n), vals)})


def d(x, y):
    return App("d", (Var(x, "Point"), Var(y, "Point")), "Real")


W3 = metric([0, 2, 1, 0])
ZERO = metric([0, 0, 0, 0])
ONE = metric([1, 1, 1, 1])


def test_eval_term_sum_of_distances():
    term = Arith("+", (d("x", "z"), d("y", "z")), "Real")
    assert eval_term(W3, term, {"x": 0, "y": 1, "z": 0}) == 1


def test_eval_term_variable_is_identity():
    assert eval_term(W3, Var("x", "Point"), {"x": 0}) == 0


def test_eval_term_unit_times_unit():
    interp = get_fixture("invol.dim1.frobenius").interpretation
    e = Const("e", "A")
    space = interp.domains["A"]
    assert eval_term(interp, App("mul", (e, e), "A"), {}) == space.unit


def test_eval_term_env_sort_mismatch():
    with pytest.raises(IllTypedInput):
        eval_term(W3, Var("x", "Point"), {"x": 7})
    with pytest.raises(IllTypedInput):
        eval_term(W3, Var("x", "Point"), {})


def test_eval_formula_triangle_variant_fails_on_skewed_metric():
    f = SPLIT.axiom("M4var").formula
    assert eval_formula(W3, f, {"x": 0, "y": 1, "z": 0}) is False


def test_eval_formula_identity_of_indiscernibles_fails_on_zero_metric():
    f = FULL.axiom("M2").formula
    assert eval_formula(ZERO, f, {"x": 0, "y": 1}) is False


def test_eval_formula_reflexivity():
    f = parse_formula("x = x", SIG, {"x": "Point"})
    for interp in (W3, ZERO, ONE):
        assert eval_formula(interp, f, {"x": 1}) is True


def test_quantifier_over_value_sort_is_unsupported():
    f = Exists(Var("r", "Real"), parse_formula("d(x, x) = r", SIG, {"x": "Point", "r": "Real"}))
    with pytest.raises(UnsupportedQuantifier):
        eval_formula(ZERO, f, {"x": 0})


def test_check_axiom_left_direction_fails_on_constant_one():
    v = check_axiom(ONE, SPLIT.axiom("M2l"))
    assert v.status == Status.FAILS
    assert v.witness == {"x": 0, "y": 0}


def test_check_axiom_triangle_holds_on_constant_one():
    v = check_axiom(ONE, SPLIT.axiom("M4var"))
    assert v.status == Status.HOLDS and v.checked == 8


def test_check_axiom_triangle_holds_on_zero_metric():
    v = check_axiom(ZERO, SPLIT.axiom("M4var"))
    assert (v.status, v.checked, v.skipped) == (Status.HOLDS, 8, 0)


def test_partial_table_skips_instead_of_failing():
    interp = metric([0, None, 1, 0])
    v = check_axiom(interp, FULL.axiom("M3"))
    assert v.status == Status.PARTIAL
    assert v.skipped == 2 and v.failures == 0


def test_failure_beats_undefined_in_conjunction():
    interp = metric([0, None, 1, 0])
    f = parse_formula("d(x, y) = 5 /\\ d(y, x) = 1", SIG, {"x": "Point", "y": "Point"})
    assert eval_formula(interp, f, {"x": 1, "y": 0}) is False
    assert eval_formula(interp, f, {"x": 0, "y": 1}) is UNDEFINED


def test_interpretation_rejects_wrong_table_shape():
    with pytest.raises(SignatureError):
        Interpretation(SIG, {"Point": EnumeratedCarrier(2), "Real": None}, {"d": Table((3, 3), [0] * 9)})


def test_instances_are_lexicographic():
    f = FULL.axiom("M3").formula
    envs = list(instances(ZERO, f))
    assert [(e["x"], e["y"]) for e in envs] == [(0, 0), (0, 1), (1, 0), (1, 1)]


# -- properties --------------------------------------------------------------------------

GRID = [Fraction(0), Fraction(1, 2), Fraction(1), Fraction(2)]
cell = st.one_of(st.none(), st.sampled_from(GRID))


@st.composite
def partial_metric(draw):
    n = draw(st.integers(1, 3))
    return n, draw(st.lists(cell, min_size=n * n, max_size=n * n))


@settings(max_examples=150, deadline=None)
@given(partial_metric(), st.data())
def test_filling_a_cell_never_changes_a_decided_instance(nm, data):
    n, vals = nm
    holes = [i for i, v in enumerate(vals) if v is None]
    if not holes:
        return
    before = metric(vals)
    k = data.draw(st.sampled_from(holes))
    filled = list(vals)
    filled[k] = data.draw(st.sampled_from(GRID))
    after = metric(filled)
    for ax in list(FULL.axioms) + list(SPLIT.axioms):
        for env in instances(before, ax.formula):
            r = eval_formula(before, ax.formula, env)
            if r is not UNDEFINED:
                assert eval_formula(after, ax.formula, env) is r


TOY = parse_theory("""
theory toy {
  sort S
  fn f(S, S) -> S
  fn g(S) -> S
  const c : S
}
""")


def toy_terms():
    leaves = st.sampled_from([Var("x", "S"), Var("y", "S"), Const("c", "S")])
    return st.recursive(
        leaves,
        lambda inner: st.one_of(
            st.builds(lambda a: App("g", (a,), "S"), inner),
            st.builds(lambda a, b: App("f", (a, b), "S"), inner, inner)),
        max_leaves=8)


@st.composite
def toy_model(draw):
    n = draw(st.integers(1, 3))
    f = draw(st.lists(st.integers(0, n - 1), min_size=n * n, max_size=n * n))
    g = draw(st.lists(st.integers(0, n - 1), min_size=n, max_size=n))
    c = draw(st.integers(0, n - 1))
    return Interpretation(TOY.signature, {"S": EnumeratedCarrier(n)},
                          {"f": Table((n, n), f), "g": Table((n,), g)}, {"c": c})


@settings(max_examples=200, deadline=None)
@given(toy_model(), toy_terms(), st.data())
def test_substitution_commutes_with_evaluation(interp, term, data):
    n = interp.size("S")
    x = data.draw(st.integers(0, n - 1))
    y = data.draw(st.integers(0, n - 1))
    direct = eval_term(interp, term, {"x": x, "y": y})
    assert eval_term(interp, substitute_term(term, "x", x), {"y": y}) == direct
    both = substitute_term(substitute_term(term, "x", x), "y", y)
    assert eval_term(interp, both, {}) == direct


@settings(max_examples=100, deadline=None)
@given(toy_model(), toy_terms(), toy_terms(), st.data())
def test_formula_substitution_soundness(interp, s, t, data):
    n = interp.size("S")
    x = data.draw(st.integers(0, n - 1))
    y = data.draw(st.integers(0, n - 1))
    f = parse_formula("x = y", TOY.signature, {"x": "S", "y": "S"})
    f = type(f)(s, t)
    assert eval_formula(interp, substitute(f, "x", x), {"y": y}) == eval_formula(interp, f, {"x": x, "y": y})


@settings(max_examples=100, deadline=None)
@given(toy_model(), toy_terms())
def test_evaluation_is_deterministic(interp, term):
    env = {"x": 0, "y": interp.size("S") - 1}
    assert eval_term(interp, term, env) == eval_term(interp, term, env)


def test_ground_element_terms_evaluate_to_themselves():
    assert eval_term(ZERO, Elem(1, "Point"), {}) == 1
