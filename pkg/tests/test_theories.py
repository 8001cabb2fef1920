import shutil

import pytest

from axred.errors import CatalogError, FixtureError
from axred.kernel import Status
from axred.theories import (builtin_fixture_dir, fixture_names, fixtures_from_dir, get_fixture, get_theory,
                            parse_fixture, resolve_theory, theory_names)


@pytest.mark.parametrize("name,axioms", [
    ("metric.full", ["M1", "M2", "M3", "M4"]),
    ("ip.reduced", ["S9", "S10", "S11", "S13"]),
    ("invol.char2.reduced", ["C3", "C5", "C6"]),
    ("invol.reduced", ["C3", "C5"]),
    ("norm.reduced", ["N2var", "N3var", "N4"]),
    ("metric.reduced", ["M2", "M4var"]),
])
def test_catalog_axioms(name, axioms):
    assert get_theory(name).axiom_names == axioms


def test_unknown_theory_lists_valid_names():
    with pytest.raises(CatalogError) as info:
        get_theory("metric.fullest")
    for n in ("metric.full", "ip.reduced", "invol.reduced"):
        assert n in str(info.value)


def test_catalog_is_complete():
    expected = {"metric.full", "metric.reduced", "metric.reduced.split", "norm.full", "norm.reduced",
                "ip.full", "ip.full-ff", "ip.reduced", "ip.ring", "invol.full", "invol.reduced",
                "invol.dim1", "invol.char2.reduced"}
    assert expected <= set(theory_names())


def test_reduced_theories_share_signatures_with_full_ones():
    for reduced, full in (("metric.reduced", "metric.full"), ("norm.reduced", "norm.full"),
                          ("ip.reduced", "ip.full-ff"), ("invol.reduced", "invol.full")):
        assert get_theory(reduced).signature == get_theory(full).signature


@pytest.mark.parametrize("name", fixture_names())
def test_builtin_fixtures_verify(name):
    fx = get_fixture(name)
    assert all(c.ok for c in fx.check())


@pytest.mark.parametrize("name,pattern", [
    ("metric.w1", {"M2r": Status.FAILS, "M2l": Status.HOLDS, "M4var": Status.HOLDS}),
    ("metric.w2", {"M2r": Status.HOLDS, "M2l": Status.FAILS, "M4var": Status.HOLDS}),
    ("metric.w3", {"M2r": Status.HOLDS, "M2l": Status.HOLDS, "M4var": Status.FAILS}),
    ("invol.dim1.szero", {"C3": Status.HOLDS, "C5": Status.HOLDS, "C4": Status.FAILS}),
    ("invol.char2.gf4", {"C3": Status.HOLDS, "C5": Status.HOLDS, "C6": Status.FAILS}),
])
def test_fixture_verdict_patterns(name, pattern):
    fx = get_fixture(name)
    got = {c.axiom: c.verdict.status for c in fx.check() if c.axiom in pattern}
    assert got == pattern


def test_unknown_fixture():
    with pytest.raises(CatalogError):
        get_fixture("metric.w9")


def test_wrong_expectation_names_the_fixture(tmp_path):
    text = (builtin_fixture_dir() / "metric.w3.fix").read_text().replace("M4var fails", "M4var holds")
    fx = parse_fixture(text, source="metric.w3.fix")
    with pytest.raises(FixtureError, match="metric.w3"):
        fx.verify()


@pytest.mark.parametrize("text", [
    "fixture x\n",
    "fixture x\ntheory metric.full\ncarrier Point a,b\ngrid Real 0,1\ntable d\n  a = 0\n",
    "fixture x\ntheory nope\n",
    "fixture x\ntheory metric.full\nbogus line\n",
    "fixture x\ntheory metric.full\ncarrier Point a\ntable d\n  a a = 0\nexpect M9 holds\n",
    "fixture x\ntheory metric.full\ncarrier Point a\ntable d\n  a a = 0\nexpect M1 maybe\n",
])
def test_malformed_fixtures(text):
    with pytest.raises((FixtureError, CatalogError)):
        parse_fixture(text)


def test_partial_fixture_tables_give_partial_verdicts():
    text = "fixture p\ntheory metric.full\ncarrier Point a,b\ntable d\n  a a = 0\n  b b = 0\nexpect M3 partial\n"
    assert parse_fixture(text).verify()


def test_fixtures_from_directory(tmp_path):
    for p in builtin_fixture_dir().glob("*.fix"):
        shutil.copy(p, tmp_path / p.name)
    names = sorted(fx.name for fx in fixtures_from_dir(tmp_path))
    assert names == fixture_names()


def test_resolve_theory_from_file(tmp_path):
    path = tmp_path / "mine.thy"
    path.write_text("theory mine { sort P fn f(P) -> P axiom A: f(x) = x }\n")
    assert resolve_theory(str(path)).axiom_names == ["A"]
    assert resolve_theory("metric.full") is get_theory("metric.full")
    with pytest.raises(CatalogError):
        resolve_theory(str(tmp_path / "missing.thy"))
