"""The acceptance suite: seven end-to-end checks of the four reductions.

Each criterion is a plain function returning a CriterionResult; ``run_all``
runs them in order.  The CLI's ``verify-paper`` command and
tests/test_acceptance.py both drive this module.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional

from .analysis import (ResultStatus, check_independence, check_redundancy, norm_model, verify_countermodel,
                       verify_involution_identities, verify_norm_derivations)
from .domains import (Bucket, RationalGrid, RationalSample, all_self_maps, classify_map, field_from_order,
                      multiplicative_maps)
from .dsl import parse_theory, serialize_theory
from .errors import AxredError, ReportVerificationError
from .kernel import Status, Table, check_axiom
from .search import SearchSpec, SearchStatus, canonical_form, enumerate_models, naive_models
from .theories import all_theories, builtin_fixture_dir, fixtures_from_dir, get_fixture, get_theory

ROWS = {1: "minimality", 2: "metric/norm", 3: "inner product", 4: "involution", 5: "involution",
        6: "metric/norm", 7: "infrastructure"}

NORM_SAMPLE = ("0", "1", "-1", "2", "-2", "1/2", "-1/2")
NORM_SCALARS = NORM_SAMPLE
NORM_GRID = "0,1/2,1,2,3"
NORM_PLANE = ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1))


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    details: List[str] = field(default_factory=list)
    elapsed: float = 0.0
    limit: Optional[float] = None

    @property
    def row(self):
        return ROWS[self.number]

    def line(self):
        mark = "PASS" if self.passed else "FAIL"
        limit = f" (limit {self.limit:g} s)" if self.limit else ""
        return f"criterion {self.number} [{self.row}] {self.title}: {mark} in {self.elapsed:.2f} s{limit}"

    def as_dict(self):
        return {"criterion": self.number, "row": self.row, "title": self.title, "passed": self.passed,
                "elapsed_s": round(self.elapsed, 3), "limit_s": self.limit, "details": list(self.details)}


class _Check:
    def __init__(self):
        self.failures: List[str] = []
        self.notes: List[str] = []

    def require(self, cond, message):
        if not cond:
            self.failures.append(message)
        return cond

    def note(self, message):
        self.notes.append(message)


def _timed(number, title, limit, body: Callable[[_Check], None]) -> CriterionResult:
    chk = _Check()
    start = time.monotonic()
    try:
        body(chk)
    except AxredError as exc:
        chk.failures.append(f"{type(exc).__name__}: {exc}")
    elapsed = time.monotonic() - start
    if limit is not None and elapsed >= limit:
        chk.failures.append(f"runtime {elapsed:.2f} s exceeds {limit:g} s")
    details = chk.failures + chk.notes
    return CriterionResult(number, title, not chk.failures, details, elapsed, limit)


def _d_table(values):
    return Table((2, 2), [Fraction(v) for v in values])


# -- specs shared with the parallel check --------------------------------------------

def metric_specs():
    grid = RationalGrid.parse("0,1/2,1,2")
    return [SearchSpec(get_theory("metric.reduced"), {"Point": n, "Real": grid}) for n in (1, 2, 3)]


def ip_specs():
    return [SearchSpec(get_theory("ip.reduced"), {"V": n, "F": field_from_order(3)}) for n in (2, 3)]


def invol_specs():
    return [SearchSpec(get_theory("invol.reduced"), {"F": field_from_order(q)}, dim=2) for q in (3, 2)]


# -- criteria ------------------------------------------------------------------------

def criterion_1(fixtures_dir=None) -> CriterionResult:
    def body(c):
        theory = get_theory("metric.reduced.split")
        spec = SearchSpec(theory, {"Point": 2, "Real": RationalGrid.parse("0,1,2")})
        report = check_independence(theory, [spec])
        expected = {"M2r": (0, 0, 0, 0), "M2l": (1, 1, 1, 1), "M4var": (0, 2, 1, 0)}
        fixture_of = {"M2r": "metric.w1", "M2l": "metric.w2", "M4var": "metric.w3"}
        c.require(len(report.results) == 3, "expected three axioms")
        for r in report.results:
            if not c.require(r.status == ResultStatus.WITNESS, f"no witness for not-{r.axiom}"):
                continue
            w = r.witness.model
            c.require(w.tables["d"] == _d_table(expected[r.axiom]),
                      f"witness for not-{r.axiom} is {w.tables['d'].values}, expected {expected[r.axiom]}")
            fx = get_fixture(fixture_of[r.axiom])
            c.require(canonical_form(w) == canonical_form(fx.interpretation),
                      f"witness for not-{r.axiom} differs from fixture {fx.name}")
            pattern = {a.name: check_axiom(w, a).status for a in theory.axioms}
            c.require(pattern == {a: (Status.FAILS if a == r.axiom else Status.HOLDS) for a in pattern},
                      f"verdict pattern for not-{r.axiom}: {pattern}")
            c.note(f"not-{r.axiom}: d = {[str(v) for v in w.tables['d'].values]}")
    return _timed(1, "metric independence witnesses", 1.0, body)


def criterion_2(fixtures_dir=None) -> CriterionResult:
    def body(c):
        report = check_redundancy(get_theory("metric.reduced"), get_theory("metric.full"), metric_specs())
        for r in report.results:
            c.require(r.status == ResultStatus.CONFIRMED_AT_SIZES and not r.countermodels,
                      f"{r.axiom}: {r.status.value}")
            c.require(len(r.sizes) == 3, f"{r.axiom}: exhausted only {r.sizes}")
        c.note(f"{report.stats['models']} models of the reduced system checked at sizes 1..3")
        spec = SearchSpec(get_theory("metric.reduced"), {"Point": 2, "Real": RationalGrid.parse("0,1,2")})
        out = enumerate_models(spec)
        oracle = naive_models(spec)
        c.require(out.status == SearchStatus.EXHAUSTED, "size-2 search did not finish")
        c.require(out.count == 2 and len(oracle) == 2, f"model counts {out.count} / oracle {len(oracle)}")
        c.require({m.fingerprint() for m in out.models} == {m.fingerprint() for m in oracle},
                  "search and oracle disagree on the model set")
    return _timed(2, "metric redundancy", 10.0, body)


def criterion_3(fixtures_dir=None) -> CriterionResult:
    def body(c):
        gf3 = field_from_order(3)
        reduced = get_theory("ip.reduced")
        full = get_theory("ip.full-ff")
        small = enumerate_models(SearchSpec(reduced, {"V": 2, "F": gf3}))
        c.require(small.status == SearchStatus.EXHAUSTED and small.count == 0,
                  f"size 2: {small.status.value}, {small.count} models")
        big = enumerate_models(SearchSpec(reduced, {"V": 3, "F": gf3}))
        c.require(big.status == SearchStatus.EXHAUSTED, "size 3 search did not finish")
        c.require(big.count >= 1, "no model at size 3")
        derived = [a for a in full.axioms if a.name not in reduced.axiom_names]
        bad = 0
        for m in big.models:
            for a in derived:
                if check_axiom(m, a).status != Status.HOLDS:
                    bad += 1
        c.require(bad == 0, f"{bad} failures of S1-S8/ND at size 3")
        line = get_fixture("ip.gf3.line").interpretation
        c.require(any(canonical_form(m) == canonical_form(line) for m in big.models),
                  "the line <x,y> = xy is not among the size-3 models")
        c.note(f"size 2: 0 models; size 3: {big.count} models, all satisfy S1-S8 and ND")
    return _timed(3, "inner-product redundancy over GF(3)", 60.0, body)


def criterion_4(fixtures_dir=None) -> CriterionResult:
    def body(c):
        full = get_theory("invol.full")
        derived = [full.axiom(n) for n in ("C1", "C2", "C4", "C6")]
        odd, even = invol_specs()
        out3 = enumerate_models(odd)
        c.require(out3.status == SearchStatus.EXHAUSTED and out3.count >= 1, "GF(3) search failed")
        fails = 0
        for m in out3.models:
            for a in derived:
                fails += check_axiom(m, a).status != Status.HOLDS
            for v in verify_involution_identities(m):
                fails += v.status != Status.HOLDS
        c.require(fails == 0, f"GF(3): {fails} failed axiom/identity checks")
        out2 = enumerate_models(even)
        c.require(out2.status == SearchStatus.EXHAUSTED, "GF(2) search failed")
        bad = sum(check_axiom(m, a).status != Status.HOLDS for m in out2.models for a in derived[:3])
        c.require(bad == 0, f"GF(2): {bad} failures of C1/C2/C4")
        c6_fail = [m for m in out2.models if check_axiom(m, full.axiom("C6")).status == Status.FAILS]
        c.require(len(c6_fail) >= 1, "GF(2): no model fails C6")
        gf4 = get_fixture("invol.char2.gf4").interpretation
        c.require(any(m == gf4 for m in c6_fail), "GF(2): the GF(4)/identity-star algebra is missing")
        c.note(f"GF(3): {out3.count} models pass everything; GF(2): {out2.count} models, {len(c6_fail)} fail C6")
    return _timed(4, "involution redundancy", 120.0, body)


def criterion_5(fixtures_dir=None) -> CriterionResult:
    def body(c):
        gf4 = field_from_order(4)
        spec = SearchSpec(get_theory("invol.reduced"), {"F": gf4}, dim=1)
        report = check_redundancy(get_theory("invol.reduced"), get_theory("invol.full"), [spec])
        r = report.result("C2")
        frob = gf4.frobenius()
        c.require(r.status == ResultStatus.COUNTERMODEL, "no C2 countermodel over GF(4)")
        found = False
        for cm in r.countermodels:
            space = cm.model.domains["A"]
            star = [cm.model.apply("star", (space.smul(lam, space.unit),)) for lam in gf4.elements]
            if star == [space.smul(frob[lam], space.unit) for lam in gf4.elements]:
                found = True
        c.require(found, "the Frobenius star is not among the C2 countermodels")
        expected = {2: (3, {Bucket.ZERO: 1, Bucket.ONE: 1, Bucket.UNIT_ENDO: 1}),
                    3: (4, {Bucket.ZERO: 1, Bucket.ONE: 1, Bucket.UNIT_ENDO: 2}),
                    4: (5, {Bucket.ZERO: 1, Bucket.ONE: 1, Bucket.UNIT_ENDO: 3})}
        for q, (count, buckets) in expected.items():
            f = field_from_order(q)
            maps = multiplicative_maps(f)
            brute = {v for v in all_self_maps(f) if classify_map(f, v) is not None}
            c.require(len(maps) == count, f"GF({q}): {len(maps)} maps")
            c.require({m.values for m in maps} == brute, f"GF({q}): maps differ from brute force")
            got = {b: sum(m.bucket == b for m in maps) for b in Bucket}
            c.require(got == buckets, f"GF({q}): buckets {got}")
        c.note("GF(2): 3, GF(3): 4, GF(4): 5 multiplicative maps")
    return _timed(5, "one-dimensional exception and self-map trichotomy", 1.0, body)


def criterion_6(fixtures_dir=None) -> CriterionResult:
    def body(c):
        interp = norm_model(RationalSample.parse(",".join(NORM_SAMPLE)),
                            RationalSample.parse(",".join(NORM_SCALARS)), abs)
        rep = verify_norm_derivations(interp)
        for v in rep.all():
            c.require(v.failures == 0, f"|x|: {v.axiom} fails at {v.witness}")
        theory = get_theory("norm.reduced")
        spec = SearchSpec(theory, {"V": RationalSample(NORM_PLANE),
                                   "K": RationalSample.parse(",".join(NORM_SCALARS)),
                                   "Real": RationalGrid.parse(NORM_GRID)})
        report = check_independence(theory, [spec])
        for r in report.results:
            if c.require(r.status == ResultStatus.WITNESS, f"no witness for not-{r.axiom}"):
                w = r.witness
                base = [a for a in theory.axioms if a.name != r.axiom]
                try:
                    verify_countermodel(w.model, base, theory.axiom(r.axiom))
                except ReportVerificationError as exc:
                    c.require(False, str(exc))
                c.note(f"not-{r.axiom}: norm = {[str(v) for v in w.model.tables['norm'].values]}")
    return _timed(6, "norm derivations and witnesses", 10.0, body)


def criterion_7(fixtures_dir=None) -> CriterionResult:
    def body(c):
        for t in all_theories():
            c.require(parse_theory(serialize_theory(t)) == t, f"round-trip changed {t.name}")
        fixtures = fixtures_from_dir(fixtures_dir or builtin_fixture_dir())
        c.require(len(fixtures) > 0, "no fixtures found")
        for fx in fixtures:
            bad = [ch for ch in fx.check() if not ch.ok]
            c.require(not bad, f"fixture {fx.name}: " + ", ".join(
                f"{ch.axiom} expected {ch.expected}, got {ch.verdict.status.value}" for ch in bad))
        # a report never carries a witness that fails to re-verify
        w3 = get_fixture("metric.w3").interpretation
        theory = get_theory("metric.reduced.split")
        try:
            verify_countermodel(w3, [theory.axiom("M4var")], theory.axiom("M2r"))
            c.require(False, "a non-witness passed report verification")
        except ReportVerificationError:
            pass
        specs = metric_specs() + ip_specs() + invol_specs()
        for spec in specs:
            a = enumerate_models(spec, threads=1)
            b = enumerate_models(spec, threads=1)
            c.require([m.fingerprint() for m in a.models] == [m.fingerprint() for m in b.models],
                      f"serial enumeration is not deterministic for {spec.theory.name} {spec.label()}")
            p = enumerate_models(spec, threads=2)
            c.require(p.count == a.count and [m.fingerprint() for m in p.models] ==
                      [m.fingerprint() for m in a.models],
                      f"parallel and serial results differ for {spec.theory.name} {spec.label()}")
        c.note(f"{len(all_theories())} theories round-trip, {len(fixtures)} fixtures verified, "
               f"{len(specs)} specs serial/parallel equal")
    return _timed(7, "infrastructure properties", None, body)


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7)


def run_all(fixtures_dir=None, only=None) -> List[CriterionResult]:
    out = []
    for i, fn in enumerate(CRITERIA, 1):
        if only and i not in only:
            continue
        out.append(fn(fixtures_dir))
    return out
