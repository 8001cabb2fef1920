"""Redundancy and independence analyses, plus derived-identity checks.

Both analyses are enumerate-and-test: models of a base theory are generated
by the search module and each candidate target axiom is evaluated on them
with the kernel.  Every countermodel placed in a report is re-checked against
the kernel before the report is returned.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional

from .domains import RationalGrid, RationalSample, VectorSpace, format_rational
from .dsl import parse_formula
from .errors import PreconditionError, ReportVerificationError, SignatureMismatch
from .kernel import (BILINEAR, Interpretation, Status, Table, UNDEFINED, Verdict, check_axiom, eval_formula,
                     structure_roles, vector_structure)
from .search import ModelStream, SearchStatus, enumerate_models, witness_key
from .syntax import CARRIER, SCALAR, VALUE, Axiom, FnSymbol, Signature, free_vars

DEFAULT_CAP = 64
LISTED = 16


class ResultStatus(str, Enum):
    CONFIRMED_AT_SIZES = "CONFIRMED_AT_SIZES"
    COUNTERMODEL = "COUNTERMODEL"
    WITNESS = "WITNESS"
    NOT_FOUND_AT_SIZES = "NOT_FOUND_AT_SIZES"
    BUDGET_EXCEEDED = "BUDGET_EXCEEDED"


# JSON report layout shared by every CLI command (JSON Schema, draft 2020-12).
_COUNTERMODEL = {
    "type": "object",
    "required": ["model", "assignment", "spec"],
    "properties": {
        "model": {"type": "object"},
        "assignment": {"type": ["object", "null"], "additionalProperties": {"type": ["string", "number"]}},
        "spec": {"type": "string"},
    },
}
_ASSIGNMENT = {"type": "object", "additionalProperties": {"type": ["string", "number"]}}
RESULT_STATUSES = ([s.value for s in ResultStatus] + [s.value for s in Status]
                   + ["EXHAUSTED", "OK", "MISMATCH", "PASS", "FAIL"])
REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["analysis", "theory", "specs", "results", "stats"],
    "properties": {
        "analysis": {"enum": ["redundancy", "independence", "enumerate", "classify-smaps", "identities",
                              "norm-derivations", "acceptance"]},
        "theory": {"type": "string"},
        "reduced": {"type": "string"},
        "specs": {"type": "array", "items": {"type": "object"}},
        "results": {"type": "array", "items": {"$ref": "#/$defs/result"}},
        "stats": {"type": "object"},
        "independence": {"$ref": "#"},
    },
    "if": {"properties": {"analysis": {"const": "redundancy"}}},
    "then": {"required": ["reduced"]},
    "$defs": {
        "countermodel": _COUNTERMODEL,
        "result": {
            "type": "object",
            "required": ["axiom", "status", "checked", "skipped"],
            "properties": {
                "axiom": {"type": "string"},
                "status": {"enum": RESULT_STATUSES},
                "checked": {"type": "integer", "minimum": 0},
                "skipped": {"type": "integer", "minimum": 0},
                "models": {"type": "integer", "minimum": 0},
                "sizes": {"type": "array"},
                "budget_exceeded": {"type": "array", "items": {"type": "string"}},
                "witness": {"oneOf": [{"$ref": "#/$defs/countermodel"}, _ASSIGNMENT]},
                "countermodels": {"type": "integer", "minimum": 1},
                "countermodel_list": {"type": "array", "items": {"$ref": "#/$defs/countermodel"}},
                "guard": {"type": "string"},
                "guard_applies": {"type": "boolean"},
            },
        },
    },
}


# -- presentation helpers ------------------------------------------------------------

def model_summary(interp) -> Dict[str, object]:
    """JSON-friendly rendering of the searched tables.

    Bilinear products on F^n are listed on basis pairs only.
    """
    out: Dict[str, object] = {}
    sig = interp.signature
    space = None
    vec_sort = None
    for s in sig.sorts:
        if s.kind == CARRIER and isinstance(interp.domains[s.name], VectorSpace):
            space, vec_sort = interp.domains[s.name], s.name
    roles = structure_roles(sig, vec_sort) if space is not None else {}
    for f in sig.fns:
        t = interp.tables[f.name]
        if not isinstance(t, Table):
            continue
        rows = {}
        if roles.get(f.name) == BILINEAR:
            for i in range(1, space.dim):
                for j in range(1, space.dim):
                    bi, bj = space.basis(i), space.basis(j)
                    rows[f"{space.name(bi)}*{space.name(bj)}"] = space.name(t.get((bi, bj)))
            out[f.name] = rows
            continue
        for (names, value) in interp.table_listing()[f.name].items():
            rows[f"{f.name}({','.join(names)})"] = value
        out[f.name] = rows
    for c in sig.consts:
        if space is not None and c.name == "e":
            continue
        if c.name in roles and roles[c.name] != "free":
            continue
        out[c.name] = interp.describe(c.sort, interp.consts[c.name])
    return out


def simplicity_key(cm):
    """Witness ranking from the search module, then smallest tables."""
    fp = tuple((0, 0) if v is UNDEFINED else (1, v) for v in cm.model.fingerprint_values())
    return witness_key(cm.model, cm.verdict) + (fp,)


@dataclass
class Countermodel:
    model: Interpretation
    verdict: Verdict
    spec_label: str = ""
    formula: object = None

    def assignment(self):
        return self.verdict.witness_names(self.model, self.formula) if self.formula is not None else None

    def as_dict(self):
        return {"model": model_summary(self.model), "assignment": self.assignment(), "spec": self.spec_label}


def verify_countermodel(model, base_axioms, target) -> Verdict:
    """Re-check a countermodel; raises ReportVerificationError if it does not hold up."""
    for a in base_axioms:
        v = check_axiom(model, a)
        if v.status == Status.FAILS:
            raise ReportVerificationError(f"countermodel violates base axiom {a.name} at {v.witness}")
    v = check_axiom(model, target)
    if v.status != Status.FAILS:
        raise ReportVerificationError(f"countermodel does not falsify {target.name}")
    if eval_formula(model, target.formula, v.witness) is not False:
        raise ReportVerificationError(f"witness for {target.name} does not re-evaluate to false")
    return v


@dataclass
class AxiomResult:
    axiom: str
    status: ResultStatus
    countermodels: List[Countermodel] = field(default_factory=list)
    sizes: List[str] = field(default_factory=list)
    budget_exceeded: List[str] = field(default_factory=list)
    models: int = 0
    checked: int = 0
    skipped: int = 0

    @property
    def witness(self) -> Optional[Countermodel]:
        if not self.countermodels:
            return None
        return min(self.countermodels, key=simplicity_key)

    @property
    def first(self) -> Optional[Countermodel]:
        return self.countermodels[0] if self.countermodels else None

    def as_dict(self):
        d = {"axiom": self.axiom, "status": self.status.value, "checked": self.checked,
             "skipped": self.skipped, "sizes": list(self.sizes), "models": self.models}
        if self.budget_exceeded:
            d["budget_exceeded"] = list(self.budget_exceeded)
        if self.countermodels:
            d["witness"] = self.witness.as_dict()
            d["countermodels"] = len(self.countermodels)
            d["countermodel_list"] = [cm.as_dict() for cm in self.countermodels[:LISTED]]
        return d


@dataclass
class _Report:
    analysis: str
    theory: str
    specs: list
    results: List[AxiomResult]
    stats: dict

    def result(self, axiom) -> AxiomResult:
        for r in self.results:
            if r.axiom == axiom:
                return r
        raise KeyError(axiom)

    def statuses(self):
        return {r.axiom: r.status for r in self.results}

    def to_dict(self):
        return {"analysis": self.analysis, "theory": self.theory,
                "specs": [s.describe() for s in self.specs],
                "results": [r.as_dict() for r in self.results], "stats": dict(self.stats)}


@dataclass
class RedundancyReport(_Report):
    reduced: str = ""

    @property
    def all_confirmed(self):
        return all(r.status == ResultStatus.CONFIRMED_AT_SIZES for r in self.results)

    @property
    def any_countermodel(self):
        return any(r.status == ResultStatus.COUNTERMODEL for r in self.results)

    def to_dict(self):
        d = super().to_dict()
        d["reduced"] = self.reduced
        return d


@dataclass
class IndependenceReport(_Report):
    @property
    def all_witnessed(self):
        return all(r.status == ResultStatus.WITNESS for r in self.results)


def _check_same_signature(reduced, full):
    if reduced.signature != full.signature:
        a = {f.name for f in reduced.signature.fns} | {c.name for c in reduced.signature.consts}
        b = {f.name for f in full.signature.fns} | {c.name for c in full.signature.consts}
        diff = sorted(a ^ b) or ["sort or symbol typing"]
        raise SignatureMismatch(f"{reduced.name} and {full.name} differ in: {', '.join(diff)}")
    if reduced.mode != full.mode:
        raise SignatureMismatch(f"{reduced.name} and {full.name} use different modes")


def _models(spec, threads):
    """(iterable of models, finisher returning (status, stats))."""
    if threads and threads > 1:
        out = enumerate_models(spec, threads=threads)
        return out.models, lambda: (out.status, out.stats)
    stream = ModelStream(spec)
    return stream, lambda: (stream.status or SearchStatus.EXHAUSTED, stream.stats)


def _stats_total(acc, stats):
    acc["nodes"] += stats.nodes
    acc["propagated"] += stats.propagated


def check_redundancy(reduced, full, specs, threads=1, cap=DEFAULT_CAP) -> RedundancyReport:
    """Search models of ``reduced`` for violations of the axioms only ``full`` has."""
    _check_same_signature(reduced, full)
    start = time.monotonic()
    derived = [a for a in full.axioms if a.name not in set(reduced.axiom_names)]
    results = {a.name: AxiomResult(a.name, ResultStatus.CONFIRMED_AT_SIZES) for a in derived}
    totals = {"nodes": 0, "propagated": 0, "models": 0}
    specs = [s.with_theory(reduced) for s in specs]
    for spec in specs:
        label = spec.label()
        models, finish = _models(spec, threads)
        for m in models:
            totals["models"] += 1
            for a in derived:
                r = results[a.name]
                r.models += 1
                v = check_axiom(m, a)
                r.checked += v.checked
                r.skipped += v.skipped
                if v.status == Status.FAILS and len(r.countermodels) < cap:
                    verify_countermodel(m, reduced.axioms, a)
                    r.countermodels.append(Countermodel(m, v, label, a.formula))
        status, stats = finish()
        _stats_total(totals, stats)
        for r in results.values():
            if status == SearchStatus.EXHAUSTED:
                r.sizes.append(label)
            else:
                r.budget_exceeded.append(label)
    for r in results.values():
        if r.countermodels:
            r.status = ResultStatus.COUNTERMODEL
        elif r.budget_exceeded:
            r.status = ResultStatus.BUDGET_EXCEEDED
    totals["elapsed_s"] = round(time.monotonic() - start, 4)
    return RedundancyReport("redundancy", full.name, specs, [results[a.name] for a in derived], totals,
                            reduced=reduced.name)


def check_independence(theory, specs, threads=1, cap=DEFAULT_CAP) -> IndependenceReport:
    """For each axiom, look for a model of the others that violates it."""
    if len(theory.axioms) < 2:
        raise PreconditionError("independence needs a theory with at least two axioms")
    start = time.monotonic()
    totals = {"nodes": 0, "propagated": 0, "models": 0}
    results = []
    for target in theory.axioms:
        base = theory.without(target.name)
        r = AxiomResult(target.name, ResultStatus.NOT_FOUND_AT_SIZES)
        for spec in specs:
            spec = spec.with_theory(base)
            label = spec.label()
            stopped = False
            if threads and threads > 1:
                models, finish = _models(spec, threads)
            else:
                stream = ModelStream(spec)
                models = stream
                finish = lambda s=stream: (s.status or SearchStatus.EXHAUSTED, s.stats)  # noqa: E731
            for m in models:
                totals["models"] += 1
                r.models += 1
                v = check_axiom(m, target)
                r.checked += v.checked
                r.skipped += v.skipped
                if v.status == Status.FAILS:
                    verify_countermodel(m, base.axioms, target)
                    r.countermodels.append(Countermodel(m, v, label, target.formula))
                    if len(r.countermodels) >= cap:
                        stopped = True
                        break
            status, stats = finish()
            _stats_total(totals, stats)
            if stopped or status == SearchStatus.EXHAUSTED:
                r.sizes.append(label)
            else:
                r.budget_exceeded.append(label)
        if r.countermodels:
            r.status = ResultStatus.WITNESS
        elif r.budget_exceeded:
            r.status = ResultStatus.BUDGET_EXCEEDED
        results.append(r)
    totals["elapsed_s"] = round(time.monotonic() - start, 4)
    return IndependenceReport("independence", theory.name, list(specs), results, totals)


# -- involution algebras -----------------------------------------------------------------

ANY = "any"
DIM2 = "dim>=2"
DIM2_ODD = "dim>=2, chr!=2"

IDENTITIES = (
    ("double-star", "star(star(x)) = add(x, smul(t(x) - t(star(x)), e))", ANY),
    ("star-of-scalar", "star(smul(l, e)) = smul(-(l + t(smul(l, e))), e)", ANY),
    ("star-of-multiple", "star(smul(l, x)) = smul(-(l + t(smul(l, e))), star(x))", ANY),
    ("quadratic-star", "add(add(mul(x, x), smul(t(x), x)), mul(x, star(x))) = smul(0, e)", ANY),
    ("star-of-sum", "star(add(x, y)) = add(smul(t(x) + t(y) - t(add(x, y)), e), add(star(x), star(y)))", ANY),
    ("unit-fixed", "star(e) = e", DIM2),
    ("trace-of-unit-multiple", "t(smul(l, e)) = -2 * l", DIM2),
    ("trace-of-unit", "t(e) = -2", DIM2),
    ("trace-homogeneous", "t(smul(l, x)) = l * t(x)", DIM2),
    ("trace-additive", "t(add(x, y)) = t(x) + t(y)", DIM2),
    ("trace-star", "t(star(x)) = t(x)", DIM2),
    ("C1", "star(add(x, y)) = add(star(x), star(y))", DIM2),
    ("C2", "star(smul(l, x)) = smul(l, star(x))", DIM2),
    ("C4", "star(star(x)) = x", DIM2),
    ("C6", "exists l:F. mul(x, star(x)) = smul(l, e)", DIM2_ODD),
    ("quadratic-form", "add(add(mul(x, x), smul(t(x), x)), smul(n(x), e)) = smul(0, e)", DIM2_ODD),
)


@dataclass
class DerivedFunctionals:
    """t(x) with t(x)e = -(x + x*), and n(x) with n(x)e = x*x* where that product is a multiple of e."""

    space: VectorSpace
    t: Dict[int, int]
    n: Dict[int, Optional[int]]

    @property
    def n_total(self):
        return all(v is not None for v in self.n.values())

    def t_table(self):
        return Table((self.space.size,), [self.t[x] for x in range(self.space.size)])

    def n_table(self):
        return Table((self.space.size,), [UNDEFINED if self.n[x] is None else self.n[x]
                                          for x in range(self.space.size)])


def _algebra_parts(interp):
    sig = interp.signature
    carriers = [s.name for s in sig.sorts if s.kind == CARRIER]
    scalars = [s.name for s in sig.sorts if s.kind == SCALAR]
    if len(carriers) != 1 or len(scalars) != 1 or not isinstance(interp.domains[carriers[0]], VectorSpace):
        raise PreconditionError("expected a linear-algebra interpretation with one carrier and one scalar sort")
    for name in ("star", "mul"):
        if sig.fn(name) is None:
            raise PreconditionError(f"the algebra signature has no symbol {name}")
    return carriers[0], scalars[0], interp.domains[carriers[0]]


def derived_functionals(interp) -> DerivedFunctionals:
    _, _, space = _algebra_parts(interp)
    f = space.field
    multiples = {space.smul(lam, space.unit): lam for lam in f.elements}
    t, n = {}, {}
    for x in range(space.size):
        sx = interp.apply("star", (x,))
        s = space.add(x, sx)
        if s not in multiples:
            raise PreconditionError(f"C5 fails at x = {space.name(x)}: x + x* = {space.name(s)} is not a multiple of e")
        t[x] = f.neg(multiples[s])
        p = interp.apply("mul", (x, sx))
        n[x] = multiples.get(p)
    return DerivedFunctionals(space, t, n)


def _guard_applies(guard, space):
    if guard == ANY:
        return True
    if space.dim < 2:
        return False
    if guard == DIM2_ODD:
        return space.field.characteristic != 2
    return True


def verify_involution_identities(interp) -> List[Verdict]:
    """Check the trace/star identities on an algebra satisfying C3 and C5.

    Each verdict carries its guard and whether the guard applies to this
    algebra's dimension and characteristic.
    """
    vec, scal, space = _algebra_parts(interp)
    funcs = derived_functionals(interp)
    sig = interp.signature
    ext = Signature(sig.sorts, sig.fns + (FnSymbol("t", (vec,), scal), FnSymbol("n", (vec,), scal)), sig.consts)
    model = interp.extend(ext, tables={"t": funcs.t_table(), "n": funcs.n_table()})
    out = []
    for name, text, guard in IDENTITIES:
        formula = parse_formula(text, ext)
        v = check_axiom(model, Axiom(name, formula))
        out.append(replace(v, guard=guard, guard_applies=_guard_applies(guard, space)))
    return out


def identity_formula(name, interp):
    vec, scal, _ = _algebra_parts(interp)
    sig = interp.signature
    ext = Signature(sig.sorts, sig.fns + (FnSymbol("t", (vec,), scal), FnSymbol("n", (vec,), scal)), sig.consts)
    for n, text, _ in IDENTITIES:
        if n == name:
            return parse_formula(text, ext)
    raise KeyError(name)


def group_by_guard(verdicts):
    groups: Dict[str, List[Verdict]] = {}
    for v in verdicts:
        groups.setdefault(v.guard, []).append(v)
    return groups


# -- norms on rational samples ------------------------------------------------------------------

NORM_STEPS = (
    ("zero-scaling-bound", "norm(smul(0, x)) <= 0"),
    ("norm-of-zero", "norm(zero) = 0"),
    ("N1", "0 <= norm(x)"),
    ("N2", "norm(x) = 0 <-> x = zero"),
    ("N3-upper", "norm(smul(l, x)) <= abs(l) * norm(x)"),
    ("N3-lower", "not l = 0 -> abs(l) * norm(x) <= norm(smul(l, x))"),
    ("N3", "norm(smul(l, x)) = abs(l) * norm(x)"),
)


@dataclass
class NormDerivationReport:
    hypotheses: List[Verdict]
    steps: List[Verdict]

    @property
    def hypotheses_hold(self):
        return all(v.status != Status.FAILS for v in self.hypotheses)

    @property
    def steps_hold(self):
        return all(v.status != Status.FAILS for v in self.steps)

    @property
    def consistent(self):
        """The derivation is not contradicted: hypotheses without failures imply steps without failures."""
        return not self.hypotheses_hold or self.steps_hold

    def all(self):
        return list(self.hypotheses) + list(self.steps)


def norm_model(points, scalars, norm, theory=None, grid=None) -> Interpretation:
    """Interpretation of the norm signature on a rational sample.

    ``norm`` is a callable on sample points or a sequence of values in point order.
    """
    from .theories import get_theory
    if not points:
        raise PreconditionError("the sample is empty")
    theory = theory or get_theory("norm.reduced")
    sig = theory.signature
    sample = points if isinstance(points, RationalSample) else RationalSample(tuple(points))
    scal = scalars if isinstance(scalars, RationalSample) else RationalSample(tuple(scalars))
    if callable(norm):
        values = [Fraction(norm(p)) for p in sample.points]
    else:
        values = [Fraction(v) for v in norm]
    if len(values) != len(sample):
        raise PreconditionError("one norm value per sample point is required")
    vec = [s.name for s in sig.sorts if s.kind == CARRIER][0]
    sc = [s.name for s in sig.sorts if s.kind == SCALAR][0]
    val = [s.name for s in sig.sorts if s.kind == VALUE][0]
    roles, fixed, consts = vector_structure(sig, vec, sample)
    tables = dict(fixed)
    tables["norm"] = Table((len(sample),), values)
    if grid is None:
        grid = RationalGrid(tuple(sorted(set(values))))
    domains = {vec: sample, sc: scal, val: grid}
    return Interpretation(sig, domains, tables, consts)


def verify_norm_derivations(interp) -> NormDerivationReport:
    """Instance-wise check of the reduced norm laws and of what they imply on the sample."""
    from .theories import get_theory
    dom = [interp.domains[s.name] for s in interp.signature.sorts if s.kind == CARRIER]
    if not dom or len(dom[0]) == 0:
        raise PreconditionError("the sample is empty")
    reduced = get_theory("norm.reduced")
    hyps = [check_axiom(interp, a) for a in reduced.axioms]
    steps = []
    for name, text in NORM_STEPS:
        steps.append(check_axiom(interp, Axiom(name, parse_formula(text, interp.signature))))
    return NormDerivationReport(hyps, steps)


def verdict_dict(v, interp=None, formula=None):
    d = {"axiom": v.axiom, "status": v.status.value, "checked": v.checked, "skipped": v.skipped}
    if v.guard != ANY or not v.guard_applies:
        d["guard"] = v.guard
        d["guard_applies"] = v.guard_applies
    if v.witness is not None:
        if interp is not None and formula is not None:
            d["witness"] = v.witness_names(interp, formula)
        else:
            d["witness"] = {k: (format_rational(x) if isinstance(x, Fraction) else x) for k, x in v.witness.items()}
    return d
