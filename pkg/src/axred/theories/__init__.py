"""Builtin theory files and fixture structures.

Theories live in ``data/*.thy`` (one theory per file, file name = theory
name).  Fixtures live in ``fixtures/*.fix`` in a line-oriented format::

    fixture metric.w1
    theory metric.reduced.split          # one or more theory names
    note  d is identically zero
    carrier Point a,b                    # enumerated carrier with element names
    grid Real 0,1,2                      # value-sort codomain (optional)
    field F gf3                          # scalar sort bound to a finite field
    dim 2                                # linear-algebra carrier F^dim
    table d
      a a = 0
      a b = 0
    expect M2r fails

In linear-algebra fixtures the rows of a bilinear symbol give basis products
(``b1 b1 = e+b1``); products with ``e`` follow from the unit law.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional

from ..domains import EnumeratedCarrier, RationalGrid, RationalSample, VectorSpace, parse_field, parse_rational
from ..dsl import parse_theory
from ..errors import CatalogError, FixtureError
from ..kernel import (BILINEAR, Interpretation, Status, Table, UNDEFINED, bilinear_table, check_axiom,
                      unit_products, vector_structure)
from ..syntax import CARRIER, LINEAR_ALGEBRA, SCALAR, VALUE

_DATA = "data"
_FIXTURES = "fixtures"


def _package_dir(sub):
    return resources.files(__name__).joinpath(sub)


def theory_names() -> List[str]:
    return sorted(p.name[:-4] for p in _package_dir(_DATA).iterdir() if p.name.endswith(".thy"))


def fixture_names() -> List[str]:
    return sorted(p.name[:-4] for p in _package_dir(_FIXTURES).iterdir() if p.name.endswith(".fix"))


def theory_text(name) -> str:
    if name not in theory_names():
        raise CatalogError(f"unknown theory {name!r}; valid names: {', '.join(theory_names())}")
    return _package_dir(_DATA).joinpath(name + ".thy").read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def get_theory(name):
    """Parsed builtin theory by catalog name."""
    theory = parse_theory(theory_text(name))
    if theory.name != name:
        raise CatalogError(f"file {name}.thy declares theory {theory.name!r}")
    return theory


def all_theories():
    return [get_theory(n) for n in theory_names()]


def resolve_theory(name_or_path):
    """Catalog name, or a path to a theory file."""
    if name_or_path in theory_names():
        return get_theory(name_or_path)
    p = Path(name_or_path)
    if p.suffix == ".thy" or p.exists():
        if not p.exists():
            raise CatalogError(f"theory file {name_or_path!r} does not exist")
        return parse_theory(p.read_text(encoding="utf-8"))
    raise CatalogError(f"unknown theory {name_or_path!r}; valid names: {', '.join(theory_names())}")


# -- fixtures -------------------------------------------------------------------------

@dataclass
class FixtureCheck:
    axiom: str
    expected: str
    verdict: object

    @property
    def ok(self):
        return self.verdict.status.value.lower() == _STATUS_WORD[self.expected]


_STATUS_WORD = {"holds": "holds", "fails": "fails", "partial": "partial"}


@dataclass
class Fixture:
    name: str
    interpretation: Interpretation
    theory: object
    expected: Dict[str, str]
    note: str = ""
    theory_names: List[str] = field(default_factory=list)

    def check(self) -> List[FixtureCheck]:
        out = []
        for ax, exp in self.expected.items():
            v = check_axiom(self.interpretation, self.theory.axiom(ax))
            out.append(FixtureCheck(ax, exp, v))
        return out

    def verify(self):
        """Raise FixtureError unless every expected verdict is reproduced."""
        bad = [c for c in self.check() if not c.ok]
        if bad:
            detail = ", ".join(f"{c.axiom}: expected {c.expected}, got {c.verdict.status.value}" for c in bad)
            raise FixtureError(f"fixture {self.name}: {detail}")
        return True


def _merged_theory(names):
    theories = [get_theory(n) for n in names]
    base = theories[0]
    axioms = list(base.axioms)
    seen = {a.name for a in axioms}
    for t in theories[1:]:
        if t.signature != base.signature:
            raise FixtureError(f"theories {names[0]} and {t.name} have different signatures")
        for a in t.axioms:
            if a.name not in seen:
                axioms.append(a)
                seen.add(a.name)
    return base.with_axioms(axioms, name="+".join(names))


def parse_fixture(text, source="<fixture>") -> Fixture:
    name = None
    theory_list: List[str] = []
    note = []
    carriers, grids, fields_, samples = {}, {}, {}, {}
    dim = None
    tables: Dict[str, List[tuple]] = {}
    expected: Dict[str, str] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        where = f"{source}:{lineno}"
        if raw[:1].isspace() and current is not None and "=" in line:
            lhs, rhs = line.split("=", 1)
            tables[current].append((tuple(lhs.split()), rhs.strip(), where))
            continue
        head, _, rest = line.strip().partition(" ")
        rest = rest.strip()
        current = None
        if head == "fixture":
            name = rest
        elif head == "theory":
            theory_list = rest.split()
        elif head == "note":
            note.append(rest)
        elif head in ("carrier", "grid", "field", "sample"):
            sort, _, val = rest.partition(" ")
            {"carrier": carriers, "grid": grids, "field": fields_, "sample": samples}[head][sort] = val.strip()
        elif head == "dim":
            dim = int(rest)
        elif head == "table":
            current = rest
            tables.setdefault(rest, [])
        elif head == "expect":
            parts = rest.split()
            if len(parts) != 2 or parts[1] not in _STATUS_WORD:
                raise FixtureError(f"{where}: expected 'expect <axiom> holds|fails|partial'")
            expected[parts[0]] = parts[1]
        else:
            raise FixtureError(f"{where}: unknown directive {head!r}")
    if not name or not theory_list:
        raise FixtureError(f"{source}: fixture needs 'fixture' and 'theory' lines")
    try:
        theory = _merged_theory(theory_list)
        interp = _build_interpretation(theory, carriers, grids, fields_, samples, dim, tables)
    except FixtureError:
        raise
    except (CatalogError, ValueError, KeyError, IndexError) as exc:
        raise FixtureError(f"fixture {name}: {exc}") from exc
    for ax in expected:
        if ax not in theory.axiom_names:
            raise FixtureError(f"fixture {name}: unknown axiom {ax}")
    return Fixture(name, interp, theory, expected, " ".join(note), theory_list)


def _build_interpretation(theory, carriers, grids, fields_, samples, dim, rows):
    sig = theory.signature
    domains = {}
    for s in sig.sorts:
        if s.kind == SCALAR:
            if s.name in fields_:
                domains[s.name] = parse_field(fields_[s.name])
            elif s.name in samples:
                domains[s.name] = RationalSample.parse(samples[s.name])
            else:
                raise FixtureError(f"scalar sort {s.name} is not bound")
        elif s.kind == VALUE:
            domains[s.name] = RationalGrid.parse(grids[s.name]) if s.name in grids else None
    space = None
    for s in sig.sorts:
        if s.kind != CARRIER:
            continue
        if theory.mode == LINEAR_ALGEBRA:
            if dim is None:
                raise FixtureError("linear-algebra fixture needs a dim line")
            scalar = sig.sorts_of_kind(SCALAR)[0].name
            space = VectorSpace(domains[scalar], dim)
            domains[s.name] = space
        elif s.name in carriers:
            names = tuple(n.strip() for n in carriers[s.name].split(","))
            domains[s.name] = EnumeratedCarrier(len(names), names)
        elif s.name in samples:
            domains[s.name] = RationalSample.parse(samples[s.name])
        else:
            raise FixtureError(f"carrier sort {s.name} is not bound")

    def parse_value(sort, text):
        kind = sig.sort(sort).kind
        dom = domains[sort]
        if kind == VALUE or (kind == SCALAR and isinstance(dom, RationalSample)):
            return parse_rational(text)
        if isinstance(dom, RationalSample):
            idx = [dom.name(i) for i in range(len(dom))].index(text)
            return idx
        return dom.element(text)

    tables, consts = {}, {}
    fixed_roles = {}
    for s in sig.sorts:
        dom = domains[s.name]
        if s.kind == CARRIER and isinstance(dom, (VectorSpace, RationalSample)):
            roles, fixed, fconsts = vector_structure(sig, s.name, dom)
            fixed_roles.update(roles)
            tables.update(fixed)
            consts.update(fconsts)
    for f in sig.fns:
        if f.name in tables:
            continue
        given = rows.get(f.name)
        if given is None:
            raise FixtureError(f"no table for symbol {f.name}")
        if space is not None and fixed_roles.get(f.name) == BILINEAR:
            products = dict(unit_products(space))
            for args, val, where in given:
                i, j = (_basis_index(space, a) for a in args)
                products[(i, j)] = space.element(val)
            missing = [(i, j) for i in range(space.dim) for j in range(space.dim) if (i, j) not in products]
            if missing:
                raise FixtureError(f"{f.name}: missing basis products {missing}")
            tables[f.name] = bilinear_table(space, products)
            continue
        shape = tuple(len(domains[a]) for a in f.args)
        size = 1
        for n in shape:
            size *= n
        values = [UNDEFINED] * size
        t = Table(shape, values)
        for args, val, where in given:
            if len(args) != len(f.args):
                raise FixtureError(f"{where}: {f.name} takes {len(f.args)} arguments")
            idxs = []
            for a_sort, a in zip(f.args, args):
                v = parse_value(a_sort, a)
                if sig.sort(a_sort).kind == SCALAR and isinstance(domains[a_sort], RationalSample):
                    v = domains[a_sort].index(v)
                idxs.append(v)
            values[t.flat_index(idxs)] = parse_value(f.result, val)
        tables[f.name] = Table(shape, values)
    for c in sig.consts:
        if c.name in consts:
            continue
        given = rows.get(c.name)
        if not given:
            raise FixtureError(f"no value for constant {c.name}")
        consts[c.name] = parse_value(c.sort, given[0][1])
    return Interpretation(sig, domains, tables, consts, theory.mode)


def _basis_index(space, name):
    for i in range(space.dim):
        if space.basis_name(i) == name:
            return i
    raise FixtureError(f"{name!r} is not a basis vector name")


def load_fixture_file(path) -> Fixture:
    p = Path(path)
    return parse_fixture(p.read_text(encoding="utf-8"), source=p.name)


@lru_cache(maxsize=None)
def get_fixture(name) -> Fixture:
    """Builtin fixture by name, with its expected verdicts verified."""
    if name not in fixture_names():
        raise CatalogError(f"unknown fixture {name!r}; valid names: {', '.join(fixture_names())}")
    text = _package_dir(_FIXTURES).joinpath(name + ".fix").read_text(encoding="utf-8")
    fx = parse_fixture(text, source=name + ".fix")
    if fx.name != name:
        raise FixtureError(f"file {name}.fix declares fixture {fx.name!r}")
    fx.verify()
    return fx


def fixtures_from_dir(path) -> List[Fixture]:
    """Parse every ``*.fix`` file in a directory (without verifying)."""
    return [load_fixture_file(p) for p in sorted(Path(path).glob("*.fix"))]


def builtin_fixture_dir():
    return Path(str(_package_dir(_FIXTURES)))
