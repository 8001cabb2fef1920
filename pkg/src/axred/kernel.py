"""Interpretations and the three-valued evaluator.

Evaluation follows strong Kleene semantics: a table cell that is not yet
filled makes the enclosing atom UNDEFINED, connectives decide whenever the
defined part already fixes the result, and ``check_axiom`` counts undefined
instances as skipped rather than failed.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from types import MappingProxyType
from typing import Dict, Optional

from .domains import EnumeratedCarrier, FiniteField, RationalGrid, RationalSample, VectorSpace, format_rational
from .errors import IllTypedInput, SignatureError, UnsupportedQuantifier
from .syntax import (CARRIER, FREE_TABLE, LINEAR_ALGEBRA, SCALAR, VALUE, And, App, Arith, Axiom, Const, Elem,
                     Eq, Exists, Iff, Implies, Lit, Not, Order, Var, free_vars)


class _Undefined:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNDEFINED"

    def __reduce__(self):
        return _Undefined, ()


UNDEFINED = _Undefined()


class Status(str, Enum):
    HOLDS = "HOLDS"
    FAILS = "FAILS"
    PARTIAL = "PARTIAL"


# symbol roles when a carrier is a fixed vector space (linear-algebra mode or a rational sample)
VECTOR_ADD = "vector-add"
SCALAR_ACTION = "scalar-action"
UNIT = "unit"
ZERO = "zero"
BILINEAR = "bilinear"
FREE = "free"


def structure_roles(signature, vector_sort) -> Dict[str, str]:
    """Role of each symbol when ``vector_sort`` carries a fixed vector-space structure.

    ``add(V,V)->V`` is vector addition, ``smul(F,V)->V`` the scalar action,
    constant ``e`` the unit (first basis vector) and constant ``zero`` the zero
    vector.  Any other ``(V,V)->V`` symbol is a bilinear product given by
    structure constants; everything else is a free table.
    """
    roles = {}
    for f in signature.fns:
        if f.name == "add" and f.args == (vector_sort, vector_sort) and f.result == vector_sort:
            roles[f.name] = VECTOR_ADD
        elif (f.name == "smul" and len(f.args) == 2 and f.args[1] == vector_sort
              and f.result == vector_sort and signature.sort(f.args[0]).kind == SCALAR):
            roles[f.name] = SCALAR_ACTION
        elif f.args == (vector_sort, vector_sort) and f.result == vector_sort:
            roles[f.name] = BILINEAR
        else:
            roles[f.name] = FREE
    for c in signature.consts:
        if c.sort == vector_sort and c.name == "e":
            roles[c.name] = UNIT
        elif c.sort == vector_sort and c.name == "zero":
            roles[c.name] = ZERO
        else:
            roles[c.name] = FREE
    return roles


class RationalArithmetic:
    """Exact arithmetic on Fractions, used for value sorts and rational scalars."""

    @staticmethod
    def from_int(n):
        return Fraction(n)

    @staticmethod
    def add(a, b):
        return a + b

    @staticmethod
    def sub(a, b):
        return a - b

    @staticmethod
    def mul(a, b):
        return a * b

    @staticmethod
    def neg(a):
        return -a


RATIONAL = RationalArithmetic()


class Table:
    """Lookup table for one symbol; arguments are element indices, first argument most significant."""

    __slots__ = ("shape", "values")

    def __init__(self, shape, values):
        self.shape = tuple(shape)
        self.values = tuple(values)
        size = 1
        for s in self.shape:
            size *= s
        if len(self.values) != size:
            raise SignatureError(f"table has {len(self.values)} cells, expected {size}")

    def flat_index(self, idxs):
        i = 0
        for s, a in zip(self.shape, idxs):
            i = i * s + a
        return i

    def get(self, idxs):
        return self.values[self.flat_index(idxs)]

    def cells(self):
        return itertools.product(*(range(s) for s in self.shape))

    def __eq__(self, other):
        return isinstance(other, Table) and self.shape == other.shape and self.values == other.values

    def __hash__(self):
        return hash((self.shape, self.values))

    def __repr__(self):
        return f"Table(shape={self.shape})"


class FixedOp:
    """A symbol with a built-in meaning (vector addition, scalar action, ...)."""

    __slots__ = ("role", "fn")

    def __init__(self, role, fn):
        self.role = role
        self.fn = fn

    def __eq__(self, other):
        return isinstance(other, FixedOp) and self.role == other.role

    def __hash__(self):
        return hash(self.role)

    def __repr__(self):
        return f"FixedOp({self.role})"


class Interpretation:
    """Carriers plus one table (or fixed operation) per symbol.

    ``domains`` maps each sort name to its domain: EnumeratedCarrier,
    VectorSpace or RationalSample for carriers; FiniteField or RationalSample
    for scalars; RationalGrid (or None) for the value sort.  Element values are
    carrier indices, field element codes, or Fractions for rational sorts.
    """

    def __init__(self, signature, domains, tables, consts=None, mode=FREE_TABLE):
        self.signature = signature
        self.domains = MappingProxyType(dict(domains))
        self.tables = MappingProxyType(dict(tables))
        self.consts = MappingProxyType(dict(consts or {}))
        self.mode = mode
        self._validate()

    def _validate(self):
        sig = self.signature
        for s in sig.sorts:
            if s.name not in self.domains:
                raise SignatureError(f"sort {s.name} has no domain")
            dom = self.domains[s.name]
            if s.kind == CARRIER and not isinstance(dom, (EnumeratedCarrier, VectorSpace, RationalSample)):
                raise SignatureError(f"carrier sort {s.name} bound to {dom!r}")
            if s.kind == SCALAR and not isinstance(dom, (FiniteField, RationalSample)):
                raise SignatureError(f"scalar sort {s.name} bound to {dom!r}")
            if s.kind == SCALAR and isinstance(dom, RationalSample) and dom.is_vector:
                raise SignatureError(f"scalar sort {s.name} bound to a vector sample")
            if s.kind == VALUE and dom is not None and not isinstance(dom, RationalGrid):
                raise SignatureError(f"value sort {s.name} bound to {dom!r}")
        for f in sig.fns:
            t = self.tables.get(f.name)
            if t is None:
                raise SignatureError(f"symbol {f.name} has no table")
            if isinstance(t, Table):
                shape = tuple(self.size(a) for a in f.args)
                if t.shape != shape:
                    raise SignatureError(f"table for {f.name} has shape {t.shape}, expected {shape}")
        for c in sig.consts:
            if c.name not in self.consts:
                raise SignatureError(f"constant {c.name} has no value")

    # -- domains ---------------------------------------------------------------

    def sort_kind(self, sort):
        return self.signature.sort(sort).kind

    def size(self, sort):
        dom = self.domains[sort]
        if dom is None:
            raise UnsupportedQuantifier(f"sort {sort} has no finite domain")
        return len(dom)

    def elements(self, sort):
        """Element values of a finite sort, in index order."""
        kind = self.sort_kind(sort)
        dom = self.domains[sort]
        if kind == VALUE:
            raise UnsupportedQuantifier(f"cannot quantify over the ordered-value sort {sort}")
        if isinstance(dom, RationalSample):
            return list(dom.points) if kind == SCALAR else list(range(len(dom)))
        return list(range(len(dom)))

    def index_of(self, sort, value):
        """Position of an element value in its sort, or None if it lies outside."""
        dom = self.domains[sort]
        if self.sort_kind(sort) == SCALAR and isinstance(dom, RationalSample):
            return dom.index(value)
        return value

    def arithmetic(self, sort):
        dom = self.domains.get(sort)
        if isinstance(dom, FiniteField):
            return dom
        return RATIONAL

    def is_rational(self, sort):
        kind = self.sort_kind(sort)
        return kind == VALUE or (kind == SCALAR and isinstance(self.domains[sort], RationalSample))

    def check_value(self, sort, value):
        """Raise IllTypedInput unless ``value`` is an element of ``sort``."""
        if value is UNDEFINED:
            return
        if self.is_rational(sort):
            if not isinstance(value, (Fraction, int)) or isinstance(value, bool):
                raise IllTypedInput(f"{value!r} is not a rational for sort {sort}")
            if self.sort_kind(sort) == SCALAR and self.domains[sort].index(Fraction(value)) is None:
                raise IllTypedInput(f"{value!r} is not in the scalar sample of sort {sort}")
            return
        if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value < self.size(sort):
            raise IllTypedInput(f"{value!r} is not an element of sort {sort}")

    def describe(self, sort, value):
        """Display name of an element value."""
        if value is UNDEFINED:
            return "UNDEFINED"
        dom = self.domains.get(sort)
        if self.is_rational(sort):
            return format_rational(value)
        if isinstance(dom, (EnumeratedCarrier, FiniteField, VectorSpace, RationalSample)):
            return dom.name(value)
        return str(value)

    # -- symbols ---------------------------------------------------------------

    def apply(self, fn_name, args):
        table = self.tables[fn_name]
        if isinstance(table, FixedOp):
            return table.fn(*args)
        sym = self.signature.fn(fn_name)
        idxs = []
        for s, a in zip(sym.args, args):
            i = self.index_of(s, a)
            if i is None:
                return UNDEFINED
            idxs.append(i)
        v = table.get(idxs)
        return v

    def const(self, name):
        return self.consts[name]

    def is_total(self, symbols=None):
        for name, t in self.tables.items():
            if symbols is not None and name not in symbols:
                continue
            if isinstance(t, Table) and any(v is UNDEFINED for v in t.values):
                return False
        for name, v in self.consts.items():
            if (symbols is None or name in symbols) and v is UNDEFINED:
                return False
        return True

    def fingerprint(self):
        """Hashable summary of every searched table; equal models share it."""
        parts = []
        for name in sorted(self.tables):
            t = self.tables[name]
            if isinstance(t, Table):
                parts.append((name, t.values))
        for name in sorted(self.consts):
            parts.append((name, self.consts[name]))
        return tuple(parts)

    def fingerprint_values(self):
        """Flat list of searched table values and constants, in fingerprint order."""
        out = []
        for _, v in self.fingerprint():
            out.extend(v if isinstance(v, tuple) else (v,))
        return out

    def __eq__(self, other):
        return (isinstance(other, Interpretation) and self.signature == other.signature
                and dict(self.domains) == dict(other.domains) and self.fingerprint() == other.fingerprint())

    def __hash__(self):
        return hash(self.fingerprint())

    def with_tables(self, **tables):
        merged = dict(self.tables)
        merged.update(tables)
        return Interpretation(self.signature, self.domains, merged, self.consts, self.mode)

    def extend(self, signature, domains=None, tables=None, consts=None):
        """Copy with a larger signature and extra tables (used for derived functionals)."""
        d = dict(self.domains)
        d.update(domains or {})
        t = dict(self.tables)
        t.update(tables or {})
        c = dict(self.consts)
        c.update(consts or {})
        return Interpretation(signature, d, t, c, self.mode)

    def table_listing(self):
        """{symbol: {(arg names...): result name}} for searched tables and constants."""
        out = {}
        for f in self.signature.fns:
            t = self.tables[f.name]
            if not isinstance(t, Table):
                continue
            rows = {}
            elems = [self._arg_elements(s) for s in f.args]
            for idxs, combo in zip(t.cells(), itertools.product(*elems)):
                names = tuple(self.describe(s, a) for s, a in zip(f.args, combo))
                rows[names] = self.describe(f.result, t.get(idxs))
            out[f.name] = rows
        for c in self.signature.consts:
            if self.mode == LINEAR_ALGEBRA and c.name == "e":
                continue
            out[c.name] = self.describe(c.sort, self.consts[c.name])
        return out

    def _arg_elements(self, sort):
        return self.elements(sort)

    def __repr__(self):
        return f"Interpretation({self.table_listing()!r})"


# -- evaluation ----------------------------------------------------------------

def _lookup_var(env, var):
    try:
        return env[var.name]
    except KeyError:
        raise IllTypedInput(f"variable {var.name} is not bound") from None


def eval_term(interp, term, env):
    """Value of ``term`` under ``env``, or UNDEFINED if a consulted cell is empty."""
    if isinstance(term, Var):
        v = _lookup_var(env, term)
        interp.check_value(term.sort, v)
        return Fraction(v) if interp.is_rational(term.sort) and v is not UNDEFINED else v
    if isinstance(term, Elem):
        return term.value
    if isinstance(term, Const):
        return interp.const(term.name)
    if isinstance(term, Lit):
        return interp.arithmetic(term.sort).from_int(term.value)
    if isinstance(term, App):
        args = []
        for a in term.args:
            v = eval_term(interp, a, env)
            if v is UNDEFINED:
                return UNDEFINED
            args.append(v)
        return interp.apply(term.fn, args)
    if isinstance(term, Arith):
        vals = []
        for a in term.args:
            v = eval_term(interp, a, env)
            if v is UNDEFINED:
                return UNDEFINED
            vals.append(v)
        return _arith(interp, term, vals)
    raise TypeError(f"not a term: {term!r}")


def _arith(interp, term, vals):
    ar = interp.arithmetic(term.sort)
    if ar is RATIONAL:
        for a, v in zip(term.args, vals):
            if not isinstance(v, Fraction):
                raise IllTypedInput(
                    f"operand of sort {a.sort} is not rational; only rational scalars mix with {term.sort}")
    op = term.op
    if op == "+":
        return ar.add(vals[0], vals[1])
    if op == "-":
        return ar.sub(vals[0], vals[1])
    if op == "*":
        return ar.mul(vals[0], vals[1])
    if op == "neg":
        return ar.neg(vals[0])
    if op == "abs":
        if ar is not RATIONAL:
            raise IllTypedInput("abs needs a rational argument")
        return abs(vals[0])
    raise TypeError(f"unknown arithmetic op {op!r}")


def _and3(a, b):
    if a is False or b is False:
        return False
    if a is True and b is True:
        return True
    return UNDEFINED


def _not3(a):
    return UNDEFINED if a is UNDEFINED else (not a)


def eval_formula(interp, formula, env):
    """True, False or UNDEFINED under strong Kleene semantics."""
    if isinstance(formula, Eq):
        left = eval_term(interp, formula.left, env)
        right = eval_term(interp, formula.right, env)
        if left is UNDEFINED or right is UNDEFINED:
            return UNDEFINED
        return left == right
    if isinstance(formula, Order):
        left = eval_term(interp, formula.left, env)
        right = eval_term(interp, formula.right, env)
        if left is UNDEFINED or right is UNDEFINED:
            return UNDEFINED
        if not isinstance(left, Fraction) or not isinstance(right, Fraction):
            raise IllTypedInput("order comparison needs rational operands")
        return left <= right if formula.op == "<=" else left < right
    if isinstance(formula, Not):
        return _not3(eval_formula(interp, formula.body, env))
    if isinstance(formula, And):
        a = eval_formula(interp, formula.left, env)
        if a is False:
            return False
        return _and3(a, eval_formula(interp, formula.right, env))
    if isinstance(formula, Implies):
        a = eval_formula(interp, formula.left, env)
        if a is False:
            return True
        b = eval_formula(interp, formula.right, env)
        if b is True:
            return True
        if a is True and b is False:
            return False
        return UNDEFINED
    if isinstance(formula, Iff):
        a = eval_formula(interp, formula.left, env)
        b = eval_formula(interp, formula.right, env)
        if a is UNDEFINED or b is UNDEFINED:
            return UNDEFINED
        return a == b
    if isinstance(formula, Exists):
        var = formula.var
        result = False
        inner = dict(env)
        for value in interp.elements(var.sort):
            inner[var.name] = value
            r = eval_formula(interp, formula.body, inner)
            if r is True:
                return True
            if r is UNDEFINED:
                result = UNDEFINED
        return result
    raise TypeError(f"not a formula: {formula!r}")


@dataclass(frozen=True)
class Verdict:
    axiom: str
    status: Status
    witness: Optional[Dict[str, object]] = None
    checked: int = 0
    skipped: int = 0
    failures: int = 0
    guard: str = field(default="any", compare=False)
    guard_applies: bool = field(default=True, compare=False)

    @property
    def holds(self):
        return self.status == Status.HOLDS

    @property
    def fails(self):
        return self.status == Status.FAILS

    def witness_names(self, interp, formula):
        if self.witness is None:
            return None
        sorts = {v.name: v.sort for v in free_vars(formula)}
        return {k: interp.describe(sorts[k], v) for k, v in self.witness.items()}


def instances(interp, formula):
    """All assignments to the free variables, lexicographic in element index order."""
    variables = free_vars(formula)
    domains = [interp.elements(v.sort) for v in variables]
    for combo in itertools.product(*domains):
        yield {v.name: c for v, c in zip(variables, combo)}


def check_axiom(interp, axiom, name=None) -> Verdict:
    """Evaluate an axiom at every instance of its free variables.

    FAILS carries the lexicographically first failing assignment; instances
    that evaluate to UNDEFINED are skipped, so HOLDS means no failures and no
    skips.
    """
    if isinstance(axiom, Axiom):
        name = name or axiom.name
        formula = axiom.formula
    else:
        formula = axiom
        name = name or "formula"
    checked = skipped = failures = 0
    witness = None
    for env in instances(interp, formula):
        r = eval_formula(interp, formula, env)
        if r is UNDEFINED:
            skipped += 1
            continue
        checked += 1
        if r is False:
            failures += 1
            if witness is None:
                witness = env
    if failures:
        status = Status.FAILS
    elif skipped:
        status = Status.PARTIAL
    else:
        status = Status.HOLDS
    return Verdict(name, status, witness, checked, skipped, failures)


def satisfies(interp, axioms):
    """True when no axiom fails (partial instances are tolerated)."""
    return all(check_axiom(interp, a).status != Status.FAILS for a in axioms)


# -- building interpretations ----------------------------------------------------

def vector_structure(signature, vector_sort, space, scalar_sort=None):
    """Fixed operations and constants for a carrier bound to a vector space or rational sample."""
    roles = structure_roles(signature, vector_sort)
    tables, consts = {}, {}
    for name, role in roles.items():
        if role == VECTOR_ADD:
            if isinstance(space, VectorSpace):
                tables[name] = FixedOp(role, space.add)
            else:
                tables[name] = FixedOp(role, _sample_add(space))
        elif role == SCALAR_ACTION:
            if isinstance(space, VectorSpace):
                tables[name] = FixedOp(role, space.smul)
            else:
                tables[name] = FixedOp(role, _sample_scale(space))
        elif role == UNIT:
            if not isinstance(space, VectorSpace):
                raise SignatureError("unit constant e needs a linear-algebra carrier")
            consts[name] = space.unit
        elif role == ZERO:
            if isinstance(space, VectorSpace):
                consts[name] = 0
            else:
                z = space.index(space.zero())
                consts[name] = UNDEFINED if z is None else z
    return roles, tables, consts


def _sample_add(sample):
    def add(a, b):
        i = sample.index(sample.add(sample.points[a], sample.points[b]))
        return UNDEFINED if i is None else i
    return add


def _sample_scale(sample):
    def scale(lam, a):
        i = sample.index(sample.scale(lam, sample.points[a]))
        return UNDEFINED if i is None else i
    return scale


def bilinear_table(space, products):
    """Full multiplication table of the bilinear product with given basis products.

    ``products[(i, j)]`` is the vector index of b_i * b_j.
    """
    f = space.field
    n = space.dim
    out = []
    for x in range(space.size):
        cx = space.coords[x]
        for y in range(space.size):
            cy = space.coords[y]
            acc = 0
            for i in range(n):
                if not cx[i]:
                    continue
                for j in range(n):
                    if not cy[j]:
                        continue
                    acc = space.add(acc, space.smul(f.mul(cx[i], cy[j]), products[(i, j)]))
            out.append(acc)
    return Table((space.size, space.size), out)


def unit_products(space):
    """Basis products forced by the unit law e*x = x*e = x."""
    fixed = {}
    for j in range(space.dim):
        fixed[(0, j)] = space.basis(j)
        fixed[(j, 0)] = space.basis(j)
    return fixed
