"""Signatures, terms, formulas and theories.

All nodes are frozen dataclasses, so structural equality and hashing come for
free and theories can be shared between threads and pickled to worker
processes.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Tuple, Union

from .errors import SignatureError

CARRIER = "carrier"
SCALAR = "scalar"
VALUE = "value"
SORT_KINDS = (CARRIER, SCALAR, VALUE)

FREE_TABLE = "free-table"
LINEAR_ALGEBRA = "linear-algebra"


@dataclass(frozen=True, order=True)
class Sort:
    name: str
    kind: str

    def __post_init__(self):
        if self.kind not in SORT_KINDS:
            raise SignatureError(f"unknown sort kind {self.kind!r} for sort {self.name}")

    @property
    def numeric(self):
        return self.kind in (SCALAR, VALUE)


@dataclass(frozen=True, order=True)
class FnSymbol:
    name: str
    args: Tuple[str, ...]
    result: str

    @property
    def arity(self):
        return len(self.args)


@dataclass(frozen=True, order=True)
class ConstSymbol:
    name: str
    sort: str


@dataclass(frozen=True)
class Signature:
    """Sorts and symbols of a theory.

    Declarations are kept sorted by name, so two signatures declaring the same
    things in a different order compare equal.
    """

    sorts: Tuple[Sort, ...] = ()
    fns: Tuple[FnSymbol, ...] = ()
    consts: Tuple[ConstSymbol, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "sorts", tuple(sorted(self.sorts)))
        object.__setattr__(self, "fns", tuple(sorted(self.fns)))
        object.__setattr__(self, "consts", tuple(sorted(self.consts)))
        self._validate()

    def _validate(self):
        sort_names = [s.name for s in self.sorts]
        if len(set(sort_names)) != len(sort_names):
            raise SignatureError("duplicate sort name")
        symbols = [f.name for f in self.fns] + [c.name for c in self.consts]
        dupes = sorted({n for n in symbols if symbols.count(n) > 1})
        if dupes:
            raise SignatureError(f"duplicate symbol name(s): {', '.join(dupes)}")
        clash = set(symbols) & set(sort_names)
        if clash:
            raise SignatureError(f"symbol name(s) clash with sort names: {', '.join(sorted(clash))}")
        declared = set(sort_names)
        for f in self.fns:
            for s in (*f.args, f.result):
                if s not in declared:
                    raise SignatureError(f"symbol {f.name} uses undeclared sort {s}")
        for c in self.consts:
            if c.sort not in declared:
                raise SignatureError(f"constant {c.name} uses undeclared sort {c.sort}")
        if sum(1 for s in self.sorts if s.kind == VALUE) > 1:
            raise SignatureError("at most one ordered-value sort is allowed")

    def sort(self, name) -> Sort:
        for s in self.sorts:
            if s.name == name:
                return s
        raise SignatureError(f"unknown sort {name}")

    def has_sort(self, name):
        return any(s.name == name for s in self.sorts)

    def fn(self, name) -> Optional[FnSymbol]:
        for f in self.fns:
            if f.name == name:
                return f
        return None

    def const(self, name) -> Optional[ConstSymbol]:
        for c in self.consts:
            if c.name == name:
                return c
        return None

    def sorts_of_kind(self, kind):
        return [s for s in self.sorts if s.kind == kind]

    @property
    def value_sort(self) -> Optional[Sort]:
        found = self.sorts_of_kind(VALUE)
        return found[0] if found else None


# -- terms -------------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str
    sort: str


@dataclass(frozen=True)
class Const:
    name: str
    sort: str


@dataclass(frozen=True)
class App:
    fn: str
    args: Tuple["Term", ...]
    sort: str


@dataclass(frozen=True)
class Lit:
    """Integer literal; in a scalar sort it denotes 1+1+...+1."""

    value: int
    sort: str


@dataclass(frozen=True)
class Elem:
    """A ground domain element. Produced by substitution, never parsed."""

    value: object
    sort: str


ARITH_OPS = ("+", "-", "*", "neg", "abs")


@dataclass(frozen=True)
class Arith:
    op: str
    args: Tuple["Term", ...]
    sort: str


Term = Union[Var, Const, App, Lit, Elem, Arith]


# -- formulas ----------------------------------------------------------------

@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Order:
    op: str  # "<=" or "<"
    left: Term
    right: Term


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Iff:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Exists:
    var: Var
    body: "Formula"


Formula = Union[Eq, Order, Not, And, Implies, Iff, Exists]


def subterms(term) -> Iterator[Term]:
    yield term
    if isinstance(term, (App, Arith)):
        for a in term.args:
            yield from subterms(a)


def term_vars(term):
    return [t for t in subterms(term) if isinstance(t, Var)]


def free_vars(formula) -> list:
    """Free variables in order of first occurrence."""
    out = []
    seen = set()

    def visit(f, bound):
        if isinstance(f, (Eq, Order)):
            for t in (f.left, f.right):
                for v in term_vars(t):
                    if v.name not in bound and v.name not in seen:
                        seen.add(v.name)
                        out.append(v)
        elif isinstance(f, Not):
            visit(f.body, bound)
        elif isinstance(f, (And, Implies, Iff)):
            visit(f.left, bound)
            visit(f.right, bound)
        elif isinstance(f, Exists):
            visit(f.body, bound | {f.var.name})
        else:
            raise TypeError(f"not a formula: {f!r}")

    visit(formula, frozenset())
    return out


def term_free_vars(term) -> list:
    out = []
    for v in term_vars(term):
        if v not in out:
            out.append(v)
    return out


def symbols_used(formula) -> set:
    """Names of function symbols and constants the formula mentions."""
    names = set()

    def visit_term(t):
        for s in subterms(t):
            if isinstance(s, App):
                names.add(s.fn)
            elif isinstance(s, Const):
                names.add(s.name)

    def visit(f):
        if isinstance(f, (Eq, Order)):
            visit_term(f.left)
            visit_term(f.right)
        elif isinstance(f, Not):
            visit(f.body)
        elif isinstance(f, (And, Implies, Iff)):
            visit(f.left)
            visit(f.right)
        elif isinstance(f, Exists):
            visit(f.body)

    visit(formula)
    return names


def substitute_term(term, name, value):
    """Replace free occurrences of variable ``name`` by the element ``value``."""
    if isinstance(term, Var):
        return Elem(value, term.sort) if term.name == name else term
    if isinstance(term, (App, Arith)):
        return replace(term, args=tuple(substitute_term(a, name, value) for a in term.args))
    return term


def substitute(formula, name, value):
    if isinstance(formula, Eq):
        return Eq(substitute_term(formula.left, name, value), substitute_term(formula.right, name, value))
    if isinstance(formula, Order):
        return Order(formula.op, substitute_term(formula.left, name, value),
                     substitute_term(formula.right, name, value))
    if isinstance(formula, Not):
        return Not(substitute(formula.body, name, value))
    if isinstance(formula, (And, Implies, Iff)):
        return type(formula)(substitute(formula.left, name, value), substitute(formula.right, name, value))
    if isinstance(formula, Exists):
        if formula.var.name == name:
            return formula
        return Exists(formula.var, substitute(formula.body, name, value))
    raise TypeError(f"not a formula: {formula!r}")


# -- theories ----------------------------------------------------------------

@dataclass(frozen=True)
class Axiom:
    name: str
    formula: Formula


@dataclass(frozen=True)
class Theory:
    name: str
    signature: Signature
    axioms: Tuple[Axiom, ...] = ()
    mode: str = FREE_TABLE
    dim: Optional[int] = None
    description: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "axioms", tuple(self.axioms))
        names = [a.name for a in self.axioms]
        if len(set(names)) != len(names):
            raise SignatureError(f"theory {self.name}: duplicate axiom names")
        if self.mode not in (FREE_TABLE, LINEAR_ALGEBRA):
            raise SignatureError(f"unknown mode {self.mode!r}")
        if self.mode == LINEAR_ALGEBRA and (self.dim is None or self.dim < 1):
            raise SignatureError("linear-algebra mode needs dim >= 1")

    @property
    def axiom_names(self):
        return [a.name for a in self.axioms]

    def axiom(self, name) -> Axiom:
        for a in self.axioms:
            if a.name == name:
                return a
        raise KeyError(f"theory {self.name} has no axiom {name}")

    def restrict(self, names, name=None):
        """Sub-theory keeping only the named axioms, in original order."""
        keep = [a for a in self.axioms if a.name in set(names)]
        return replace(self, name=name or self.name, axioms=tuple(keep))

    def without(self, axiom_name):
        return self.restrict([n for n in self.axiom_names if n != axiom_name],
                             name=f"{self.name}-{axiom_name}")

    def with_axioms(self, axioms, name=None):
        return replace(self, name=name or self.name, axioms=tuple(axioms))
