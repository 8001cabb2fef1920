"""Backtracking model search over finite interpretations.

Every searched table cell starts UNDEFINED with a finite candidate domain.
Each ground axiom instance is compiled to a closure and evaluated under
strong Kleene semantics; an instance that is still undecided watches one of
the empty cells it touched and is re-evaluated when that cell is filled.
When the watched cell is the only empty cell an instance touches, the
candidates that would make it false are removed (forward checking); a
singleton domain is assigned immediately.  Branching picks the cell with the
fewest candidates, breaking ties by how often its symbol occurs in the axioms
and then by cell index.  Values are tried in codomain order, so the model
stream is a deterministic function of the specification.

In linear-algebra mode the carrier is F^n with fixed addition and scalar
action, ``e`` is the first basis vector, and each bilinear symbol is searched
through its basis products b_i*b_j (i, j >= 1; products with e are fixed by
the unit law).  Basis products are always branched on first.
"""
from __future__ import annotations

import multiprocessing
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from itertools import permutations, product
from typing import Dict, Iterator, List, Mapping, Optional

from .domains import EnumeratedCarrier, FiniteField, RationalGrid, RationalSample, VectorSpace, format_rational
from .errors import BindingError, IllTypedInput, UnsupportedQuantifier
from .kernel import (BILINEAR, FREE, FixedOp, Interpretation, Status, Table, UNDEFINED, bilinear_table,
                     check_axiom, structure_roles, unit_products, vector_structure)
from .syntax import (CARRIER, LINEAR_ALGEBRA, SCALAR, VALUE, And, App, Arith, Axiom, Const, Elem, Eq, Exists,
                     Iff, Implies, Lit, Not, Order, Var, free_vars, subterms)

DEFAULT_MAX_NODES = 5_000_000


class SearchStatus(str, Enum):
    EXHAUSTED = "EXHAUSTED"
    BUDGET_EXCEEDED = "BUDGET_EXCEEDED"


class CounterStatus(str, Enum):
    FOUND = "FOUND"
    NONE_EXHAUSTED = "NONE_EXHAUSTED"
    BUDGET_EXCEEDED = "BUDGET_EXCEEDED"


def default_max_nodes():
    env = os.environ.get("AXRED_BUDGET_NODES")
    if env:
        return int(env)
    return DEFAULT_MAX_NODES


@dataclass(frozen=True)
class SearchSpec:
    """What to search: a theory, a domain for every sort, and a budget.

    ``bindings`` maps sort names to: an int (carrier size), a RationalSample
    (carrier or scalar sample), a FiniteField (scalar) or a RationalGrid (value
    sort codomain).  In linear-algebra mode the carrier is F^dim and needs no
    binding.
    """

    theory: object
    bindings: Mapping[str, object] = field(default_factory=dict)
    dim: Optional[int] = None
    max_nodes: Optional[int] = None
    max_seconds: Optional[float] = None
    ordering: str = "mrv"
    propagate: bool = True

    def __post_init__(self):
        object.__setattr__(self, "bindings", dict(self.bindings))
        if self.ordering not in ("mrv", "lex"):
            raise BindingError(f"unknown cell ordering {self.ordering!r}")
        if self.max_nodes is not None and self.max_nodes <= 0:
            raise BindingError("node budget must be positive")
        if self.max_seconds is not None and self.max_seconds <= 0:
            raise BindingError("time budget must be positive")

    @property
    def mode(self):
        return self.theory.mode

    @property
    def effective_dim(self):
        return self.dim if self.dim is not None else self.theory.dim

    @property
    def node_budget(self):
        return self.max_nodes if self.max_nodes is not None else default_max_nodes()

    def with_theory(self, theory):
        return replace(self, theory=theory)

    def describe(self):
        out = {}
        for s in self.theory.signature.sorts:
            b = self.bindings.get(s.name)
            if b is None:
                continue
            out[s.name] = describe_binding(b)
        if self.mode == LINEAR_ALGEBRA:
            out["dim"] = self.effective_dim
        return out

    def label(self):
        return ", ".join(f"{k}={v}" for k, v in self.describe().items())


def describe_binding(b):
    if isinstance(b, bool):
        raise BindingError("booleans are not domains")
    if isinstance(b, int):
        return b
    if isinstance(b, FiniteField):
        return b.token
    if isinstance(b, RationalGrid):
        return b.token
    if isinstance(b, RationalSample):
        return [b.name(i) for i in range(len(b))]
    return repr(b)


def build_domains(spec) -> Dict[str, object]:
    """Domain objects for every sort, validating the bindings."""
    theory = spec.theory
    sig = theory.signature
    doms: Dict[str, object] = {}
    for s in sig.sorts:
        b = spec.bindings.get(s.name)
        if s.kind == SCALAR:
            if not isinstance(b, (FiniteField, RationalSample)):
                raise BindingError(f"scalar sort {s.name} needs a field or rational sample, got {b!r}")
            doms[s.name] = b
        elif s.kind == VALUE:
            if not isinstance(b, RationalGrid):
                raise BindingError(f"value sort {s.name} needs a rational grid, got {b!r}")
            doms[s.name] = b
    for s in sig.sorts:
        if s.kind != CARRIER:
            continue
        b = spec.bindings.get(s.name)
        if theory.mode == LINEAR_ALGEBRA:
            scalars = [doms[x.name] for x in sig.sorts_of_kind(SCALAR)]
            if len(scalars) != 1 or not isinstance(scalars[0], FiniteField):
                raise BindingError("linear-algebra mode needs its scalar sort bound to a finite field")
            dim = spec.effective_dim
            if dim is None or dim < 1:
                raise BindingError("linear-algebra mode needs dim >= 1")
            doms[s.name] = VectorSpace(scalars[0], dim)
        elif isinstance(b, bool):
            raise BindingError(f"carrier sort {s.name}: bad size {b!r}")
        elif isinstance(b, int):
            if b < 1:
                raise BindingError(f"carrier sort {s.name} needs size >= 1")
            doms[s.name] = EnumeratedCarrier(b)
        elif isinstance(b, EnumeratedCarrier):
            doms[s.name] = b
        elif isinstance(b, RationalSample):
            doms[s.name] = b
        else:
            raise BindingError(f"carrier sort {s.name} is unbound")
    return doms


# -- compiled evaluation -------------------------------------------------------------

class _Compiler:
    """Turns typed terms and formulas into closures over an engine's live tables.

    Closures take a mutable env list (one slot per variable) and return a value,
    or None for undefined; every empty cell they read is appended to ``hits``.
    """

    def __init__(self, engine):
        self.e = engine

    def term(self, t, slots):
        e = self.e
        if isinstance(t, Var):
            k = slots[t.name]
            return lambda env: env[k]
        if isinstance(t, Elem):
            v = t.value
            return lambda env: v
        if isinstance(t, Lit):
            v = e.arith[t.sort].from_int(t.value)
            return lambda env: v
        if isinstance(t, Const):
            return e.const_reader(t.name)
        if isinstance(t, App):
            args = [self.term(a, slots) for a in t.args]
            return e.app_reader(t.fn, args)
        if isinstance(t, Arith):
            return self.arith(t, slots)
        raise TypeError(f"not a term: {t!r}")

    def arith(self, t, slots):
        ar = self.e.arith[t.sort]
        rational = not isinstance(ar, FiniteField)
        if rational:
            for a in t.args:
                if not self.e.is_rational(a.sort):
                    raise IllTypedInput(f"sort {a.sort} cannot be mixed into rational sort {t.sort}")
        fs = [self.term(a, slots) for a in t.args]
        if t.op in ("neg", "abs"):
            fa = fs[0]
            if t.op == "abs":
                if not rational:
                    raise IllTypedInput("abs needs a rational argument")
                op1 = abs
            elif rational:
                op1 = lambda a: -a  # noqa: E731
            else:
                neg = ar.neg_table
                op1 = neg.__getitem__

            def unary(env):
                a = fa(env)
                if a is None:
                    return None
                return op1(a)
            return unary
        fa, fb = fs
        if rational:
            import operator
            op2 = {"+": operator.add, "-": operator.sub, "*": operator.mul}[t.op]
        else:
            add, mul, neg = ar.add_table, ar.mul_table, ar.neg_table
            if t.op == "+":
                op2 = lambda a, b: add[a][b]  # noqa: E731
            elif t.op == "-":
                op2 = lambda a, b: add[a][neg[b]]  # noqa: E731
            else:
                op2 = lambda a, b: mul[a][b]  # noqa: E731

        def binary(env):
            a = fa(env)
            if a is None:
                return None
            b = fb(env)
            if b is None:
                return None
            return op2(a, b)
        return binary

    def formula(self, f, slots):
        if isinstance(f, Eq):
            fl, fr = self.term(f.left, slots), self.term(f.right, slots)

            def eq(env):
                a = fl(env)
                if a is None:
                    return None
                b = fr(env)
                if b is None:
                    return None
                return a == b
            return eq
        if isinstance(f, Order):
            for t in (f.left, f.right):
                if not self.e.is_rational(t.sort):
                    raise IllTypedInput("order comparison needs rational operands")
            fl, fr = self.term(f.left, slots), self.term(f.right, slots)
            strict = f.op == "<"

            def order(env):
                a = fl(env)
                if a is None:
                    return None
                b = fr(env)
                if b is None:
                    return None
                return a < b if strict else a <= b
            return order
        if isinstance(f, Not):
            fb = self.formula(f.body, slots)

            def neg(env):
                r = fb(env)
                return None if r is None else not r
            return neg
        if isinstance(f, And):
            fa, fb = self.formula(f.left, slots), self.formula(f.right, slots)

            def conj(env):
                a = fa(env)
                if a is False:
                    return False
                b = fb(env)
                if b is False:
                    return False
                if a is None or b is None:
                    return None
                return True
            return conj
        if isinstance(f, Implies):
            fa, fb = self.formula(f.left, slots), self.formula(f.right, slots)

            def imp(env):
                a = fa(env)
                if a is False:
                    return True
                b = fb(env)
                if b is True:
                    return True
                if a is None or b is None:
                    return None
                return False
            return imp
        if isinstance(f, Iff):
            fa, fb = self.formula(f.left, slots), self.formula(f.right, slots)

            def iff(env):
                a = fa(env)
                if a is None:
                    return None
                b = fb(env)
                if b is None:
                    return None
                return a == b
            return iff
        if isinstance(f, Exists):
            k = len(slots)
            inner = dict(slots)
            inner[f.var.name] = k
            self.e.max_slots = max(self.e.max_slots, k + 1)
            dom = self.e.var_elements(f.var.sort)
            fb = self.formula(f.body, inner)

            def ex(env):
                res = False
                for v in dom:
                    env[k] = v
                    r = fb(env)
                    if r is True:
                        return True
                    if r is None:
                        res = None
                return res
            return ex
        raise TypeError(f"not a formula: {f!r}")


class _SymbolSlot:
    """Live table of one searched symbol."""

    def __init__(self, name, shape, codomain, base, arg_index):
        self.name = name
        self.shape = shape
        self.codomain = codomain
        self.base = base
        self.arg_index = arg_index  # per argument: None (value is the index) or dict value -> index
        size = 1
        for s in shape:
            size *= s
        self.size = size
        self.vals = [None] * size


class _Budget(Exception):
    pass


# undo record tags
_VAL, _DOM, _WATCH, _ADD = 0, 1, 2, 3


class Engine:
    """One backtracking search over a SearchSpec.  Not thread-safe; one per worker."""

    def __init__(self, spec):
        self.spec = spec
        self.theory = spec.theory
        sig = self.theory.signature
        self.sig = sig
        self.domains = build_domains(spec)
        self.max_slots = 0
        self.hits: List[int] = []
        self.arith = {}
        for s in sig.sorts:
            dom = self.domains[s.name]
            if s.kind in (SCALAR, VALUE):
                self.arith[s.name] = dom if isinstance(dom, FiniteField) else _RATIONAL
        self._setup_symbols()
        self._setup_instances()
        self.nodes = 0
        self.propagated = 0
        self.conflicts = 0

    # -- layout -----------------------------------------------------------------

    def is_rational(self, sort):
        kind = self.sig.sort(sort).kind
        return kind == VALUE or (kind == SCALAR and isinstance(self.domains[sort], RationalSample))

    def var_elements(self, sort):
        kind = self.sig.sort(sort).kind
        dom = self.domains[sort]
        if kind == VALUE:
            raise UnsupportedQuantifier(f"cannot quantify over the ordered-value sort {sort}")
        if isinstance(dom, RationalSample):
            return list(dom.points) if kind == SCALAR else list(range(len(dom)))
        return list(range(len(dom)))

    def _codomain(self, sort):
        kind = self.sig.sort(sort).kind
        dom = self.domains[sort]
        if kind == VALUE:
            return list(dom.values)
        return self.var_elements(sort)

    def _arg_index(self, sort):
        kind = self.sig.sort(sort).kind
        dom = self.domains[sort]
        if kind == VALUE:
            raise BindingError(f"searched tables cannot take value-sorted arguments ({sort})")
        if kind == SCALAR and isinstance(dom, RationalSample):
            return {p: i for i, p in enumerate(dom.points)}
        return None

    def _setup_symbols(self):
        sig = self.sig
        self.fixed: Dict[str, FixedOp] = {}
        self.fixed_consts: Dict[str, object] = {}
        self.roles: Dict[str, str] = {}
        self.space = None
        vector_sorts = [s.name for s in sig.sorts_of_kind(CARRIER)
                        if isinstance(self.domains[s.name], (VectorSpace, RationalSample))]
        for vs in vector_sorts:
            roles, tables, consts = vector_structure(sig, vs, self.domains[vs])
            for name, role in roles.items():
                if role == BILINEAR and not isinstance(self.domains[vs], VectorSpace):
                    roles[name] = FREE
            self.roles.update({k: v for k, v in roles.items() if v != FREE})
            self.fixed.update(tables)
            self.fixed_consts.update({k: (None if v is UNDEFINED else v) for k, v in consts.items()})
            if isinstance(self.domains[vs], VectorSpace):
                self.space = self.domains[vs]
        weight = {}
        for ax in self.theory.axioms:
            for t in _formula_terms(ax.formula):
                for st in subterms(t):
                    if isinstance(st, App):
                        weight[st.fn] = weight.get(st.fn, 0) + 1
                    elif isinstance(st, Const):
                        weight[st.name] = weight.get(st.name, 0) + 1
        self.slots: Dict[str, _SymbolSlot] = {}
        self.bilinear: Dict[str, _SymbolSlot] = {}
        cell_slot, cell_idx, cell_weight, cell_first = [], [], [], []
        base = 0
        for f in sig.fns:
            if f.name in self.fixed:
                continue
            if self.roles.get(f.name) == BILINEAR:
                n = self.space.dim
                slot = _SymbolSlot(f.name, (n, n), list(range(self.space.size)), base, None)
                fixed = unit_products(self.space)
                cells = []
                for (i, j), v in fixed.items():
                    slot.vals[i * n + j] = v
                slot.cell_of = {}
                for i in range(1, n):
                    for j in range(1, n):
                        cells.append(i * n + j)
                for k, flat in enumerate(cells):
                    slot.cell_of[flat] = base + k
                    cell_slot.append(slot)
                    cell_idx.append(flat)
                    cell_weight.append(weight.get(f.name, 0))
                    cell_first.append(True)
                base += len(cells)
                self.bilinear[f.name] = slot
                self.slots[f.name] = slot
                continue
            shape = tuple(len(self.var_elements(a)) for a in f.args)
            slot = _SymbolSlot(f.name, shape, self._codomain(f.result), base,
                               [self._arg_index(a) for a in f.args])
            for k in range(slot.size):
                cell_slot.append(slot)
                cell_idx.append(k)
                cell_weight.append(weight.get(f.name, 0))
                cell_first.append(False)
            base += slot.size
            self.slots[f.name] = slot
        for c in sig.consts:
            if c.name in self.fixed_consts:
                continue
            slot = _SymbolSlot(c.name, (), self._codomain(c.sort), base, [])
            cell_slot.append(slot)
            cell_idx.append(0)
            cell_weight.append(weight.get(c.name, 0))
            cell_first.append(False)
            base += 1
            self.slots[c.name] = slot
        self.ncells = base
        self.cell_slot = cell_slot
        self.cell_idx = cell_idx
        self.cell_first = cell_first
        self.cell_weight = cell_weight
        self.dom = [frozenset(range(len(s.codomain))) for s in cell_slot]
        self.watch: List[list] = [[] for _ in range(base)]
        self.trail: list = []
        self.queue: list = []

    def const_reader(self, name):
        if name in self.fixed_consts:
            v = self.fixed_consts[name]
            return lambda env: v
        slot = self.slots[name]
        vals, cell, hits = slot.vals, slot.base, self.hits

        def read(env):
            v = vals[0]
            if v is None:
                hits.append(cell)
            return v
        return read

    def app_reader(self, name, args):
        if name in self.fixed:
            fn = self.fixed[name].fn
            if len(args) == 2:
                fa, fb = args

                def fixed2(env):
                    a = fa(env)
                    if a is None:
                        return None
                    b = fb(env)
                    if b is None:
                        return None
                    v = fn(a, b)
                    return None if v is UNDEFINED else v
                return fixed2

            def fixedn(env):
                vs = []
                for f in args:
                    v = f(env)
                    if v is None:
                        return None
                    vs.append(v)
                v = fn(*vs)
                return None if v is UNDEFINED else v
            return fixedn
        if name in self.bilinear:
            return self._bilinear_reader(self.bilinear[name], args)
        slot = self.slots[name]
        vals, base, hits = slot.vals, slot.base, self.hits
        shape, conv = slot.shape, slot.arg_index
        if len(args) == 1 and conv[0] is None:
            fa = args[0]

            def look1(env):
                a = fa(env)
                if a is None:
                    return None
                v = vals[a]
                if v is None:
                    hits.append(base + a)
                return v
            return look1
        if len(args) == 2 and conv[0] is None and conv[1] is None:
            fa, fb = args
            s1 = shape[1]

            def look2(env):
                a = fa(env)
                if a is None:
                    return None
                b = fb(env)
                if b is None:
                    return None
                i = a * s1 + b
                v = vals[i]
                if v is None:
                    hits.append(base + i)
                return v
            return look2

        def lookn(env):
            i = 0
            for f, s, cv in zip(args, shape, conv):
                a = f(env)
                if a is None:
                    return None
                if cv is not None:
                    a = cv.get(a)
                    if a is None:
                        return None
                i = i * s + a
            v = vals[i]
            if v is None:
                hits.append(base + i)
            return v
        return lookn

    def _bilinear_reader(self, slot, args):
        space = self.space
        f = space.field
        n = space.dim
        coords = space.coords
        add, smul, fmul = space.add_table, space.smul_table, f.mul_table
        support = [[i for i in range(n) if coords[v][i]] for v in range(space.size)]
        vals, hits, cell_of = slot.vals, self.hits, slot.cell_of
        fa, fb = args

        def mul(env):
            x = fa(env)
            if x is None:
                return None
            y = fb(env)
            if y is None:
                return None
            cx, cy = coords[x], coords[y]
            acc = 0
            for i in support[x]:
                row = i * n
                for j in support[y]:
                    p = vals[row + j]
                    if p is None:
                        hits.append(cell_of[row + j])
                        return None
                    acc = add[acc][smul[fmul[cx[i]][cy[j]]][p]]
            return acc
        return mul

    def _setup_instances(self):
        comp = _Compiler(self)
        self.inst_fn = []
        self.inst_env = []
        self.inst_axiom = []
        self.axiom_fns = []
        for ai, ax in enumerate(self.theory.axioms):
            fv = free_vars(ax.formula)
            slots = {v.name: k for k, v in enumerate(fv)}
            self.max_slots = max(self.max_slots, len(fv))
            fn = comp.formula(ax.formula, slots)
            self.axiom_fns.append((fn, fv))
        width = self.max_slots
        for ai, (fn, fv) in enumerate(self.axiom_fns):
            doms = [self.var_elements(v.sort) for v in fv]
            for combo in product(*doms):
                env = list(combo) + [None] * (width - len(combo))
                self.inst_fn.append(fn)
                self.inst_env.append(env)
                self.inst_axiom.append(ai)
        self.skipped_instances = 0

    # -- core operations ------------------------------------------------------------

    def _eval(self, i):
        self.hits.clear()
        return self.inst_fn[i](self.inst_env[i])

    def _attach(self, i, propagate):
        """Re-evaluate instance i; False on conflict."""
        r = self._eval(i)
        if r is True:
            return True
        if r is False:
            return False
        hits = self.hits
        if not hits:
            # undefined through partial arithmetic only: permanently skipped
            return True
        c = hits[0]
        single = propagate and all(h == c for h in hits)
        self.watch[c].append(i)
        self.trail.append((_ADD, c))
        if single:
            return self._filter(c, i)
        return True

    def _filter(self, c, i):
        slot = self.cell_slot[c]
        vals, idx, cod = slot.vals, self.cell_idx[c], slot.codomain
        fn, env = self.inst_fn[i], self.inst_env[i]
        dom = self.dom[c]
        removed = []
        hits = self.hits
        for pos in dom:
            vals[idx] = cod[pos]
            hits.clear()
            if fn(env) is False:
                removed.append(pos)
        vals[idx] = None
        if removed:
            new = dom.difference(removed)
            self.trail.append((_DOM, c, dom))
            self.dom[c] = new
            if not new:
                return False
            if len(new) == 1:
                self.queue.append(c)
        return True

    def _assign(self, c, pos, propagate):
        slot = self.cell_slot[c]
        slot.vals[self.cell_idx[c]] = slot.codomain[pos]
        trail = self.trail
        trail.append((_VAL, c))
        dom = self.dom[c]
        if len(dom) != 1:
            trail.append((_DOM, c, dom))
            self.dom[c] = frozenset((pos,))
        lst = self.watch[c]
        if not lst:
            return True
        self.watch[c] = []
        trail.append((_WATCH, c, lst))
        for i in lst:
            if not self._attach(i, propagate):
                self.conflicts += 1
                return False
        return True

    def _propagate(self, propagate):
        q = self.queue
        while q:
            c = q.pop()
            slot = self.cell_slot[c]
            if slot.vals[self.cell_idx[c]] is not None:
                continue
            (pos,) = self.dom[c]
            self.propagated += 1
            if not self._assign(c, pos, propagate):
                q.clear()
                return False
        return True

    def _undo(self, mark):
        trail = self.trail
        while len(trail) > mark:
            rec = trail.pop()
            tag = rec[0]
            if tag == _ADD:
                self.watch[rec[1]].pop()
            elif tag == _VAL:
                c = rec[1]
                self.cell_slot[c].vals[self.cell_idx[c]] = None
            elif tag == _DOM:
                self.dom[rec[1]] = rec[2]
            else:
                self.watch[rec[1]] = rec[2]
        self.queue.clear()

    def _choose(self):
        best = None
        best_key = None
        lex = self.spec.ordering == "lex"
        for c in range(self.ncells):
            slot = self.cell_slot[c]
            if slot.vals[self.cell_idx[c]] is not None:
                continue
            if self.cell_first[c]:
                return c
            if lex:
                return c
            key = (len(self.dom[c]), -self.cell_weight[c])
            if best_key is None or key < best_key:
                best, best_key = c, key
        return best

    def initialize(self):
        """Evaluate every instance once; False if the theory is already violated."""
        propagate = self.spec.propagate
        for i in range(len(self.inst_fn)):
            if not self._attach(i, propagate):
                return False
        if propagate and not self._propagate(propagate):
            return False
        return True

    def run(self, first_choices=None, deadline=None) -> Iterator[tuple]:
        """Yield the raw cell values of every model.  Raises _Budget when over budget."""
        self.budget = self.spec.node_budget
        self.deadline = deadline
        if not self.initialize():
            return
        yield from self._dfs(first_choices)

    def first_choice(self):
        """Cell and candidate positions at the root branching point (after initial propagation)."""
        if not self.initialize():
            return None, []
        c = self._choose()
        if c is None:
            return None, []
        return c, sorted(self.dom[c])

    def _dfs(self, restrict=None):
        c = self._choose()
        if c is None:
            yield self.snapshot()
            return
        propagate = self.spec.propagate
        positions = sorted(self.dom[c])
        if restrict is not None:
            positions = [p for p in positions if p in restrict]
        for pos in positions:
            self.nodes += 1
            if self.nodes > self.budget:
                raise _Budget()
            if self.deadline is not None and self.nodes % 256 == 0 and time.monotonic() > self.deadline:
                raise _Budget()
            mark = len(self.trail)
            if self._assign(c, pos, propagate) and self._propagate(propagate):
                yield from self._dfs()
            self._undo(mark)

    def snapshot(self):
        return tuple(self.cell_slot[c].vals[self.cell_idx[c]] for c in range(self.ncells))

    # -- results ----------------------------------------------------------------------

    def interpretation(self, raw) -> Interpretation:
        """Build an immutable Interpretation from raw cell values."""
        sig = self.sig
        tables, consts = {}, {}
        values = {}
        for c, v in enumerate(raw):
            slot = self.cell_slot[c]
            values.setdefault(slot.name, list(slot.vals))[self.cell_idx[c]] = v
        for f in sig.fns:
            if f.name in self.fixed:
                tables[f.name] = self.fixed[f.name]
            elif f.name in self.bilinear:
                slot = self.bilinear[f.name]
                n = self.space.dim
                vals = values.get(f.name, slot.vals)
                products = {(i, j): vals[i * n + j] for i in range(n) for j in range(n)}
                tables[f.name] = bilinear_table(self.space, products)
            else:
                slot = self.slots[f.name]
                tables[f.name] = Table(slot.shape, values.get(f.name, slot.vals))
        for c in sig.consts:
            if c.name in self.fixed_consts:
                v = self.fixed_consts[c.name]
                consts[c.name] = UNDEFINED if v is None else v
            else:
                consts[c.name] = values[c.name][0]
        domains = dict(self.domains)
        return Interpretation(sig, domains, tables, consts, self.theory.mode)


class _RationalArith:
    @staticmethod
    def from_int(n):
        return Fraction(n)


_RATIONAL = _RationalArith()


def _formula_terms(f):
    if isinstance(f, (Eq, Order)):
        return [f.left, f.right]
    if isinstance(f, Not):
        return _formula_terms(f.body)
    if isinstance(f, (And, Implies, Iff)):
        return _formula_terms(f.left) + _formula_terms(f.right)
    if isinstance(f, Exists):
        return _formula_terms(f.body)
    return []


# -- public API ---------------------------------------------------------------------

@dataclass
class SearchStats:
    nodes: int = 0
    propagated: int = 0
    conflicts: int = 0
    elapsed: float = 0.0

    def as_dict(self):
        return {"nodes": self.nodes, "propagated": self.propagated, "conflicts": self.conflicts,
                "elapsed_s": round(self.elapsed, 4)}


@dataclass
class SearchOutcome:
    status: SearchStatus
    models: List[Interpretation]
    count: int
    stats: SearchStats
    spec: SearchSpec = None

    @property
    def exhausted(self):
        return self.status == SearchStatus.EXHAUSTED


class ModelStream:
    """Iterator over the models of a spec; ``outcome`` is filled in as it runs.

    Stopping early (``limit`` or breaking out of the loop) leaves the status as
    BUDGET_EXCEEDED only when the budget, not the caller, stopped it.
    """

    def __init__(self, spec, engine=None):
        self.spec = spec
        self.engine = engine or Engine(spec)
        self.status = None
        self.count = 0
        self.stats = SearchStats()

    def __iter__(self):
        e = self.engine
        start = time.monotonic()
        deadline = start + self.spec.max_seconds if self.spec.max_seconds else None
        try:
            for raw in e.run(deadline=deadline):
                self.count += 1
                self._sync(start)
                yield e.interpretation(raw)
            self.status = SearchStatus.EXHAUSTED
        except _Budget:
            self.status = SearchStatus.BUDGET_EXCEEDED
        finally:
            self._sync(start)

    def _sync(self, start):
        e = self.engine
        self.stats = SearchStats(e.nodes, e.propagated, e.conflicts, time.monotonic() - start)


def iter_models(spec) -> ModelStream:
    return ModelStream(spec)


def _worker(spec, restrict):
    e = Engine(spec)
    cell, _ = e.first_choice()
    out = []
    status = SearchStatus.EXHAUSTED
    e.budget = spec.node_budget
    start = time.monotonic()
    e.deadline = start + spec.max_seconds if spec.max_seconds else None
    try:
        if cell is not None:
            for raw in e._dfs(set(restrict)):
                out.append(raw)
    except _Budget:
        status = SearchStatus.BUDGET_EXCEEDED
    return out, status, (e.nodes, e.propagated, e.conflicts)


def enumerate_models(spec, threads=1, limit=None, keep_models=True, dedupe=False) -> SearchOutcome:
    """Every model of ``spec.theory`` under the bindings, in deterministic order.

    With ``threads > 1`` the root branching point is split across worker
    processes; the model list is identical to the single-threaded one.
    """
    start = time.monotonic()
    if threads and threads > 1 and limit is None:
        outcome = _enumerate_parallel(spec, threads, keep_models)
    else:
        stream = ModelStream(spec)
        models = []
        n = 0
        for m in stream:
            n += 1
            if keep_models:
                models.append(m)
            if limit is not None and n >= limit:
                break
        status = stream.status or SearchStatus.BUDGET_EXCEEDED
        if limit is not None and n >= limit and stream.status is None:
            status = SearchStatus.BUDGET_EXCEEDED
        outcome = SearchOutcome(status, models, n, stream.stats, spec)
    if dedupe and outcome.models:
        outcome.models = dedupe_models(outcome.models)
    outcome.stats.elapsed = time.monotonic() - start
    return outcome


def _enumerate_parallel(spec, threads, keep_models):
    e = Engine(spec)
    cell, positions = e.first_choice()
    if cell is None:
        # zero or one model; nothing to split
        return enumerate_models(spec, threads=1, keep_models=keep_models)
    n = min(threads, len(positions))
    size = -(-len(positions) // n)
    chunks = [positions[k:k + size] for k in range(0, len(positions), size)]
    raws, status = [], SearchStatus.EXHAUSTED
    stats = SearchStats()
    stats.propagated = e.propagated
    with ProcessPoolExecutor(max_workers=n, mp_context=multiprocessing.get_context("spawn")) as pool:
        results = list(pool.map(_worker, [spec] * len(chunks), chunks))
    for out, st, (nodes, prop, conf) in results:
        raws.extend(out)
        if st == SearchStatus.BUDGET_EXCEEDED:
            status = st
        stats.nodes += nodes
        stats.propagated += prop
        stats.conflicts += conf
    models = [e.interpretation(r) for r in raws] if keep_models else []
    return SearchOutcome(status, models, len(raws), stats, spec)


@dataclass
class CountermodelResult:
    status: CounterStatus
    model: Optional[Interpretation] = None
    verdict: object = None
    models_checked: int = 0
    stats: SearchStats = None
    found_count: int = 0

    @property
    def found(self):
        return self.status == CounterStatus.FOUND


def _key_value(v):
    if v is UNDEFINED or v is None:
        return (0, 0)
    return (1, v)


def witness_key(model, verdict):
    """Ranking of countermodels: fewest distinct searched values, then earliest failing instance."""
    vals = []
    for t in model.tables.values():
        if isinstance(t, Table):
            vals.extend(t.values)
    vals.extend(model.consts.values())
    distinct = len({v for v in vals if v is not UNDEFINED})
    witness = tuple(_key_value(x) for x in verdict.witness.values()) if verdict.witness else ()
    return (distinct, witness)


def find_countermodel(spec, target, pool=64) -> CountermodelResult:
    """A model of ``spec.theory`` on which ``target`` FAILS.

    Enumerate-and-test: models of the base theory are generated in order and
    the target is checked on each.  Among the first ``pool`` countermodels the
    one ranked first by ``witness_key`` is returned (ties go to the earlier
    one); ``pool=1`` returns the first enumerated countermodel.
    """
    axiom = target if isinstance(target, Axiom) else Axiom("target", target)
    stream = ModelStream(spec)
    checked = 0
    best = None
    found = 0
    for m in stream:
        checked += 1
        v = check_axiom(m, axiom)
        if v.status == Status.FAILS:
            found += 1
            key = witness_key(m, v)
            if best is None or key < best[0]:
                best = (key, m, v)
            if found >= pool:
                break
    if best is not None:
        return CountermodelResult(CounterStatus.FOUND, best[1], best[2], checked, stream.stats, found)
    status = CounterStatus.NONE_EXHAUSTED if stream.status == SearchStatus.EXHAUSTED \
        else CounterStatus.BUDGET_EXCEEDED
    return CountermodelResult(status, None, None, checked, stream.stats)


# -- isomorphism reduction ---------------------------------------------------------------

def canonical_form(interp):
    """Smallest fingerprint over all relabelings of enumerated carriers."""
    sig = interp.signature
    carriers = [s.name for s in sig.sorts if s.kind == CARRIER
                and isinstance(interp.domains[s.name], EnumeratedCarrier)]
    if not carriers:
        return interp.fingerprint()
    perms = [list(permutations(range(interp.size(c)))) for c in carriers]
    best = None
    for choice in product(*perms):
        pi = dict(zip(carriers, choice))
        fp = _relabel(interp, pi)
        if best is None or fp < best:
            best = fp
    return best


def _relabel(interp, pi):
    parts = []
    sig = interp.signature

    def m(sort, v):
        return pi[sort][v] if sort in pi and v is not UNDEFINED else v

    for f in sig.fns:
        t = interp.tables[f.name]
        if not isinstance(t, Table):
            continue
        new = [None] * len(t.values)
        for idxs in t.cells():
            target = tuple(m(s, a) for s, a in zip(f.args, idxs))
            new[t.flat_index(target)] = m(f.result, t.get(idxs))
        parts.append((f.name, tuple(_sortable(v) for v in new)))
    for c in sig.consts:
        parts.append((c.name, _sortable(m(c.sort, interp.consts[c.name]))))
    return tuple(parts)


def _sortable(v):
    return (1, v) if v is not UNDEFINED and v is not None else (0, 0)


def dedupe_models(models):
    seen = set()
    out = []
    for m in models:
        key = canonical_form(m)
        if key not in seen:
            seen.add(key)
            out.append(m)
    return out


def is_isomorphic(a, b):
    return canonical_form(a) == canonical_form(b)


def naive_models(spec, axioms=None):
    """Generate-and-test oracle: every total table assignment, checked with the kernel evaluator.

    Free-table mode only; independent of the propagation engine.
    """
    e = Engine(spec)
    if e.space is not None:
        raise BindingError("the naive oracle handles free-table mode only")
    axioms = spec.theory.axioms if axioms is None else axioms
    cods = [e.cell_slot[c].codomain for c in range(e.ncells)]
    out = []
    for raw in product(*cods):
        m = e.interpretation(raw)
        if all(check_axiom(m, a).status != Status.FAILS for a in axioms):
            out.append(m)
    return out


def format_value(v):
    if isinstance(v, Fraction):
        return format_rational(v)
    return v
