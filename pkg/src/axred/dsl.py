"""Reader and writer for theory files.

A theory file looks like::

    # comments run to end of line
    theory metric.reduced {
      sort Point
      value Real
      fn d(Point, Point) -> Real
      axiom M2: d(x, y) = 0 <-> x = y
      axiom M4var: d(x, y) <= d(x, z) + d(y, z)
    }

Declarations: ``scalar F`` (bound to a field or rational sample when checked),
``sort V`` (carrier), ``value Real`` (the ordered-value sort; ``value fn ...``
declares a function and its value-sort result at once), ``fn name(S, ...) -> S``,
``const name : S``, ``mode linear-algebra(dim n)`` or ``mode free-table``, and
``axiom Name: formula``.

Formulas use ``=``, ``<=``, ``<``, ``not``, ``/\\``, ``->`` (right associative),
``<->`` and ``exists x:S. body`` (body extends as far right as possible).
Terms use symbol application, ``+ - *``, unary ``-``, ``abs(t)`` and integer
literals.  Free variables are universally quantified; their sorts are
inferred from the positions they occur in.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .errors import DslError, SignatureError
from .syntax import (CARRIER, FREE_TABLE, LINEAR_ALGEBRA, SCALAR, VALUE, And, App, Arith, Axiom, Const,
                     ConstSymbol, Eq, Exists, FnSymbol, Iff, Implies, Lit, Not, Order, Signature, Sort, Theory,
                     Var)

KEYWORDS = {"theory", "scalar", "sort", "value", "fn", "const", "mode", "axiom", "exists", "not", "abs"}
STATEMENT_KEYWORDS = {"scalar", "sort", "value", "fn", "const", "mode", "axiom"}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><->|->|<=|/\\|[{}(),:.=<+\-*])
""", re.VERBOSE)

_NAME_RE = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_.\-]*")


@dataclass
class Token:
    kind: str  # "int", "ident", "name", "op", "eof"
    text: str
    line: int
    col: int

    @property
    def end_col(self):
        return self.col + max(len(self.text), 1)


def tokenize(text) -> List[Token]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    expect_name = False
    n = len(text)
    while pos < n:
        col = pos - line_start + 1
        if expect_name:
            ws = re.compile(r"[ \t\r\f\v]*").match(text, pos)
            pos = ws.end()
            col = pos - line_start + 1
            m = _NAME_RE.match(text, pos)
            if not m:
                raise DslError("expected a theory name", line, col)
            tokens.append(Token("name", m.group(), line, col))
            pos = m.end()
            expect_name = False
            continue
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise DslError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        val = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind in ("ws", "comment"):
            pass
        else:
            tokens.append(Token(kind, val, line, col))
            if kind == "ident" and val == "theory":
                expect_name = True
        pos = m.end()
    tokens.append(Token("eof", "", line, n - line_start + 1))
    return tokens


# -- raw (untyped) syntax -------------------------------------------------------

@dataclass
class RNode:
    line: int
    col: int
    end_col: int


@dataclass
class RIdent(RNode):
    name: str


@dataclass
class RApp(RNode):
    name: str
    args: list


@dataclass
class RLit(RNode):
    value: int


@dataclass
class RArith(RNode):
    op: str
    args: list


@dataclass
class RRel(RNode):
    op: str
    left: object
    right: object


@dataclass
class RConn(RNode):
    op: str
    args: list


@dataclass
class RExists(RNode):
    var: str
    sort: str
    body: object
    sort_tok: Token = None


@dataclass
class TheorySource:
    """Raw text, the parsed theory and the source span of every axiom."""

    text: str
    theory: Theory
    spans: Dict[str, Tuple[int, int, int, int]] = field(default_factory=dict)


class _Parser:
    def __init__(self, text):
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def tok(self):
        return self.tokens[self.pos]

    def peek(self, k=1):
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def advance(self):
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return DslError(msg, tok.line, tok.col, tok.end_col)

    def at_op(self, *ops):
        return self.tok.kind == "op" and self.tok.text in ops

    def at_kw(self, *kws):
        return self.tok.kind == "ident" and self.tok.text in kws

    def expect_op(self, op):
        if not self.at_op(op):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {op!r}, found {found!r}")
        return self.advance()

    def expect_kw(self, kw):
        if not self.at_kw(kw):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {kw!r}, found {found!r}")
        return self.advance()

    def expect_ident(self, what="identifier"):
        if self.tok.kind != "ident" or self.tok.text in KEYWORDS:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {what}, found {found!r}")
        return self.advance()

    def expect_int(self):
        if self.tok.kind != "int":
            raise self.error(f"expected an integer, found {self.tok.text!r}")
        return self.advance()

    # -- top level ----------------------------------------------------------

    def parse_file(self):
        self.expect_kw("theory")
        if self.tok.kind != "name":
            raise self.error("expected a theory name")
        name = self.advance().text
        self.expect_op("{")
        decls = []
        while not self.at_op("}"):
            if self.tok.kind == "eof":
                raise self.error("missing '}' at end of theory")
            decls.append(self.parse_statement())
        self.expect_op("}")
        if self.tok.kind != "eof":
            raise self.error("unexpected text after the theory block")
        return name, decls

    def parse_statement(self):
        t = self.tok
        if not self.at_kw(*STATEMENT_KEYWORDS):
            raise self.error(f"expected a declaration or axiom, found {t.text!r}")
        kw = self.advance().text
        if kw in ("scalar", "sort"):
            name = self.expect_ident("sort name")
            return (kw, name)
        if kw == "value":
            if self.at_kw("fn"):
                self.advance()
                return ("value-fn",) + self.parse_fn_decl()
            return ("value", self.expect_ident("sort name"))
        if kw == "fn":
            return ("fn",) + self.parse_fn_decl()
        if kw == "const":
            name = self.expect_ident("constant name")
            self.expect_op(":")
            sort = self.expect_ident("sort name")
            return ("const", name, sort)
        if kw == "mode":
            return self.parse_mode(t)
        # axiom
        name = self.expect_ident("axiom name")
        self.expect_op(":")
        start = self.tok
        formula = self.parse_formula()
        end = self.tokens[self.pos - 1]
        return ("axiom", name, formula, (start.line, start.col, end.line, end.end_col))

    def parse_fn_decl(self):
        name = self.expect_ident("function name")
        self.expect_op("(")
        args = []
        if not self.at_op(")"):
            args.append(self.expect_ident("sort name"))
            while self.at_op(","):
                self.advance()
                args.append(self.expect_ident("sort name"))
        self.expect_op(")")
        self.expect_op("->")
        result = self.expect_ident("sort name")
        return (name, args, result)

    def parse_mode(self, kw_tok):
        first = self.expect_ident("mode name")
        self.expect_op("-")
        second = self.expect_ident("mode name")
        mode = f"{first.text}-{second.text}"
        if mode == FREE_TABLE:
            return ("mode", kw_tok, FREE_TABLE, None)
        if mode != LINEAR_ALGEBRA:
            raise DslError(f"unknown mode {mode!r}", first.line, first.col, second.end_col)
        self.expect_op("(")
        self.expect_kw("dim")
        dim = int(self.expect_int().text)
        self.expect_op(")")
        return ("mode", kw_tok, LINEAR_ALGEBRA, dim)

    # -- formulas -----------------------------------------------------------

    def parse_formula(self):
        left = self.parse_imp()
        if self.at_op("<->"):
            op = self.advance()
            right = self.parse_imp()
            return RConn(op.line, op.col, op.end_col, "<->", [left, right])
        return left

    def parse_imp(self):
        left = self.parse_conj()
        if self.at_op("->"):
            op = self.advance()
            right = self.parse_imp()
            return RConn(op.line, op.col, op.end_col, "->", [left, right])
        return left

    def parse_conj(self):
        left = self.parse_unary()
        while self.at_op("/\\"):
            op = self.advance()
            right = self.parse_unary()
            left = RConn(op.line, op.col, op.end_col, "/\\", [left, right])
        return left

    def parse_unary(self):
        t = self.tok
        if self.at_kw("not"):
            self.advance()
            return RConn(t.line, t.col, t.end_col, "not", [self.parse_unary()])
        if self.at_kw("exists"):
            self.advance()
            var = self.expect_ident("variable name")
            self.expect_op(":")
            sort_tok = self.expect_ident("sort name")
            self.expect_op(".")
            body = self.parse_formula()
            return RExists(t.line, t.col, t.end_col, var.text, sort_tok.text, body, sort_tok)
        return self.parse_atom()

    def parse_atom(self):
        if self.at_op("("):
            save = self.pos
            try:
                self.advance()
                inner = self.parse_formula()
                self.expect_op(")")
                if not self.at_op("=", "<=", "<", "+", "-", "*"):
                    return inner
            except DslError:
                pass
            self.pos = save
        left = self.parse_term()
        if not self.at_op("=", "<=", "<"):
            found = self.tok.text or "end of input"
            raise self.error(f"expected '=', '<=' or '<', found {found!r}")
        op = self.advance()
        right = self.parse_term()
        return RRel(op.line, op.col, op.end_col, op.text, left, right)

    # -- terms --------------------------------------------------------------

    def parse_term(self):
        left = self.parse_product()
        while self.at_op("+", "-"):
            op = self.advance()
            right = self.parse_product()
            left = RArith(op.line, op.col, op.end_col, op.text, [left, right])
        return left

    def parse_product(self):
        left = self.parse_neg()
        while self.at_op("*"):
            op = self.advance()
            right = self.parse_neg()
            left = RArith(op.line, op.col, op.end_col, "*", [left, right])
        return left

    def parse_neg(self):
        if self.at_op("-"):
            op = self.advance()
            return RArith(op.line, op.col, op.end_col, "neg", [self.parse_neg()])
        return self.parse_primary()

    def parse_primary(self):
        t = self.tok
        if t.kind == "int":
            self.advance()
            return RLit(t.line, t.col, t.end_col, int(t.text))
        if self.at_op("("):
            self.advance()
            inner = self.parse_term()
            self.expect_op(")")
            return inner
        if self.at_kw("abs"):
            self.advance()
            self.expect_op("(")
            arg = self.parse_term()
            close = self.expect_op(")")
            return RArith(t.line, t.col, close.end_col, "abs", [arg])
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.advance()
            if self.at_op("("):
                self.advance()
                args = []
                if not self.at_op(")"):
                    args.append(self.parse_term())
                    while self.at_op(","):
                        self.advance()
                        args.append(self.parse_term())
                close = self.expect_op(")")
                end = close.end_col if close.line == t.line else t.end_col
                return RApp(t.line, t.col, end, t.text, args)
            return RIdent(t.line, t.col, t.end_col, t.text)
        found = t.text or "end of input"
        raise self.error(f"expected a term, found {found!r}")


# -- signature assembly and sort inference ----------------------------------------

def _build_signature(decls):
    sorts: Dict[str, Sort] = {}
    fns, consts = [], []
    mode, dim = FREE_TABLE, None
    value_fns = []
    for d in decls:
        kind = d[0]
        if kind in ("scalar", "sort", "value"):
            tok = d[1]
            if tok.text in sorts:
                raise DslError(f"sort {tok.text} declared twice", tok.line, tok.col, tok.end_col)
            k = {"scalar": SCALAR, "sort": CARRIER, "value": VALUE}[kind]
            sorts[tok.text] = Sort(tok.text, k)
        elif kind == "value-fn":
            value_fns.append(d[3])
    for result in value_fns:
        if result.text not in sorts:
            sorts[result.text] = Sort(result.text, VALUE)
        elif sorts[result.text].kind != VALUE:
            raise DslError(f"sort {result.text} is not an ordered-value sort",
                           result.line, result.col, result.end_col)
    for d in decls:
        kind = d[0]
        if kind in ("fn", "value-fn"):
            name, args, result = d[1], d[2], d[3]
            for s in (*args, result):
                if s.text not in sorts:
                    raise DslError(f"unknown sort {s.text}", s.line, s.col, s.end_col)
            fns.append((name, FnSymbol(name.text, tuple(a.text for a in args), result.text)))
        elif kind == "const":
            name, s = d[1], d[2]
            if s.text not in sorts:
                raise DslError(f"unknown sort {s.text}", s.line, s.col, s.end_col)
            consts.append((name, ConstSymbol(name.text, s.text)))
        elif kind == "mode":
            mode, dim = d[2], d[3]
    seen = {}
    for tok, sym in fns + consts:
        if sym.name in seen or sym.name in sorts:
            raise DslError(f"symbol {sym.name} declared twice", tok.line, tok.col, tok.end_col)
        seen[sym.name] = tok
    try:
        sig = Signature(tuple(sorts.values()), tuple(s for _, s in fns), tuple(s for _, s in consts))
    except SignatureError as exc:
        raise DslError(str(exc)) from None
    return sig, mode, dim


class _Typer:
    """Infers variable and literal sorts for one axiom and builds typed nodes."""

    def __init__(self, sig):
        self.sig = sig
        self.free: Dict[str, str] = {}
        self.strict = False
        self.value = sig.value_sort.name if sig.value_sort else None

    def err(self, node, msg):
        return DslError(msg, node.line, node.col, node.end_col)

    def kind(self, sort):
        return self.sig.sort(sort).kind

    def numeric(self, sort):
        return self.kind(sort) in (SCALAR, VALUE)

    def compatible(self, have, want):
        """Can a term of sort ``have`` be used where ``want`` is expected?"""
        if have == want:
            return True
        return self.kind(have) == SCALAR and self.kind(want) == VALUE

    def join(self, node, a, b):
        if a == b:
            return a
        kinds = {self.kind(a), self.kind(b)}
        if kinds == {SCALAR, VALUE}:
            return a if self.kind(a) == VALUE else b
        raise self.err(node, f"sort mismatch: {a} vs {b}")

    def var_sort(self, name, scope):
        if name in scope:
            return scope[name]
        return self.free.get(name)

    def bind_var(self, node, name, sort, scope):
        have = self.var_sort(name, scope)
        if have is None:
            self.free[name] = sort
        elif have != sort:
            raise self.err(node, f"variable {name} used at sort {sort} but has sort {have}")

    # synth returns a sort or None when not yet known
    def synth(self, node, scope):
        if isinstance(node, RIdent):
            c = self.sig.const(node.name)
            if c is not None and node.name not in scope:
                return c.sort
            if self.sig.fn(node.name) is not None:
                raise self.err(node, f"function {node.name} used without arguments")
            s = self.var_sort(node.name, scope)
            if s is None and self.strict:
                raise self.err(node, f"cannot infer the sort of variable {node.name}")
            return s
        if isinstance(node, RLit):
            return None
        if isinstance(node, RApp):
            f = self.sig.fn(node.name)
            if f is None:
                if self.sig.const(node.name) is not None:
                    raise self.err(node, f"constant {node.name} applied to arguments")
                raise self.err(node, f"unknown function symbol {node.name}")
            if len(node.args) != f.arity:
                raise self.err(node, f"arity mismatch: {node.name} takes {f.arity} argument(s), "
                                     f"got {len(node.args)}")
            for a, s in zip(node.args, f.args):
                self.check(a, s, scope)
            return f.result
        if isinstance(node, RArith):
            if node.op == "abs":
                if self.value is None:
                    raise self.err(node, "abs needs an ordered-value sort")
                s = self.synth(node.args[0], scope)
                if s is None and self.strict:
                    self.check(node.args[0], self.value, scope)
                elif s is not None and not self.numeric(s):
                    raise self.err(node, f"abs of non-numeric sort {s}")
                return self.value
            if node.op == "neg":
                s = self.synth(node.args[0], scope)
                if s is not None and not self.numeric(s):
                    raise self.err(node, f"arithmetic on non-numeric sort {s}")
                return s
            a = self.synth(node.args[0], scope)
            b = self.synth(node.args[1], scope)
            for s in (a, b):
                if s is not None and not self.numeric(s):
                    raise self.err(node, f"arithmetic on non-numeric sort {s}")
            if a is None and b is None:
                return None
            if a is None:
                self.check(node.args[0], b, scope)
                return b
            if b is None:
                self.check(node.args[1], a, scope)
                return a
            return self.join(node, a, b)
        raise self.err(node, "expected a term")

    def check(self, node, sort, scope):
        if isinstance(node, RIdent) and self.sig.const(node.name) is None and self.sig.fn(node.name) is None:
            if node.name in scope:
                if not self.compatible(scope[node.name], sort):
                    raise self.err(node, f"variable {node.name} has sort {scope[node.name]}, expected {sort}")
                return
            have = self.free.get(node.name)
            if have is None:
                self.free[node.name] = sort
            elif not self.compatible(have, sort):
                raise self.err(node, f"variable {node.name} used at sort {sort} but has sort {have}")
            return
        if isinstance(node, RLit):
            if not self.numeric(sort):
                raise self.err(node, f"integer literal used at non-numeric sort {sort}")
            return
        if isinstance(node, RArith) and node.op in ("+", "-", "*", "neg"):
            if not self.numeric(sort):
                raise self.err(node, f"arithmetic result used at non-numeric sort {sort}")
            s = self.synth(node, scope)
            if s is None:
                for a in node.args:
                    self.check(a, sort, scope)
                return
            if not self.compatible(s, sort):
                raise self.err(node, f"term has sort {s}, expected {sort}")
            return
        s = self.synth(node, scope)
        if s is not None and not self.compatible(s, sort):
            raise self.err(node, f"term has sort {s}, expected {sort}")

    def formula(self, node, scope):
        if isinstance(node, RRel):
            a = self.synth(node.left, scope)
            b = self.synth(node.right, scope)
            if a is None and b is not None:
                self.check(node.left, b, scope)
            elif b is None and a is not None:
                self.check(node.right, a, scope)
            elif a is None and b is None:
                default = self.value if node.op != "=" else None
                if default is not None and self.strict:
                    self.check(node.left, default, scope)
                    self.check(node.right, default, scope)
                elif self.strict and default is None:
                    if isinstance(node.left, RLit) and isinstance(node.right, RLit) and self.value:
                        self.check(node.left, self.value, scope)
                        self.check(node.right, self.value, scope)
                    else:
                        raise self.err(node, "cannot infer the sorts of this comparison")
            else:
                s = self.join(node, a, b)
                if node.op != "=" and self.kind(s) != VALUE:
                    raise self.err(node, f"order comparison on non-ordered sort {s}")
            return
        if isinstance(node, RConn):
            for a in node.args:
                self.formula(a, scope)
            return
        if isinstance(node, RExists):
            tok = node.sort_tok
            if not self.sig.has_sort(node.sort):
                raise DslError(f"quantifier over undeclared sort {node.sort}", tok.line, tok.col, tok.end_col)
            if self.sig.const(node.var) is not None or self.sig.fn(node.var) is not None:
                raise self.err(node, f"bound variable {node.var} shadows a symbol")
            inner = dict(scope)
            inner[node.var] = node.sort
            self.formula(node.body, inner)
            return
        raise self.err(node, "expected a formula")

    # -- typed construction ------------------------------------------------

    def build_term(self, node, scope, expected=None):
        if isinstance(node, RIdent):
            c = self.sig.const(node.name)
            if c is not None and node.name not in scope:
                return Const(c.name, c.sort)
            return Var(node.name, self.var_sort(node.name, scope))
        if isinstance(node, RLit):
            return Lit(node.value, expected)
        if isinstance(node, RApp):
            f = self.sig.fn(node.name)
            args = tuple(self.build_term(a, scope, s) for a, s in zip(node.args, f.args))
            return App(f.name, args, f.result)
        if isinstance(node, RArith):
            if node.op == "abs":
                s = self.synth(node.args[0], scope) or self.value
                return Arith("abs", (self.build_term(node.args[0], scope, s),), self.value)
            s = self.synth(node, scope)
            if s is None or (expected is not None and s != expected and self.compatible(s, expected)
                             and self._all_lits(node)):
                s = expected
            if node.op == "neg":
                return Arith("neg", (self.build_term(node.args[0], scope, s),), s)
            args = []
            for a in node.args:
                sa = self.synth(a, scope)
                args.append(self.build_term(a, scope, s if sa is None else sa))
            return Arith(node.op, tuple(args), s)
        raise self.err(node, "expected a term")

    def _all_lits(self, node):
        if isinstance(node, RLit):
            return True
        if isinstance(node, RArith) and node.op != "abs":
            return all(self._all_lits(a) for a in node.args)
        return False

    def build_formula(self, node, scope):
        if isinstance(node, RRel):
            a = self.synth(node.left, scope)
            b = self.synth(node.right, scope)
            if a is None and b is None:
                a = b = self.value
            a = a or b
            b = b or a
            left = self.build_term(node.left, scope, a)
            right = self.build_term(node.right, scope, b)
            if node.op == "=":
                return Eq(left, right)
            return Order(node.op, left, right)
        if isinstance(node, RConn):
            args = [self.build_formula(a, scope) for a in node.args]
            if node.op == "not":
                return Not(args[0])
            return {"/\\": And, "->": Implies, "<->": Iff}[node.op](*args)
        if isinstance(node, RExists):
            inner = dict(scope)
            inner[node.var] = node.sort
            return Exists(Var(node.var, node.sort), self.build_formula(node.body, inner))
        raise self.err(node, "expected a formula")

    def type_axiom(self, raw):
        self.free = {}
        self.strict = False
        self.formula(raw, {})
        self.formula(raw, {})
        self.strict = True
        self.formula(raw, {})
        return self.build_formula(raw, {})


def parse_theory_source(text) -> TheorySource:
    if not isinstance(text, str):
        raise DslError("theory text must be a string")
    try:
        return _parse_theory_source(text)
    except RecursionError:
        raise DslError("formula nesting is too deep") from None


def _parse_theory_source(text) -> TheorySource:
    p = _Parser(text)
    name, decls = p.parse_file()
    sig, mode, dim = _build_signature(decls)
    typer = _Typer(sig)
    axioms, spans = [], {}
    for d in decls:
        if d[0] != "axiom":
            continue
        tok, raw, span = d[1], d[2], d[3]
        if tok.text in spans:
            raise DslError(f"axiom {tok.text} defined twice", tok.line, tok.col, tok.end_col)
        axioms.append(Axiom(tok.text, typer.type_axiom(raw)))
        spans[tok.text] = span
    modes = [d for d in decls if d[0] == "mode"]
    if len(modes) > 1:
        t = modes[1][1]
        raise DslError("mode declared twice", t.line, t.col, t.end_col)
    if mode == LINEAR_ALGEBRA:
        _check_linear_algebra(sig, modes[0][1])
    try:
        theory = Theory(name, sig, tuple(axioms), mode, dim)
    except SignatureError as exc:
        raise DslError(str(exc)) from None
    return TheorySource(text, theory, spans)


def _check_linear_algebra(sig, tok):
    carriers = sig.sorts_of_kind(CARRIER)
    scalars = sig.sorts_of_kind(SCALAR)
    if len(carriers) != 1 or len(scalars) != 1:
        raise DslError("linear-algebra mode needs exactly one carrier sort and one scalar sort",
                       tok.line, tok.col, tok.end_col)


def parse_theory(text) -> Theory:
    """Parse and type-check theory text."""
    return parse_theory_source(text).theory


# -- serialization --------------------------------------------------------------

_TERM_PREC = {"+": 1, "-": 1, "*": 2, "neg": 3}


def format_term(t, ctx=0) -> str:
    if isinstance(t, (Var, Const)):
        return t.name
    if isinstance(t, Lit):
        return str(t.value)
    if isinstance(t, App):
        return f"{t.fn}(" + ", ".join(format_term(a) for a in t.args) + ")"
    if isinstance(t, Arith):
        if t.op == "abs":
            return f"abs({format_term(t.args[0])})"
        prec = _TERM_PREC[t.op]
        if t.op == "neg":
            s = "-" + format_term(t.args[0], prec)
        else:
            s = f"{format_term(t.args[0], prec)} {t.op} {format_term(t.args[1], prec + 1)}"
        return f"({s})" if prec < ctx else s
    raise TypeError(f"cannot format {t!r}")


def format_formula(f, ctx=0) -> str:
    if isinstance(f, Eq):
        return f"{format_term(f.left)} = {format_term(f.right)}"
    if isinstance(f, Order):
        return f"{format_term(f.left)} {f.op} {format_term(f.right)}"
    if isinstance(f, Not):
        s, prec = "not " + format_formula(f.body, 4), 4
    elif isinstance(f, And):
        s, prec = f"{format_formula(f.left, 3)} /\\ {format_formula(f.right, 4)}", 3
    elif isinstance(f, Implies):
        s, prec = f"{format_formula(f.left, 3)} -> {format_formula(f.right, 2)}", 2
    elif isinstance(f, Iff):
        s, prec = f"{format_formula(f.left, 2)} <-> {format_formula(f.right, 2)}", 1
    elif isinstance(f, Exists):
        s, prec = f"exists {f.var.name}:{f.var.sort}. {format_formula(f.body, 0)}", 0
        return f"({s})" if ctx > 0 else s
    else:
        raise TypeError(f"cannot format {f!r}")
    return f"({s})" if prec < ctx else s


def serialize_theory(theory) -> str:
    """Canonical text: declarations grouped and sorted, one axiom per line."""
    sig = theory.signature
    lines = [f"theory {theory.name} {{"]
    for kind, kw in ((SCALAR, "scalar"), (CARRIER, "sort"), (VALUE, "value")):
        for s in sig.sorts_of_kind(kind):
            lines.append(f"  {kw} {s.name}")
    for f in sig.fns:
        lines.append(f"  fn {f.name}(" + ", ".join(f.args) + f") -> {f.result}")
    for c in sig.consts:
        lines.append(f"  const {c.name} : {c.sort}")
    if theory.mode == LINEAR_ALGEBRA:
        lines.append(f"  mode linear-algebra(dim {theory.dim})")
    for a in theory.axioms:
        lines.append(f"  axiom {a.name}: {format_formula(a.formula)}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def load_theory_file(path) -> Theory:
    with open(path, encoding="utf-8") as fh:
        return parse_theory(fh.read())


def parse_formula(text, signature, free_sorts: Optional[Dict[str, str]] = None):
    """Parse a single formula against an existing signature."""
    p = _Parser(text)
    raw = p.parse_formula()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r} after formula")
    typer = _Typer(signature)
    typer.free = dict(free_sorts or {})
    typer.formula(raw, {})
    typer.formula(raw, {})
    typer.strict = True
    typer.formula(raw, {})
    return typer.build_formula(raw, {})
