"""Finite value domains: GF(p^k), exact rational grids and samples, carriers.

Field elements are encoded as integers ``c0 + c1*p + c2*p^2 + ...`` where
``c0 + c1*u + c2*u^2 + ...`` is the residue polynomial modulo the fixed
irreducible polynomial of that field (see ``IRREDUCIBLE``).  For prime fields
this is the usual residue ``0..p-1``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence, Tuple

from .errors import FieldError, InvalidPrime, OutOfRange

MAX_ORDER = 16

# Coefficients low degree first; all monic.
IRREDUCIBLE = {
    (2, 2): (1, 1, 1),        # u^2 + u + 1
    (2, 3): (1, 1, 0, 1),     # u^3 + u + 1
    (3, 2): (1, 0, 1),        # u^2 + 1
    (2, 4): (1, 1, 0, 0, 1),  # u^4 + u + 1
}

SUPPORTED = ((2, 1), (3, 1), (2, 2), (5, 1), (7, 1), (2, 3), (3, 2), (11, 1), (13, 1), (2, 4))


def is_prime(n):
    if n < 2:
        return False
    return all(n % d for d in range(2, int(n ** 0.5) + 1))


def _digits(x, p, k):
    out = []
    for _ in range(k):
        out.append(x % p)
        x //= p
    return out


def _encode(coeffs, p):
    return sum(c * p ** i for i, c in enumerate(coeffs))


def _poly_mulmod(a, b, p, modulus):
    k = len(modulus) - 1
    prod = [0] * (2 * k - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                prod[i + j] = (prod[i + j] + ai * bj) % p
    # modulus is monic: reduce from the top
    for deg in range(len(prod) - 1, k - 1, -1):
        c = prod[deg]
        if c:
            for i, m in enumerate(modulus):
                prod[deg - k + i] = (prod[deg - k + i] - c * m) % p
    return prod[:k]


def _poly_name(coeffs):
    terms = []
    for deg in range(len(coeffs) - 1, -1, -1):
        c = coeffs[deg]
        if not c:
            continue
        if deg == 0:
            terms.append(str(c))
        else:
            mono = "u" if deg == 1 else f"u^{deg}"
            terms.append(mono if c == 1 else f"{c}{mono}")
    return "+".join(terms) or "0"


class FiniteField:
    """GF(p^k) with precomputed operation tables.

    Elements are the integers ``0..q-1``; 0 and 1 are the field's zero and one.
    The field axioms are checked exhaustively when the tables are built.
    """

    def __init__(self, p, k=1):
        if not is_prime(p):
            raise InvalidPrime(f"{p} is not prime")
        if (p, k) not in SUPPORTED:
            raise OutOfRange(f"GF({p}^{k}) is not supported; supported orders: "
                             + ", ".join(str(pp ** kk) for pp, kk in SUPPORTED))
        self.p = p
        self.k = k
        self.q = p ** k
        q = self.q
        if k == 1:
            add = [[(a + b) % p for b in range(q)] for a in range(q)]
            mul = [[(a * b) % p for b in range(q)] for a in range(q)]
            names = [str(a) for a in range(q)]
            self.modulus = (0, 1)
        else:
            modulus = IRREDUCIBLE[(p, k)]
            self.modulus = modulus
            digits = [_digits(a, p, k) for a in range(q)]
            add = [[_encode([(x + y) % p for x, y in zip(digits[a], digits[b])], p)
                    for b in range(q)] for a in range(q)]
            mul = [[_encode(_poly_mulmod(digits[a], digits[b], p, modulus), p)
                    for b in range(q)] for a in range(q)]
            names = [_poly_name(digits[a]) for a in range(q)]
        self.add_table = tuple(tuple(r) for r in add)
        self.mul_table = tuple(tuple(r) for r in mul)
        self.neg_table = tuple(add[a].index(0) for a in range(q))
        inv = [None] * q
        for a in range(1, q):
            inv[a] = mul[a].index(1)
        self.inv_table = tuple(inv)
        self.names = tuple(names)
        self._by_name = {n: i for i, n in enumerate(names)}
        self._verify()

    def _verify(self):
        q, add, mul = self.q, self.add_table, self.mul_table
        r = range(q)
        for a in r:
            if add[a][0] != a or mul[a][1] != a:
                raise FieldError("identity law violated")
            if a and mul[a][self.inv_table[a]] != 1:
                raise FieldError("inverse law violated")
            for b in r:
                if add[a][b] != add[b][a] or mul[a][b] != mul[b][a]:
                    raise FieldError("commutativity violated")
                for c in r:
                    if add[add[a][b]][c] != add[a][add[b][c]]:
                        raise FieldError("additive associativity violated")
                    if mul[mul[a][b]][c] != mul[a][mul[b][c]]:
                        raise FieldError("multiplicative associativity violated")
                    if mul[a][add[b][c]] != add[mul[a][b]][mul[a][c]]:
                        raise FieldError("distributivity violated")

    # pickling and equality go through (p, k): tables are derived data
    def __reduce__(self):
        return make_finite_field, (self.p, self.k)

    def __eq__(self, other):
        return isinstance(other, FiniteField) and (self.p, self.k) == (other.p, other.k)

    def __hash__(self):
        return hash(("GF", self.p, self.k))

    def __repr__(self):
        return f"GF({self.q})"

    @property
    def token(self):
        return f"gf{self.q}"

    @property
    def characteristic(self):
        return self.p

    @property
    def zero(self):
        return 0

    @property
    def one(self):
        return 1

    @property
    def elements(self):
        return range(self.q)

    def __len__(self):
        return self.q

    def add(self, a, b):
        return self.add_table[a][b]

    def mul(self, a, b):
        return self.mul_table[a][b]

    def neg(self, a):
        return self.neg_table[a]

    def sub(self, a, b):
        return self.add_table[a][self.neg_table[b]]

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("0 has no inverse")
        return self.inv_table[a]

    def power(self, a, n):
        out = 1
        for _ in range(n):
            out = self.mul_table[out][a]
        return out

    def from_int(self, n):
        """The element 1+1+...+1 (n times); negative n gives its negative."""
        return n % self.p

    def name(self, a):
        return self.names[a]

    def element(self, name):
        try:
            return self._by_name[str(name).strip()]
        except KeyError:
            raise FieldError(f"{name!r} is not an element of {self!r}") from None

    def frobenius(self):
        return tuple(self.power(a, self.p) for a in self.elements)

    def generator(self):
        """Smallest element generating the multiplicative group."""
        for g in range(1, self.q):
            seen = {1}
            x = g
            while x != 1:
                seen.add(x)
                x = self.mul_table[x][g]
            if len(seen) == self.q - 1:
                return g
        raise FieldError("no multiplicative generator")  # pragma: no cover


@lru_cache(maxsize=None)
def make_finite_field(p, k=1) -> FiniteField:
    return FiniteField(p, k)


def field_from_order(q) -> FiniteField:
    for p, k in SUPPORTED:
        if p ** k == q:
            return make_finite_field(p, k)
    for p in range(2, q + 1):
        if is_prime(p):
            k, r = 0, q
            while r % p == 0:
                r //= p
                k += 1
            if r == 1:
                return make_finite_field(p, k)  # raises OutOfRange
            break
    raise InvalidPrime(f"{q} is not a prime power")


def parse_field(token) -> FiniteField:
    """Parse a ``gf<q>`` token such as ``gf4``."""
    t = str(token).strip().lower()
    if not t.startswith("gf") or not t[2:].isdigit():
        raise FieldError(f"field token must look like gf<q>, got {token!r}")
    return field_from_order(int(t[2:]))


# -- multiplicative self-maps ------------------------------------------------

class Bucket(str, Enum):
    ZERO = "ZERO"
    ONE = "ONE"
    UNIT_ENDO = "UNIT_ENDO"


@dataclass(frozen=True)
class MultiplicativeMap:
    values: Tuple[int, ...]
    bucket: Bucket

    def __call__(self, a):
        return self.values[a]


def classify_map(field, values) -> Optional[Bucket]:
    """Bucket of a self-map satisfying s(ab) = s(a)s(b), or None if it does not."""
    mul = field.mul_table
    for a in field.elements:
        for b in field.elements:
            if values[mul[a][b]] != mul[values[a]][values[b]]:
                return None
    if all(v == 0 for v in values):
        return Bucket.ZERO
    if all(v == 1 for v in values):
        return Bucket.ONE
    return Bucket.UNIT_ENDO


def multiplicative_maps(field) -> list:
    """All self-maps s of the field with s(ab) = s(a)s(b), sorted by value tuple.

    If s(0) != 0 then s(0) = s(0)s(a) forces s = 1 everywhere; if s(0) = 0 and
    s(1) = 0 then s = 0.  Otherwise s(1) = 1, units go to units and s restricts
    to an endomorphism of the cyclic unit group, fixed by the exponent j with
    s(g) = g^j for a generator g.  That gives q + 1 maps in total.
    """
    q = field.q
    maps = [(0,) * q, (1,) * q]
    g = field.generator()
    log = {}
    x = 1
    for i in range(q - 1):
        log[x] = i
        x = field.mul(x, g)
    for j in range(q - 1):
        gj = field.power(g, j)
        values = [0] * q
        for a in range(1, q):
            values[a] = field.power(gj, log[a])
        maps.append(tuple(values))
    out = []
    for values in sorted(set(maps)):
        bucket = classify_map(field, values)
        if bucket is None:  # pragma: no cover - guarded by the derivation above
            raise FieldError(f"constructed map {values} is not multiplicative")
        out.append(MultiplicativeMap(values, bucket))
    return out


# -- rationals ---------------------------------------------------------------

def parse_rational(text) -> Fraction:
    t = str(text).strip()
    if not t:
        raise ValueError("empty rational")
    if any(c in t for c in ".eE"):
        raise ValueError(f"rationals must be written as integers or p/q, got {text!r}")
    return Fraction(t)


def parse_rational_list(text) -> Tuple[Fraction, ...]:
    return tuple(parse_rational(part) for part in str(text).split(","))


def format_rational(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class RationalGrid:
    """Finite codomain of exact rationals for searched value-sorted tables."""

    values: Tuple[Fraction, ...]

    def __post_init__(self):
        vals = tuple(Fraction(v) for v in self.values)
        if not vals:
            raise ValueError("a rational grid needs at least one value")
        if len(set(vals)) != len(vals):
            raise ValueError("rational grid values must be distinct")
        object.__setattr__(self, "values", vals)

    @classmethod
    def parse(cls, text):
        return cls(parse_rational_list(text))

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    @property
    def token(self):
        return ",".join(format_rational(v) for v in self.values)


@dataclass(frozen=True)
class RationalSample:
    """Finite sample of exact rationals or rational vectors.

    Used as the scalar domain and as the vector carrier when a theory is checked
    on a finite window of Q or Q^d: sums and multiples that leave the sample are
    undefined, so the affected axiom instances are skipped.
    """

    points: Tuple[object, ...]

    def __post_init__(self):
        pts = []
        for p in self.points:
            pts.append(tuple(Fraction(c) for c in p) if isinstance(p, (tuple, list)) else Fraction(p))
        if not pts:
            raise ValueError("a sample needs at least one point")
        if len(set(pts)) != len(pts):
            raise ValueError("sample points must be distinct")
        object.__setattr__(self, "points", tuple(pts))

    @classmethod
    def parse(cls, text):
        return cls(parse_rational_list(text))

    def __len__(self):
        return len(self.points)

    @property
    def is_vector(self):
        return isinstance(self.points[0], tuple)

    def index(self, point):
        try:
            return self.points.index(point)
        except ValueError:
            return None

    def name(self, i):
        p = self.points[i]
        if isinstance(p, tuple):
            return "(" + ",".join(format_rational(c) for c in p) + ")"
        return format_rational(p)

    def add(self, a, b):
        if isinstance(a, tuple):
            return tuple(x + y for x, y in zip(a, b))
        return a + b

    def scale(self, lam, a):
        if isinstance(a, tuple):
            return tuple(lam * x for x in a)
        return lam * a

    def zero(self):
        p = self.points[0]
        return tuple(Fraction(0) for _ in p) if isinstance(p, tuple) else Fraction(0)


@dataclass(frozen=True)
class EnumeratedCarrier:
    size: int
    names: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("carrier size must be >= 1")
        names = tuple(self.names) or default_names(self.size)
        if len(names) != self.size or len(set(names)) != self.size:
            raise ValueError("carrier names must be distinct, one per element")
        object.__setattr__(self, "names", names)

    def __len__(self):
        return self.size

    def name(self, i):
        return self.names[i]

    def element(self, name):
        return self.names.index(name)


def default_names(n):
    letters = "abcdefghijklmnopqrstuvwxyz"
    if n <= len(letters):
        return tuple(letters[:n])
    return tuple(f"a{i}" for i in range(n))


class VectorSpace:
    """F^n with basis b0 = e, b1, ..., b(n-1).

    Vector index = sum of coordinate_i * q^i, so e is index 1 and 0 is index 0.
    """

    def __init__(self, field, dim):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.field = field
        self.dim = dim
        self.size = field.q ** dim
        q = field.q
        self.coords = tuple(tuple(_digits(v, q, dim)) for v in range(self.size))
        self._index = {c: i for i, c in enumerate(self.coords)}
        self.add_table = tuple(
            tuple(self.index(tuple(field.add(a, b) for a, b in zip(self.coords[x], self.coords[y])))
                  for y in range(self.size))
            for x in range(self.size))
        self.smul_table = tuple(
            tuple(self.index(tuple(field.mul(lam, a) for a in self.coords[x])) for x in range(self.size))
            for lam in field.elements)
        self.names = tuple(self._name(v) for v in range(self.size))
        self._by_name = {n: i for i, n in enumerate(self.names)}

    def __reduce__(self):
        return VectorSpace, (self.field, self.dim)

    def __eq__(self, other):
        return isinstance(other, VectorSpace) and (self.field, self.dim) == (other.field, other.dim)

    def __hash__(self):
        return hash(("V", self.field, self.dim))

    def __len__(self):
        return self.size

    def index(self, coords):
        return self._index[tuple(coords)]

    def basis(self, i):
        c = [0] * self.dim
        c[i] = 1
        return self.index(c)

    @property
    def unit(self):
        return self.basis(0)

    def add(self, x, y):
        return self.add_table[x][y]

    def smul(self, lam, x):
        return self.smul_table[lam][x]

    def basis_name(self, i):
        return "e" if i == 0 else f"b{i}"

    def _name(self, v):
        parts = []
        for i, c in enumerate(self.coords[v]):
            if not c:
                continue
            cname = self.field.name(c)
            if c == 1:
                cname = ""
            elif "+" in cname:
                cname = f"({cname})"
            parts.append(cname + self.basis_name(i))
        return "+".join(parts) or "0"

    def name(self, v):
        return self.names[v]

    def element(self, name):
        try:
            return self._by_name[str(name).strip()]
        except KeyError:
            raise ValueError(f"{name!r} is not a vector of {self.field!r}^{self.dim}") from None

    def span_unit(self):
        """Indices of the scalar multiples of e."""
        return {self.smul(lam, self.unit) for lam in self.field.elements}


def all_self_maps(field) -> Sequence[Tuple[int, ...]]:
    """Every map F -> F as a value tuple (q^q of them). Brute force, small q only."""
    return itertools.product(range(field.q), repeat=field.q)
