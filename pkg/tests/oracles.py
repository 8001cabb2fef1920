"""Brute-force reference computations, written without the package under test.

Each oracle builds candidates with itertools and checks the laws directly in
plain Python, so agreement with the search engine is an independent check.
"""
import itertools
from fractions import Fraction


# -- small fields, coded as integers 0..q-1 ------------------------------------------

class PrimeField:
    def __init__(self, p):
        self.q = p
        self.p = p

    def add(self, a, b):
        return (a + b) % self.p

    def mul(self, a, b):
        return (a * b) % self.p

    def neg(self, a):
        return (-a) % self.p


class GF4:
    """Bit i of the code is the coefficient of u^i, with u^2 = u + 1."""

    q = 4
    p = 2

    def add(self, a, b):
        return a ^ b

    def mul(self, a, b):
        r = 0
        for i in range(2):
            if (b >> i) & 1:
                r ^= a << i
        if r & 4:
            r ^= 0b111
        return r

    def neg(self, a):
        return a


def field(q):
    return GF4() if q == 4 else PrimeField(q)


# -- metric ------------------------------------------------------------------------------

def metric_reduced_models(n, grid):
    """All d: n x n -> grid with d(x,y)=0 <-> x=y and d(x,y) <= d(x,z)+d(y,z)."""
    grid = [Fraction(g) for g in grid]
    pts = range(n)
    out = []
    for vals in itertools.product(grid, repeat=n * n):
        d = lambda x, y: vals[x * n + y]
        if any((d(x, y) == 0) != (x == y) for x in pts for y in pts):
            continue
        if all(d(x, y) <= d(x, z) + d(y, z) for x in pts for y in pts for z in pts):
            out.append(vals)
    return out


def metric_full_holds(vals, n):
    d = lambda x, y: vals[x * n + y]
    pts = range(n)
    m1 = all(d(x, y) >= 0 for x in pts for y in pts)
    m3 = all(d(x, y) == d(y, x) for x in pts for y in pts)
    m4 = all(d(x, y) <= d(x, z) + d(z, y) for x in pts for y in pts for z in pts)
    return m1 and m3 and m4


# -- inner product over GF(p), free tables ------------------------------------------------

def ip_reduced_count(p, n):
    """Models of S9, S10, S11, S13 on an n-element carrier over GF(p), by generate-and-test."""
    F = PrimeField(p)
    V = range(n)
    count = 0
    for add in itertools.product(V, repeat=n * n):
        for smul in itertools.product(V, repeat=p * n):
            a = lambda x, y: add[x * n + y]
            s = lambda l, x: smul[l * n + x]
            for ip in itertools.product(range(p), repeat=n * n):
                g = lambda x, y: ip[x * n + y]
                if any(g(x, y) != g(y, x) for x in V for y in V):
                    continue
                if any(g(a(x, y), z) != F.add(g(x, z), g(y, z)) for x in V for y in V for z in V):
                    continue
                if any(g(s(l, x), y) != F.mul(l, g(x, y)) for l in range(p) for x in V for y in V):
                    continue
                if any(F.add(g(x, x), g(y, y)) == F.mul(2 % p, g(x, y)) and x != y for x in V for y in V):
                    continue
                count += 1
    return count


# -- unital algebras with a star map over F^dim ------------------------------------------

def _vectors(F, dim):
    return list(itertools.product(range(F.q), repeat=dim))


def _vadd(F, x, y):
    return tuple(F.add(a, b) for a, b in zip(x, y))


def _vsmul(F, l, x):
    return tuple(F.mul(l, a) for a in x)


def _unit(dim):
    return (1,) + (0,) * (dim - 1)


def _basis(dim, i):
    return tuple(1 if k == i else 0 for k in range(dim))


def _multiplier(F, dim, products):
    """Bilinear product with e as unit; ``products[(i, j)]`` gives b_i * b_j for i, j >= 1."""
    table = {}
    for i in range(dim):
        for j in range(dim):
            if i == 0:
                table[(i, j)] = _basis(dim, j)
            elif j == 0:
                table[(i, j)] = _basis(dim, i)
            else:
                table[(i, j)] = products[(i, j)]

    def mul(x, y):
        acc = (0,) * dim
        for i, xi in enumerate(x):
            if not xi:
                continue
            for j, yj in enumerate(y):
                if yj:
                    acc = _vadd(F, acc, _vsmul(F, F.mul(xi, yj), table[(i, j)]))
        return acc
    return mul


def invol_reduced_models(q, dim, all_stars=False):
    """Models of C3 and C5, as (products, star) pairs keyed by coordinate tuples.

    Stars are drawn from maps x -> l(x) e - x (the maps C5 allows) unless
    ``all_stars`` asks for every self-map, in which case C5 is checked directly.
    """
    F = field(q)
    vecs = _vectors(F, dim)
    e = _unit(dim)
    span = {_vsmul(F, l, e) for l in range(q)}
    pairs = [(i, j) for i in range(1, dim) for j in range(1, dim)]
    out = []
    for prods in itertools.product(vecs, repeat=len(pairs)):
        products = dict(zip(pairs, prods))
        mul = _multiplier(F, dim, products)
        mults = {(x, y): mul(x, y) for x in vecs for y in vecs}
        if all_stars:
            candidates = itertools.product(vecs, repeat=len(vecs))
        else:
            choices = [[_vadd(F, _vsmul(F, l, e), tuple(F.neg(a) for a in x)) for l in range(q)] for x in vecs]
            candidates = itertools.product(*choices)
        for images in candidates:
            star = dict(zip(vecs, images))
            if any(_vadd(F, x, star[x]) not in span for x in vecs):
                continue
            if all(star[mults[(x, y)]] == mults[(star[y], star[x])] for x in vecs for y in vecs):
                out.append((tuple(sorted(products.items())), tuple(sorted(star.items()))))
    return out


def invol_fails_c6(q, dim, model):
    F = field(q)
    products, star = dict(model[0]), dict(model[1])
    mul = _multiplier(F, dim, products)
    span = {_vsmul(F, l, _unit(dim)) for l in range(q)}
    return any(mul(x, star[x]) not in span for x in star)


# -- multiplicative self-maps --------------------------------------------------------------

def multiplicative_self_maps(q):
    """Every s: F -> F with s(ab) = s(a)s(b), found by trying all q^q maps."""
    F = field(q)
    out = []
    for s in itertools.product(range(q), repeat=q):
        if all(s[F.mul(a, b)] == F.mul(s[a], s[b]) for a in range(q) for b in range(q)):
            out.append(s)
    return out


def bucket_of(s):
    if all(v == 0 for v in s):
        return "ZERO"
    if all(v == 1 for v in s):
        return "ONE"
    return "UNIT_ENDO"
