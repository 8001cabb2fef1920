import pickle
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from axred.domains import (SUPPORTED, Bucket, RationalGrid, RationalSample, VectorSpace, field_from_order,
                           make_finite_field, multiplicative_maps, parse_field, parse_rational)
from axred.errors import FieldError, InvalidPrime, OutOfRange

import oracles

FIELDS = [make_finite_field(p, k) for p, k in SUPPORTED]


def test_gf4_generator_squares_to_u_plus_one():
    F = make_finite_field(2, 2)
    u = F.element("u")
    assert F.name(F.mul(u, u)) == "u+1"


def test_gf3_two_plus_two():
    F = make_finite_field(3, 1)
    assert F.add(2, 2) == 1


def test_gf5_characteristic_and_inverse_pair():
    F = make_finite_field(5, 1)
    assert F.characteristic == 5
    assert F.mul(2, 3) == 1


def test_composite_prime_rejected():
    with pytest.raises(InvalidPrime):
        make_finite_field(4, 1)


def test_unsupported_order_rejected():
    with pytest.raises(OutOfRange):
        make_finite_field(11, 3)


@pytest.mark.parametrize("F", FIELDS, ids=lambda F: f"q{F.q}")
def test_field_laws_exhaustive(F):
    r = F.elements
    for a in r:
        assert F.add(a, F.zero) == a and F.mul(a, F.one) == a
        assert F.add(a, F.neg(a)) == F.zero
        if a != F.zero:
            assert F.mul(a, F.inv(a)) == F.one
        for b in r:
            assert F.add(a, b) == F.add(b, a)
            assert F.mul(a, b) == F.mul(b, a)
            for c in r:
                assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
                assert F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c))


@pytest.mark.parametrize("q", [4, 8, 9])
def test_prime_power_fields_agree_with_frobenius(q):
    F = field_from_order(q)
    frob = F.frobenius()
    for a in F.elements:
        for b in F.elements:
            assert frob[F.add(a, b)] == F.add(frob[a], frob[b])
            assert frob[F.mul(a, b)] == F.mul(frob[a], frob[b])


@pytest.mark.parametrize("q", [2, 3, 4, 5])
def test_multiplicative_maps_match_brute_force(q):
    F = field_from_order(q)
    found = multiplicative_maps(F)
    assert sorted(m.values for m in found) == sorted(oracles.multiplicative_self_maps(q))
    assert Counter(m.bucket.value for m in found) == Counter(
        oracles.bucket_of(s) for s in oracles.multiplicative_self_maps(q))


@pytest.mark.parametrize("q,total,endo", [(2, 3, 1), (3, 4, 2), (4, 5, 3)])
def test_trichotomy_bucket_counts(q, total, endo):
    maps = multiplicative_maps(field_from_order(q))
    buckets = Counter(m.bucket for m in maps)
    assert len(maps) == total
    assert buckets == {Bucket.ZERO: 1, Bucket.ONE: 1, Bucket.UNIT_ENDO: endo}


def test_gf4_endomorphisms_include_frobenius():
    F = field_from_order(4)
    values = {m.values for m in multiplicative_maps(F)}
    assert tuple(F.frobenius()) in values
    assert tuple(F.elements) in values
    assert (0, 1, 1, 1) in values


@pytest.mark.parametrize("F", FIELDS, ids=lambda F: f"q{F.q}")
def test_multiplicative_maps_count_is_q_plus_one(F):
    maps = multiplicative_maps(F)
    assert len(maps) == F.q + 1
    for m in maps:
        for a in F.elements:
            for b in F.elements:
                assert m(F.mul(a, b)) == F.mul(m(a), m(b))


def test_rationals_are_exact():
    assert parse_rational("1/3") + parse_rational("1/6") == Fraction(1, 2)
    with pytest.raises(ValueError):
        parse_rational("0.5")


def test_grid_keeps_order_and_rejects_duplicates():
    assert list(RationalGrid.parse("0,1/2,1,2")) == [0, Fraction(1, 2), 1, 2]
    with pytest.raises(ValueError):
        RationalGrid.parse("0,1,1")


def test_parse_field_tokens():
    assert parse_field("gf4").q == 4
    assert parse_field("GF3").q == 3
    with pytest.raises(FieldError):
        parse_field("F(3)")


def test_domains_pickle():
    F = field_from_order(9)
    S = VectorSpace(F, 2)
    assert pickle.loads(pickle.dumps(F)) == F
    assert pickle.loads(pickle.dumps(S)) == S
    sample = RationalSample.parse("0,1,-1,1/2")
    assert pickle.loads(pickle.dumps(sample)) == sample


@given(st.fractions(), st.fractions(), st.fractions())
def test_rational_field_laws(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c
    if b:
        assert (a / b) * b == a


@given(st.sampled_from(FIELDS), st.data())
def test_vector_space_laws(F, data):
    S = VectorSpace(F, 2)
    x = data.draw(st.integers(0, S.size - 1))
    y = data.draw(st.integers(0, S.size - 1))
    lam = data.draw(st.sampled_from(F.elements))
    mu = data.draw(st.sampled_from(F.elements))
    assert S.add(x, y) == S.add(y, x)
    assert S.smul(lam, S.add(x, y)) == S.add(S.smul(lam, x), S.smul(lam, y))
    assert S.smul(F.add(lam, mu), x) == S.add(S.smul(lam, x), S.smul(mu, x))
    assert S.smul(F.one, x) == x
