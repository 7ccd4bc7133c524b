from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from affrank.errors import DivisionByZeroError, FieldMismatchError, InvalidSpecError
from affrank.field import GF, add, enumerate_elems, inv, is_square, mul, neg

PRIMES = [3, 5, 7, 11, 13, 17, 19, 23, 29, 31]


def test_arithmetic_examples():
    f3, f5 = GF(3), GF(5)
    assert int(add(f3(2), f3(2))) == 1
    assert int(neg(f3(1))) == 2
    assert int(mul(f5(3), f5(4))) == 2


def test_inverse_examples():
    assert int(inv(GF(3)(2))) == 2
    assert int(inv(GF(5)(3))) == 2
    assert int(inv(GF(7)(1))) == 1


def test_inverse_of_zero_raises():
    with pytest.raises(DivisionByZeroError):
        inv(GF(3)(0))
    with pytest.raises(ZeroDivisionError):
        GF(5)(1) / GF(5)(0)


def test_square_examples():
    assert not is_square(GF(3)(2))
    assert is_square(GF(3)(0))
    assert is_square(GF(5)(4))


def test_enumerate_examples():
    assert [int(x) for x in enumerate_elems(GF(3))] == [0, 1, 2]
    assert len(list(enumerate_elems(GF(5)))) == 5
    assert int(next(enumerate_elems(GF(7)))) == 0


def test_mixed_fields_rejected():
    with pytest.raises(FieldMismatchError):
        add(GF(3)(1), GF(5)(1))


@pytest.mark.parametrize("p", [2, 4, 9, 37, 1])
def test_unsupported_moduli(p):
    with pytest.raises(InvalidSpecError):
        GF(p)


@pytest.mark.parametrize("p", PRIMES)
def test_inverse_table_exhaustive(p):
    f = GF(p)
    for a in range(1, p):
        assert a * f.inv(a) % p == 1


@pytest.mark.parametrize("p", PRIMES)
def test_square_table_exhaustive(p):
    f = GF(p)
    squares = {x * x % p for x in range(p)}
    assert all(f.is_square(a) == (a in squares) for a in range(p))
    # nonzero squares are an index-2 subgroup
    assert len(squares - {0}) == (p - 1) // 2
    assert not f.is_square(f.nonsquare)


@given(st.sampled_from(PRIMES), st.integers(), st.integers(), st.integers())
def test_ring_axioms(p, a, b, c):
    f = GF(p)
    x, y, z = f(a % p), f(b % p), f(c % p)
    assert (x + y) * z == x * z + y * z
    assert x - y + y == x
    assert (x * y) * z == x * (y * z)
