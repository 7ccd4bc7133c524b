"""Prime fields GF(p) for small odd p, with inverse and square tables."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator

from .errors import DivisionByZeroError, FieldMismatchError, InvalidSpecError

MIN_P = 3
MAX_P = 31


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % d for d in range(2, int(p ** 0.5) + 1))


@dataclass(frozen=True)
class FieldSpec:
    p: int
    inv_table: tuple[int, ...] = field(init=False, repr=False, compare=False)
    square_table: tuple[bool, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        p = self.p
        if not isinstance(p, int) or isinstance(p, bool):
            raise InvalidSpecError(f"field modulus must be an int, got {p!r}")
        if not _is_prime(p) or p % 2 == 0 or not MIN_P <= p <= MAX_P:
            raise InvalidSpecError(f"unsupported field GF({p}): need an odd prime in [{MIN_P}, {MAX_P}]")
        inv = [0] * p
        for a in range(1, p):
            inv[a] = pow(a, p - 2, p)
        sq = [False] * p
        for x in range(p):
            sq[x * x % p] = True
        object.__setattr__(self, "inv_table", tuple(inv))
        object.__setattr__(self, "square_table", tuple(sq))

    def __call__(self, value: int) -> FieldElem:
        return FieldElem(self, value % self.p)

    def __str__(self):
        return f"GF({self.p})"

    @property
    def nonsquare(self) -> int:
        """Smallest non-square residue."""
        return next(a for a in range(2, self.p) if not self.square_table[a])

    def inv(self, a: int) -> int:
        a %= self.p
        if a == 0:
            raise DivisionByZeroError(f"0 has no inverse in GF({self.p})")
        return self.inv_table[a]

    def is_square(self, a: int) -> bool:
        return self.square_table[a % self.p]


@lru_cache(maxsize=None)
def GF(p: int) -> FieldSpec:
    return FieldSpec(p)


@dataclass(frozen=True)
class FieldElem:
    field: FieldSpec
    value: int

    def __post_init__(self):
        if not 0 <= self.value < self.field.p:
            raise ValueError(f"{self.value} is not a canonical residue mod {self.field.p}")

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElem):
            if other.field.p != self.field.p:
                raise FieldMismatchError(f"cannot combine {self.field} and {other.field} elements")
            return other.value
        if isinstance(other, int):
            return other % self.field.p
        return NotImplemented

    def __add__(self, other):
        b = self._coerce(other)
        if b is NotImplemented:
            return b
        return FieldElem(self.field, (self.value + b) % self.field.p)

    __radd__ = __add__

    def __sub__(self, other):
        b = self._coerce(other)
        if b is NotImplemented:
            return b
        return FieldElem(self.field, (self.value - b) % self.field.p)

    def __rsub__(self, other):
        b = self._coerce(other)
        if b is NotImplemented:
            return b
        return FieldElem(self.field, (b - self.value) % self.field.p)

    def __mul__(self, other):
        b = self._coerce(other)
        if b is NotImplemented:
            return b
        return FieldElem(self.field, self.value * b % self.field.p)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElem(self.field, -self.value % self.field.p)

    def inv(self) -> FieldElem:
        return FieldElem(self.field, self.field.inv(self.value))

    def __truediv__(self, other):
        b = self._coerce(other)
        if b is NotImplemented:
            return b
        return self * self.field.inv(b)

    def __int__(self):
        return self.value

    def __bool__(self):
        return self.value != 0

    def __repr__(self):
        return f"{self.value} mod {self.field.p}"


def add(a: FieldElem, b: FieldElem) -> FieldElem:
    return a + b


def sub(a: FieldElem, b: FieldElem) -> FieldElem:
    return a - b


def mul(a: FieldElem, b: FieldElem) -> FieldElem:
    return a * b


def neg(a: FieldElem) -> FieldElem:
    return -a


def inv(a: FieldElem) -> FieldElem:
    return a.inv()


def is_square(a: FieldElem) -> bool:
    return a.field.is_square(a.value)


def enumerate_elems(f: FieldSpec) -> Iterator[FieldElem]:
    for v in range(f.p):
        yield FieldElem(f, v)
