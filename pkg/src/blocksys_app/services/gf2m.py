# src/blocksys_app/services/gf2m.py
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from blocksys_app.errors import ReducibleModulusError, UsageError

MIN_DEGREE = 2
MAX_DEGREE = 8

# Default irreducible moduli per extension degree; 8 is the Rijndael polynomial x^8+x^4+x^3+x+1.
DEFAULT_MODULI: dict[int, int] = {
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10000011,
    8: 0x11B,
}


def poly_mod(a: int, modulus: int) -> int:
    """Remainder of a by modulus in GF(2)[x]."""
    deg = modulus.bit_length() - 1
    while a.bit_length() - 1 >= deg:
        a ^= modulus << (a.bit_length() - 1 - deg)
    return a


def is_irreducible(poly: int) -> bool:
    """Trial division by every polynomial of degree 1..deg/2."""
    deg = poly.bit_length() - 1
    if deg < 1:
        return False
    for d in range(1, deg // 2 + 1):
        for q in range(1 << d, 1 << (d + 1)):
            if poly_mod(poly, q) == 0:
                return False
    return True


@dataclass(frozen=True)
class FieldSpec:
    """GF(2^m) with elements encoded as coefficient vectors over GF(2)."""

    m: int
    reduction_poly: int

    def __post_init__(self) -> None:
        if not MIN_DEGREE <= self.m <= MAX_DEGREE:
            raise UsageError(f"extension degree must be in {MIN_DEGREE}..{MAX_DEGREE}, got {self.m}")
        if self.reduction_poly.bit_length() - 1 != self.m:
            raise ReducibleModulusError(
                f"modulus {self.reduction_poly:#x} does not have degree {self.m}"
            )
        if not is_irreducible(self.reduction_poly):
            raise ReducibleModulusError(f"modulus {self.reduction_poly:#x} is reducible")

    @classmethod
    def default(cls, m: int) -> FieldSpec:
        if m not in DEFAULT_MODULI:
            raise UsageError(f"no default modulus for degree {m}")
        return cls(m, DEFAULT_MODULI[m])

    @property
    def order(self) -> int:
        return 1 << self.m

    def check(self, a: int) -> None:
        if not 0 <= a < self.order:
            raise UsageError(f"{a} is not an element of GF(2^{self.m})")

    @cached_property
    def mul_table(self) -> np.ndarray:
        n = self.order
        table = np.zeros((n, n), dtype=np.int64)
        for a in range(n):
            for b in range(a, n):
                table[a, b] = table[b, a] = _mul(self, a, b)
        return table

    @cached_property
    def inverse_table(self) -> tuple[int, ...]:
        return tuple(field_inv(self, a) for a in range(self.order))

    def describe(self) -> str:
        terms = [
            ("x" if i == 1 else "1" if i == 0 else f"x^{i}")
            for i in range(self.m, -1, -1)
            if (self.reduction_poly >> i) & 1
        ]
        return f"GF(2^{self.m}) mod {'+'.join(terms)}"


def _mul(field: FieldSpec, a: int, b: int) -> int:
    out = 0
    top = 1 << field.m
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a & top:
            a ^= field.reduction_poly
    return out


def field_mul(field: FieldSpec, a: int, b: int) -> int:
    """Polynomial product reduced by the field modulus."""
    field.check(a)
    field.check(b)
    return _mul(field, a, b)


def field_pow(field: FieldSpec, a: int, e: int) -> int:
    """Square-and-multiply; a^0 = 1 (including 0^0)."""
    field.check(a)
    if e < 0:
        raise UsageError("negative exponents are not supported; use field_inv")
    out, base = 1, a
    while e:
        if e & 1:
            out = _mul(field, out, base)
        base = _mul(field, base, base)
        e >>= 1
    return out


def field_inv(field: FieldSpec, a: int) -> int:
    """a^(2^m - 2): the inverse of a nonzero a, and 0 for a = 0."""
    return field_pow(field, a, field.order - 2)


def element_order(field: FieldSpec, a: int) -> int:
    """Multiplicative order of a nonzero element."""
    field.check(a)
    if a == 0:
        raise UsageError("0 has no multiplicative order")
    x, k = a, 1
    while x != 1:
        x = _mul(field, x, a)
        k += 1
    return k


def cube_roots_of_unity(field: FieldSpec) -> list[int]:
    """The elements of order 3; there are two when m is even and none when m is odd."""
    return [a for a in range(2, field.order) if element_order(field, a) == 3]
