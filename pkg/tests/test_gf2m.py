import pytest

from blocksys_app.errors import ReducibleModulusError, UsageError
from blocksys_app.services.gf2m import (
    DEFAULT_MODULI,
    FieldSpec,
    cube_roots_of_unity,
    element_order,
    field_inv,
    field_mul,
    field_pow,
    is_irreducible,
)


def test_field_mul_examples(gf8, gf256):
    assert field_mul(gf8, 2, 5) == 1
    assert field_mul(gf8, 0, 7) == 0
    assert field_mul(gf8, 1, 6) == 6
    # FIPS-197 worked example {57} * {83} = {c1}
    assert field_mul(gf256, 0x57, 0x83) == 0xC1


def test_field_mul_rejects_out_of_range(gf8):
    with pytest.raises(UsageError):
        field_mul(gf8, 8, 1)


def test_inverse_table_gf8(gf8):
    assert gf8.inverse_table == (0, 1, 5, 6, 7, 2, 3, 4)
    assert field_inv(gf8, 0) == 0


@pytest.mark.parametrize("m", sorted(DEFAULT_MODULI))
def test_inverse_is_an_involution_fixing_zero(m):
    fld = FieldSpec.default(m)
    inv = fld.inverse_table
    assert inv[0] == 0
    for a in range(1, fld.order):
        assert inv[inv[a]] == a
        assert field_mul(fld, a, inv[a]) == 1


def test_mul_table_agrees_with_field_mul(gf16):
    table = gf16.mul_table
    for a in range(16):
        for b in range(16):
            assert table[a, b] == field_mul(gf16, a, b)


def test_field_pow(gf8):
    assert field_pow(gf8, 0, 0) == 1
    assert field_pow(gf8, 2, 7) == 1
    assert field_pow(gf8, 2, 3) == 3  # x^3 = x + 1
    with pytest.raises(UsageError):
        field_pow(gf8, 2, -1)


def test_element_order(gf8, gf16):
    assert element_order(gf8, 2) == 7
    assert element_order(gf16, 1) == 1
    with pytest.raises(UsageError):
        element_order(gf8, 0)


def test_cube_roots_of_unity(gf4, gf8, gf16):
    assert cube_roots_of_unity(gf4) == [2, 3]
    assert cube_roots_of_unity(gf16) == [6, 7]
    assert cube_roots_of_unity(gf8) == []


def test_default_moduli_are_irreducible():
    for m, poly in DEFAULT_MODULI.items():
        assert poly.bit_length() - 1 == m
        assert is_irreducible(poly)


def test_reducible_modulus_rejected():
    # x^2 + 1 = (x + 1)^2
    with pytest.raises(ReducibleModulusError):
        FieldSpec(2, 0b101)
    with pytest.raises(ReducibleModulusError):
        FieldSpec(3, 0b111)


def test_degree_range():
    with pytest.raises(UsageError):
        FieldSpec.default(1)
    with pytest.raises(UsageError):
        FieldSpec.default(9)


def test_describe(gf256):
    assert gf256.describe() == "GF(2^8) mod x^8+x^4+x^3+x+1"
