# src/blocksys_app/services/aes.py
"""
The AES round as rho = gamma lambda on GF(2)^128.

gamma is GF(2^8) inversion in every byte. The linear part of the S-box affine map,
ShiftRows and MixColumns are folded into a single 128x128 mixing matrix. The
affine constant 0x63 passes unchanged through ShiftRows and MixColumns, so it is
absorbed into the round key.

State layout: byte b = r + 4c (row r, column c) occupies bits [8b, 8b + 8).
"""
from __future__ import annotations

from functools import cache

from loguru import logger

from blocksys_app.services.cipher import CipherSpec, Partition, SBoxTable
from blocksys_app.services.gf2 import BitMatrix
from blocksys_app.services.gf2m import FieldSpec, field_mul

RIJNDAEL_POLY = 0x11B
AFFINE_CONSTANT = 0x63
MIXCOLUMNS_ROW = (2, 3, 1, 1)
N_BYTES = 16

LAMBDA_ORDER = "S-box linear part, then ShiftRows, then MixColumns"


def _rotl8(x: int, n: int) -> int:
    return ((x << n) | (x >> (8 - n))) & 0xFF


def affine_linear_part(x: int) -> int:
    """The GF(2)-linear part of the AES S-box affine map."""
    return x ^ _rotl8(x, 1) ^ _rotl8(x, 2) ^ _rotl8(x, 3) ^ _rotl8(x, 4)


def state_to_bytes(v: int) -> list[int]:
    return [(v >> (8 * b)) & 0xFF for b in range(N_BYTES)]


def bytes_to_state(data: list[int] | bytes) -> int:
    out = 0
    for b, x in enumerate(data):
        out |= x << (8 * b)
    return out


def shift_rows(state: list[int]) -> list[int]:
    """Row r rotates left by r columns."""
    out = [0] * N_BYTES
    for r in range(4):
        for c in range(4):
            out[r + 4 * c] = state[r + 4 * ((c + r) % 4)]
    return out


def mix_columns(state: list[int], fld: FieldSpec) -> list[int]:
    out = [0] * N_BYTES
    for c in range(4):
        col = state[4 * c : 4 * c + 4]
        for r in range(4):
            acc = 0
            for j in range(4):
                acc ^= field_mul(fld, MIXCOLUMNS_ROW[(j - r) % 4], col[j])
            out[r + 4 * c] = acc
    return out


@cache
def aes_lambda() -> BitMatrix:
    fld = FieldSpec(8, RIJNDAEL_POLY)

    def apply(v: int) -> int:
        state = [affine_linear_part(x) for x in state_to_bytes(v)]
        return bytes_to_state(mix_columns(shift_rows(state), fld))

    return BitMatrix.from_linear_map(8 * N_BYTES, apply)


@cache
def aes_spec() -> CipherSpec:
    """16 inversion S-boxes over the Rijndael field and the folded AES mixing layer."""
    fld = FieldSpec(8, RIJNDAEL_POLY)
    sbox = SBoxTable.inversion(fld)
    spec = CipherSpec(
        name="aes",
        partition=Partition(N_BYTES, 8),
        sboxes=(sbox,) * N_BYTES,
        lam=aes_lambda(),
        notes=(
            f"lambda = {LAMBDA_ORDER}",
            f"affine constant {AFFINE_CONSTANT:#04x} folded into the round key",
        ),
    )
    logger.debug(f"Built AES preset over {fld.describe()}")
    return spec
