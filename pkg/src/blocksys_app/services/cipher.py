# src/blocksys_app/services/cipher.py
"""
Key-alternating ciphers with round function v -> ((v gamma) lambda) + k.

The state is split into n_t blocks of m bits; block i occupies bits
[i*m, (i+1)*m) of the state word, so the projection onto V_i is a shift and a mask.
"""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np
from loguru import logger

from blocksys_app import config
from blocksys_app.errors import NotAPermutationError, UsageError
from blocksys_app.services.gf2 import (
    MAX_WIDTH,
    BitMatrix,
    BitVector,
    mat_invert,
    random_invertible_matrix,
)
from blocksys_app.services.gf2m import FieldSpec, field_mul

SBoxKind = Literal["inversion", "identity", "random"]
LambdaKind = Literal["identity", "rotate", "random", "mixcolumns"]

SBOX_KINDS: tuple[str, ...] = ("inversion", "identity", "random")
LAMBDA_KINDS: tuple[str, ...] = ("identity", "rotate", "random", "mixcolumns")

TOY_MAX_BITS = 16
# exhaustive tabulation of rho over the whole state space
TABLE_MAX_BITS = 16


@dataclass(frozen=True)
class SBoxTable:
    """A bijective S-box on m-bit values: ``table[x]`` is the image of x."""

    m: int
    table: tuple[int, ...]

    def __post_init__(self) -> None:
        if not 1 <= self.m <= TOY_MAX_BITS:
            raise UsageError(f"S-box width must be in 1..{TOY_MAX_BITS}, got {self.m}")
        if len(self.table) != 1 << self.m:
            raise NotAPermutationError(
                f"S-box table has {len(self.table)} entries, expected {1 << self.m}"
            )
        if sorted(self.table) != list(range(1 << self.m)):
            raise NotAPermutationError("S-box table is not a bijection")

    @classmethod
    def identity(cls, m: int) -> SBoxTable:
        return cls(m, tuple(range(1 << m)))

    @classmethod
    def inversion(cls, fld: FieldSpec) -> SBoxTable:
        """x -> x^(2^m - 2) in the given field (zero maps to zero)."""
        return cls(fld.m, fld.inverse_table)

    @classmethod
    def random(cls, m: int, rng: np.random.Generator) -> SBoxTable:
        return cls(m, tuple(int(x) for x in rng.permutation(1 << m)))

    def __call__(self, x: int) -> int:
        return self.table[x]

    @cached_property
    def array(self) -> np.ndarray:
        return np.array(self.table, dtype=np.uint64)

    def inverse(self) -> SBoxTable:
        inv = [0] * len(self.table)
        for x, y in enumerate(self.table):
            inv[y] = x
        return SBoxTable(self.m, tuple(inv))

    def power(self, s: int) -> SBoxTable:
        """The s-fold composition of the table with itself."""
        out = list(range(len(self.table)))
        for _ in range(s):
            out = [self.table[x] for x in out]
        return SBoxTable(self.m, tuple(out))


@dataclass(frozen=True)
class Partition:
    """V = V_1 + ... + V_{n_t}, every block of width m."""

    n_t: int
    m: int

    def __post_init__(self) -> None:
        if self.n_t < 1 or self.m < 1:
            raise UsageError(f"need n_t >= 1 and m >= 1, got n_t={self.n_t}, m={self.m}")
        if self.n_b > MAX_WIDTH:
            raise UsageError(f"state width {self.n_b} exceeds {MAX_WIDTH} bits")

    @property
    def n_b(self) -> int:
        return self.n_t * self.m

    @property
    def block_mask(self) -> int:
        return (1 << self.m) - 1

    def check_block(self, i: int) -> None:
        if not 0 <= i < self.n_t:
            raise UsageError(f"block index {i} out of range 0..{self.n_t - 1}")

    def project(self, v: int, i: int) -> int:
        return (v >> (i * self.m)) & self.block_mask

    def embed(self, x: int, i: int) -> int:
        return x << (i * self.m)

    def blocks(self, v: int) -> list[int]:
        return [self.project(v, i) for i in range(self.n_t)]


@dataclass(frozen=True)
class CipherSpec:
    """rho = gamma lambda: a bricklayer of per-block S-boxes followed by a linear mixing layer."""

    name: str
    partition: Partition
    sboxes: tuple[SBoxTable, ...]
    lam: BitMatrix
    notes: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if len(self.sboxes) != self.partition.n_t:
            raise UsageError(f"expected {self.partition.n_t} S-boxes, got {len(self.sboxes)}")
        for i, sbox in enumerate(self.sboxes):
            if sbox.m != self.partition.m:
                raise UsageError(f"S-box {i} has width {sbox.m}, blocks have width {self.partition.m}")
        if not self.lam.is_square or self.lam.n_rows != self.partition.n_b:
            raise UsageError(
                f"mixing layer must be {self.partition.n_b}x{self.partition.n_b}, "
                f"got {self.lam.n_rows}x{self.lam.cols}"
            )
        # raises SingularMatrixError
        object.__setattr__(self, "_lam_inverse", mat_invert(self.lam))

    @property
    def n_t(self) -> int:
        return self.partition.n_t

    @property
    def m(self) -> int:
        return self.partition.m

    @property
    def n_b(self) -> int:
        return self.partition.n_b

    @property
    def lam_inverse(self) -> BitMatrix:
        inverse: BitMatrix = self.__dict__["_lam_inverse"]
        return inverse

    def distinct_sboxes(self) -> list[tuple[SBoxTable, list[int]]]:
        """Each distinct S-box table with the blocks that use it, in first-use order."""
        groups: dict[tuple[int, ...], tuple[SBoxTable, list[int]]] = {}
        for i, sbox in enumerate(self.sboxes):
            groups.setdefault(sbox.table, (sbox, []))[1].append(i)
        return list(groups.values())

    def gamma_int(self, v: int) -> int:
        p = self.partition
        out = 0
        for i, sbox in enumerate(self.sboxes):
            out |= sbox.table[p.project(v, i)] << (i * p.m)
        return out

    def rho_int(self, v: int) -> int:
        return self.lam.apply_int(self.gamma_int(v))

    def gamma_array(self, values: np.ndarray) -> np.ndarray:
        """Vectorized gamma over a uint64 array of states (n_b <= 64)."""
        if self.n_b > 64:
            raise UsageError(f"array evaluation supports at most 64-bit states, got {self.n_b}")
        values = values.astype(np.uint64, copy=False)
        mask = np.uint64(self.partition.block_mask)
        out = np.zeros_like(values)
        for i, sbox in enumerate(self.sboxes):
            shift = np.uint64(i * self.m)
            out |= sbox.array[(values >> shift) & mask] << shift
        return out

    def rho_array(self, values: np.ndarray) -> np.ndarray:
        return self.lam.apply_array(self.gamma_array(values))

    @cached_property
    def rho_table(self) -> np.ndarray:
        """rho tabulated on all 2^n_b states."""
        if self.n_b > TABLE_MAX_BITS:
            raise UsageError(f"cannot tabulate rho on {self.n_b} bits (cap {TABLE_MAX_BITS})")
        return self.rho_array(np.arange(1 << self.n_b, dtype=np.uint64))

    def check_state(self, v: BitVector) -> None:
        if v.width != self.n_b:
            raise UsageError(f"state width {v.width} does not match cipher width {self.n_b}")


# --- Operations ---


def project_block(spec: CipherSpec, v: BitVector, i: int) -> BitVector:
    """The m-bit slice of v at block i."""
    spec.check_state(v)
    spec.partition.check_block(i)
    return BitVector(spec.m, spec.partition.project(v.bits, i))


def apply_gamma(spec: CipherSpec, v: BitVector) -> BitVector:
    spec.check_state(v)
    return BitVector(spec.n_b, spec.gamma_int(v.bits))


def round_function(spec: CipherSpec, v: BitVector, k: BitVector) -> BitVector:
    """((v gamma) lambda) + k."""
    spec.check_state(v)
    spec.check_state(k)
    return BitVector(spec.n_b, spec.rho_int(v.bits) ^ k.bits)


def encrypt(spec: CipherSpec, v: BitVector, keys: Sequence[BitVector]) -> BitVector:
    """Iterates the round function over independent round keys."""
    if not keys:
        raise UsageError("at least one round key is required")
    for k in keys:
        v = round_function(spec, v, k)
    return v


@dataclass(frozen=True)
class Translation:
    """sigma_c : w -> w + c."""

    offset: BitVector

    def apply(self, v: BitVector) -> BitVector:
        return v + self.offset

    def permutation(self) -> np.ndarray:
        width = self.offset.width
        if width > TABLE_MAX_BITS:
            raise UsageError(f"cannot materialize a permutation on {width} bits")
        return np.arange(1 << width, dtype=np.uint64) ^ np.uint64(self.offset.bits)


def translation_generators(n_b: int) -> list[Translation]:
    """The basis translations sigma_{e_i}; with rho they generate the round-function group."""
    if not 1 <= n_b <= MAX_WIDTH:
        raise UsageError(f"width must be in 1..{MAX_WIDTH}, got {n_b}")
    return [Translation(BitVector.unit(n_b, i)) for i in range(n_b)]


# --- Mixing layers ---


def block_matrix_over_field(fld: FieldSpec, partition: Partition, coeffs: Sequence[Sequence[int]]) -> BitMatrix:
    """
    The GF(2) matrix of v -> w with w_j = sum_i coeffs[i][j] * v_i over GF(2^m),
    i.e. the row vector of blocks times the n_t x n_t coefficient matrix.
    """
    n_t = partition.n_t

    def apply(v: int) -> int:
        blocks = partition.blocks(v)
        out = 0
        for j in range(n_t):
            acc = 0
            for i in range(n_t):
                if blocks[i]:
                    acc ^= field_mul(fld, coeffs[i][j], blocks[i])
            out |= partition.embed(acc, j)
        return out

    return BitMatrix.from_linear_map(partition.n_b, apply)


def mixcolumns_coefficients(n_t: int) -> list[list[int]]:
    """
    The AES circulant (02, 03, 01, 01) for four blocks; otherwise 02 on the
    diagonal and 01 elsewhere, which is invertible in characteristic 2 for every n_t.
    """
    if n_t == 4:
        row = (2, 3, 1, 1)
        # row-vector form of the column-acting circulant
        return [[row[(i - j) % 4] for j in range(4)] for i in range(4)]
    return [[2 if i == j else 1 for j in range(n_t)] for i in range(n_t)]


def rotation_matrix(partition: Partition) -> BitMatrix:
    """Block i moves to block i+1 (mod n_t)."""
    m, n_t = partition.m, partition.n_t
    rows = tuple(1 << (((i + 1) % n_t) * m + j) for i in range(n_t) for j in range(m))
    return BitMatrix(rows, partition.n_b)


def mixing_layer(kind: str, partition: Partition, rng: np.random.Generator | None = None) -> BitMatrix:
    if kind == "identity":
        return BitMatrix.identity(partition.n_b)
    if kind == "rotate":
        return rotation_matrix(partition)
    if kind == "random":
        return random_invertible_matrix(partition.n_b, rng or np.random.default_rng(config.settings.seed))
    if kind == "mixcolumns":
        fld = FieldSpec.default(partition.m)
        return block_matrix_over_field(fld, partition, mixcolumns_coefficients(partition.n_t))
    raise UsageError(f"unknown mixing layer {kind!r}; expected one of {', '.join(LAMBDA_KINDS)}")


def sbox_layer(kind: str, partition: Partition, rng: np.random.Generator | None = None) -> tuple[SBoxTable, ...]:
    if kind == "identity":
        return (SBoxTable.identity(partition.m),) * partition.n_t
    if kind == "inversion":
        return (SBoxTable.inversion(FieldSpec.default(partition.m)),) * partition.n_t
    if kind == "random":
        rng = rng or np.random.default_rng(config.settings.seed)
        return tuple(SBoxTable.random(partition.m, rng) for _ in range(partition.n_t))
    raise UsageError(f"unknown S-box kind {kind!r}; expected one of {', '.join(SBOX_KINDS)}")


def toy_spec(
    n_t: int,
    m: int,
    sbox_kind: str = "inversion",
    lambda_kind: str = "mixcolumns",
    seed: int | None = None,
) -> CipherSpec:
    """Desk-scale presets (at most 16 state bits), reproducible from the seed."""
    if n_t < 1 or m < 1 or n_t * m > TOY_MAX_BITS:
        raise UsageError(f"toy ciphers need 1 <= n_t*m <= {TOY_MAX_BITS}, got {n_t}x{m}")
    seed = config.settings.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    partition = Partition(n_t, m)
    sboxes = sbox_layer(sbox_kind, partition, rng)
    lam = mixing_layer(lambda_kind, partition, rng)
    name = f"toy:{n_t}x{m}:{sbox_kind}:{lambda_kind}"
    logger.debug(f"Built {name} (seed={seed})")
    return CipherSpec(name=name, partition=partition, sboxes=sboxes, lam=lam)
