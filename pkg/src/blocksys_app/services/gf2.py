# src/blocksys_app/services/gf2.py
"""
Linear algebra over GF(2) on machine words.

Coordinate i of a vector is bit i of an int. Subspaces are kept in reduced
row-echelon form: each row's pivot is its highest set bit, a pivot column is
zero in every other row, and rows are sorted by pivot ascending. That form is
unique per subspace, so two subspaces are equal iff their row tuples are equal.
"""
from __future__ import annotations

import itertools
from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from loguru import logger

from blocksys_app import config
from blocksys_app.errors import EnumerationTooLargeError, SingularMatrixError, UsageError

MAX_WIDTH = 128
ENUMERATION_MAX_WIDTH = 16
# numpy paths hold vectors in uint64
ARRAY_MAX_WIDTH = 64


def hex_digits(width: int) -> int:
    return max(1, (width + 3) // 4)


def to_hex(bits: int, width: int) -> str:
    return f"{bits:0{hex_digits(width)}x}"


def _check_width(width: int) -> None:
    if not 1 <= width <= MAX_WIDTH:
        raise UsageError(f"width must be in 1..{MAX_WIDTH}, got {width}")


def _check_value(bits: int, width: int) -> None:
    if bits < 0 or bits >> width:
        raise UsageError(f"value {bits:#x} does not fit in {width} bits")


# --- Vectors ---


@dataclass(frozen=True, slots=True)
class BitVector:
    """An element of GF(2)^width."""

    width: int
    bits: int

    def __post_init__(self) -> None:
        _check_width(self.width)
        _check_value(self.bits, self.width)

    @classmethod
    def zero(cls, width: int) -> BitVector:
        return cls(width, 0)

    @classmethod
    def unit(cls, width: int, i: int) -> BitVector:
        if not 0 <= i < width:
            raise UsageError(f"coordinate {i} out of range for width {width}")
        return cls(width, 1 << i)

    @classmethod
    def from_hex(cls, width: int, text: str) -> BitVector:
        return cls(width, int(text, 16))

    def __add__(self, other: BitVector) -> BitVector:
        return vec_add(self, other)

    __xor__ = __add__

    def __int__(self) -> int:
        return self.bits

    def __bool__(self) -> bool:
        return self.bits != 0

    def to_hex(self) -> str:
        return to_hex(self.bits, self.width)


def vec_add(a: BitVector, b: BitVector) -> BitVector:
    """Coordinatewise sum (XOR) of two vectors of the same width."""
    if a.width != b.width:
        raise UsageError(f"width mismatch: {a.width} vs {b.width}")
    return BitVector(a.width, a.bits ^ b.bits)


def random_bits(rng: np.random.Generator, width: int) -> int:
    """Uniform random int of ``width`` bits."""
    nbytes = (width + 7) // 8
    return int.from_bytes(rng.bytes(nbytes), "little") & ((1 << width) - 1)


# --- Matrices ---


@dataclass(frozen=True)
class BitMatrix:
    """
    A GF(2) matrix acting on row vectors: ``v M`` is the XOR of the rows of M
    selected by the set bits of v. Row i is therefore the image of e_i.
    """

    rows: tuple[int, ...]
    cols: int

    def __post_init__(self) -> None:
        if not self.rows:
            raise UsageError("a matrix needs at least one row")
        _check_width(self.cols)
        _check_width(len(self.rows))
        for r in self.rows:
            _check_value(r, self.cols)

    @classmethod
    def identity(cls, n: int) -> BitMatrix:
        return cls(tuple(1 << i for i in range(n)), n)

    @classmethod
    def zero(cls, n_rows: int, cols: int) -> BitMatrix:
        return cls((0,) * n_rows, cols)

    @classmethod
    def from_hex(cls, rows: Sequence[str], cols: int) -> BitMatrix:
        return cls(tuple(int(r, 16) for r in rows), cols)

    @classmethod
    def from_linear_map(
        cls, width: int, fn: Callable[[int], int], cols: int | None = None
    ) -> BitMatrix:
        """Tabulates a linear map given as a function on ints by its images of e_i."""
        return cls(tuple(fn(1 << i) for i in range(width)), width if cols is None else cols)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def is_square(self) -> bool:
        return self.n_rows == self.cols

    @cached_property
    def byte_tables(self) -> tuple[tuple[int, ...], ...]:
        # one 256-entry table per byte of the input vector
        tables = []
        for start in range(0, self.n_rows, 8):
            chunk = self.rows[start : start + 8]
            table = [0] * 256
            for x in range(1, 256):
                low = (x & -x).bit_length() - 1
                table[x] = table[x & (x - 1)] ^ (chunk[low] if low < len(chunk) else 0)
            tables.append(tuple(table))
        return tuple(tables)

    @cached_property
    def byte_arrays(self) -> tuple[np.ndarray, ...]:
        return tuple(np.array(t, dtype=np.uint64) for t in self.byte_tables)

    def apply_int(self, v: int) -> int:
        out = 0
        for table in self.byte_tables:
            out ^= table[v & 0xFF]
            v >>= 8
        return out

    def apply_array(self, values: np.ndarray) -> np.ndarray:
        """Vectorized ``apply_int`` over a uint64 array (widths up to 64)."""
        if self.cols > ARRAY_MAX_WIDTH or self.n_rows > ARRAY_MAX_WIDTH:
            raise UsageError("array application supports at most 64-bit vectors")
        values = values.astype(np.uint64, copy=False)
        out = np.zeros_like(values)
        for c, table in enumerate(self.byte_arrays):
            out ^= table[(values >> np.uint64(8 * c)) & np.uint64(0xFF)]
        return out

    def then(self, other: BitMatrix) -> BitMatrix:
        """The matrix of ``v -> (v self) other``."""
        if self.cols != other.n_rows:
            raise UsageError(f"cannot compose {self.n_rows}x{self.cols} with {other.n_rows}x{other.cols}")
        return BitMatrix(tuple(other.apply_int(r) for r in self.rows), other.cols)

    def to_hex_rows(self) -> list[str]:
        return [to_hex(r, self.cols) for r in self.rows]


def mat_apply(m: BitMatrix, v: BitVector) -> BitVector:
    """Row vector times matrix over GF(2)."""
    if v.width != m.n_rows:
        raise UsageError(f"vector width {v.width} does not match {m.n_rows} matrix rows")
    return BitVector(m.cols, m.apply_int(v.bits))


def mat_invert(m: BitMatrix) -> BitMatrix:
    """Gauss-Jordan inverse over GF(2)."""
    if not m.is_square:
        raise UsageError(f"cannot invert a {m.n_rows}x{m.cols} matrix")
    n = m.n_rows
    left = list(m.rows)
    right = [1 << i for i in range(n)]
    for col in range(n):
        bit = 1 << col
        pivot = next((r for r in range(col, n) if left[r] & bit), None)
        if pivot is None:
            raise SingularMatrixError(f"matrix is singular (no pivot in column {col})")
        left[col], left[pivot] = left[pivot], left[col]
        right[col], right[pivot] = right[pivot], right[col]
        for r in range(n):
            if r != col and left[r] & bit:
                left[r] ^= left[col]
                right[r] ^= right[col]
    return BitMatrix(tuple(right), n)


def is_invertible(m: BitMatrix) -> bool:
    try:
        mat_invert(m)
    except SingularMatrixError:
        return False
    return True


def random_invertible_matrix(width: int, rng: np.random.Generator) -> BitMatrix:
    """Seeded uniformly random element of GL(width, 2), by rejection."""
    _check_width(width)
    while True:
        rows = tuple(random_bits(rng, width) for _ in range(width))
        echelon = Echelon(width)
        echelon.add_many(rows)
        if echelon.dim == width:
            return BitMatrix(rows, width)


# --- Subspaces ---


class Echelon:
    """
    Mutable RREF accumulator. Confined to a single computation; frozen into a
    Subspace when done.
    """

    def __init__(self, width: int, rows: Iterable[int] = ()) -> None:
        self.width = width
        self._rows: dict[int, int] = {}
        for r in rows:
            self.add(r)

    @property
    def dim(self) -> int:
        return len(self._rows)

    @property
    def is_full(self) -> bool:
        return len(self._rows) == self.width

    def reduce(self, v: int) -> int:
        for p, row in self._rows.items():
            if (v >> p) & 1:
                v ^= row
        return v

    def _insert(self, v: int) -> None:
        p = v.bit_length() - 1
        for q, row in self._rows.items():
            if (row >> p) & 1:
                self._rows[q] = row ^ v
        self._rows[p] = v

    def add(self, v: int) -> int:
        """Adjoins v; returns its reduced form if it was new, else 0."""
        v = self.reduce(v)
        if v:
            self._insert(v)
        return v

    def add_many(self, values: Iterable[int]) -> list[int]:
        added = []
        for v in values:
            if self.is_full:
                break
            r = self.add(v)
            if r:
                added.append(r)
        return added

    def add_array(self, values: np.ndarray) -> list[int]:
        """Vectorized ``add_many`` for widths up to 64 bits."""
        if self.width > ARRAY_MAX_WIDTH:
            return self.add_many(int(v) for v in values)
        vals = values.astype(np.uint64, copy=True)
        for p, row in self._rows.items():
            vals ^= ((vals >> np.uint64(p)) & np.uint64(1)) * np.uint64(row)
        added: list[int] = []
        while not self.is_full:
            vals = vals[vals != 0]
            if vals.size == 0:
                break
            v = int(vals[0])
            self._insert(v)
            added.append(v)
            p = v.bit_length() - 1
            vals ^= ((vals >> np.uint64(p)) & np.uint64(1)) * np.uint64(v)
        return added

    def freeze(self) -> Subspace:
        return Subspace(self.width, tuple(self._rows[p] for p in sorted(self._rows)))


@dataclass(frozen=True)
class Subspace:
    """A subspace of GF(2)^width in canonical reduced row-echelon form."""

    width: int
    rows: tuple[int, ...]

    def __post_init__(self) -> None:
        _check_width(self.width)

    @classmethod
    def zero(cls, width: int) -> Subspace:
        return cls(width, ())

    @classmethod
    def full(cls, width: int) -> Subspace:
        return cls(width, tuple(1 << i for i in range(width)))

    @property
    def dim(self) -> int:
        return len(self.rows)

    @property
    def codim(self) -> int:
        return self.width - len(self.rows)

    @property
    def size(self) -> int:
        return 1 << len(self.rows)

    @property
    def basis(self) -> tuple[BitVector, ...]:
        return tuple(BitVector(self.width, r) for r in self.rows)

    @property
    def pivots(self) -> tuple[int, ...]:
        return tuple(r.bit_length() - 1 for r in self.rows)

    @property
    def is_zero(self) -> bool:
        return not self.rows

    @property
    def is_full(self) -> bool:
        return len(self.rows) == self.width

    def sort_key(self) -> tuple[int, tuple[int, ...]]:
        return (len(self.rows), self.rows)

    def reduce(self, v: int) -> int:
        for row in self.rows:
            if (v >> (row.bit_length() - 1)) & 1:
                v ^= row
        return v

    def contains_int(self, v: int) -> bool:
        return self.reduce(v) == 0

    def __contains__(self, v: BitVector | int) -> bool:
        if isinstance(v, BitVector):
            if v.width != self.width:
                raise UsageError(f"width mismatch: {v.width} vs {self.width}")
            v = v.bits
        return self.contains_int(v)

    def contains_array(self, values: np.ndarray) -> np.ndarray:
        """Membership mask for a uint64 array of vectors."""
        vals = values.astype(np.uint64, copy=True)
        for row in self.rows:
            p = np.uint64(row.bit_length() - 1)
            vals ^= ((vals >> p) & np.uint64(1)) * np.uint64(row)
        return vals == 0

    def is_subspace_of(self, other: Subspace) -> bool:
        return all(other.contains_int(r) for r in self.rows)

    def combine(self, coeffs: int) -> int:
        """The element selected by the bits of ``coeffs`` over the basis rows."""
        out = 0
        for i, row in enumerate(self.rows):
            if (coeffs >> i) & 1:
                out ^= row
        return out

    def elements(self) -> Iterator[int]:
        """All 2^dim elements, in Gray-code order starting at 0."""
        x = 0
        yield x
        for i in range(1, 1 << len(self.rows)):
            x ^= self.rows[(i & -i).bit_length() - 1]
            yield x

    def element_array(self) -> np.ndarray:
        if self.width > ARRAY_MAX_WIDTH:
            raise UsageError("element arrays support at most 64-bit vectors")
        out = np.zeros(1, dtype=np.uint64)
        for row in self.rows:
            out = np.concatenate([out, out ^ np.uint64(row)])
        return out

    def free_positions(self) -> tuple[int, ...]:
        """Coordinates that are not pivots; they index a complement of the subspace."""
        pivots = set(self.pivots)
        return tuple(i for i in range(self.width) if i not in pivots)

    def coset_representatives(self) -> Iterator[int]:
        """One canonical representative per coset (vectors supported on free positions)."""
        free = self.free_positions()
        for x in range(1 << len(free)):
            yield _scatter(x, free)

    def to_hex_rows(self) -> list[str]:
        return [to_hex(r, self.width) for r in self.rows]


def _scatter(x: int, positions: Sequence[int]) -> int:
    out = 0
    for i, p in enumerate(positions):
        if (x >> i) & 1:
            out |= 1 << p
    return out


def span(width: int, values: Iterable[int]) -> Subspace:
    """Canonical span of a collection of ints (internal fast path)."""
    echelon = Echelon(width)
    echelon.add_many(values)
    return echelon.freeze()


def subspace_from_generators(width: int, gens: Iterable[BitVector | int]) -> Subspace:
    """RREF basis of the span of the generators; an empty list gives the zero subspace."""
    _check_width(width)
    values = []
    for g in gens:
        if isinstance(g, BitVector):
            if g.width != width:
                raise UsageError(f"generator width {g.width} does not match {width}")
            values.append(g.bits)
        else:
            _check_value(g, width)
            values.append(g)
    return span(width, values)


def subspace_contains(s: Subspace, v: BitVector) -> bool:
    return v in s


def _same_width(s1: Subspace, s2: Subspace) -> None:
    if s1.width != s2.width:
        raise UsageError(f"ambient width mismatch: {s1.width} vs {s2.width}")


def subspace_sum(s1: Subspace, s2: Subspace) -> Subspace:
    _same_width(s1, s2)
    return span(s1.width, s1.rows + s2.rows)


def annihilator(s: Subspace) -> Subspace:
    """The dual subspace {x : x . y = 0 for all y in s} under the standard dot product."""
    pivot_rows = list(zip(s.pivots, s.rows, strict=True))
    vectors = []
    for j in s.free_positions():
        x = 1 << j
        for p, row in pivot_rows:
            if (row >> j) & 1:
                x |= 1 << p
        vectors.append(x)
    return span(s.width, vectors)


def subspace_intersection(s1: Subspace, s2: Subspace) -> Subspace:
    """Intersection via the kernel of the stacked dual bases."""
    _same_width(s1, s2)
    return annihilator(subspace_sum(annihilator(s1), annihilator(s2)))


def random_subspace(width: int, dim: int, rng: np.random.Generator) -> Subspace:
    """Seeded random subspace of the given dimension."""
    if not 0 <= dim <= width:
        raise UsageError(f"dimension {dim} out of range for width {width}")
    echelon = Echelon(width)
    while echelon.dim < dim:
        echelon.add(random_bits(rng, width))
    return echelon.freeze()


# --- Counting and enumeration ---


def count_subspaces(n: int, k: int) -> int:
    """Gaussian binomial [n, k]_2 via the product formula."""
    if not 0 <= k <= n:
        raise UsageError(f"need 0 <= k <= n, got n={n}, k={k}")
    num = den = 1
    for i in range(k):
        num *= (1 << (n - i)) - 1
        den *= (1 << (k - i)) - 1
    return num // den


def subspace_count_profile(n: int) -> list[int]:
    return [count_subspaces(n, k) for k in range(n + 1)]


def enumerate_subspaces(width: int, dim: int, budget: int | None = None) -> Iterator[Subspace]:
    """
    Yields every ``dim``-dimensional subspace of GF(2)^width exactly once, by
    walking pivot patterns and the free entries left of each pivot.
    """
    if not 0 <= dim <= width <= ENUMERATION_MAX_WIDTH:
        raise UsageError(
            f"need 0 <= dim <= width <= {ENUMERATION_MAX_WIDTH}, got width={width}, dim={dim}"
        )
    budget = config.settings.enum_budget if budget is None else budget
    total = count_subspaces(width, dim)
    if total > budget:
        raise EnumerationTooLargeError(
            f"{total} subspaces of dimension {dim} in width {width} exceed budget {budget}"
        )
    logger.debug(f"Enumerating {total} subspaces (width={width}, dim={dim})")
    return _walk_rref(width, dim)


def _walk_rref(width: int, dim: int) -> Iterator[Subspace]:
    for pivots in itertools.combinations(range(width), dim):
        taken = set(pivots)
        choices = []
        for p in pivots:
            free = [c for c in range(p) if c not in taken]
            head = 1 << p
            choices.append([head | _scatter(x, free) for x in range(1 << len(free))])
        for rows in itertools.product(*choices):
            yield Subspace(width, rows)


def enumerate_all_subspaces(width: int, budget: int | None = None) -> Iterator[Subspace]:
    """Every subspace of GF(2)^width, by increasing dimension."""
    budget = config.settings.enum_budget if budget is None else budget
    total = sum(subspace_count_profile(width))
    if total > budget:
        raise EnumerationTooLargeError(f"{total} subspaces in width {width} exceed budget {budget}")
    for k in range(width + 1):
        yield from enumerate_subspaces(width, k, budget)
