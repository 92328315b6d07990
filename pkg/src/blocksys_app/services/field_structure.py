# src/blocksys_app/services/field_structure.py
"""
Exhaustive checks of finite-field facts behind the inversion S-box:
solutions of (x + a)^-1 + x^-1 = b, Hua's identity, and the subspaces of
GF(2^m) closed under inversion (all of them subfields).
"""
from __future__ import annotations

from collections import Counter

import numpy as np
from loguru import logger

from blocksys_app import config
from blocksys_app.errors import UsageError
from blocksys_app.schemas import FieldAppendixReport, HuaSweep, SubfieldCatalog, SubfieldEntry
from blocksys_app.services.cipher import SBoxTable
from blocksys_app.services.gf2 import Subspace, enumerate_all_subspaces
from blocksys_app.services.gf2m import FieldSpec
from blocksys_app.services.primitivity import min_image_size

HUA_EXHAUSTIVE_MAX_M = 6
HUA_SAMPLES = 10_000


def _inverse_array(fld: FieldSpec) -> np.ndarray:
    return np.array(fld.inverse_table, dtype=np.int64)


# --- Difference equation ---


def solve_difference_equation(fld: FieldSpec, a: int, b: int) -> list[int]:
    """All x with (x + a)^-1 + x^-1 = b, inversion taking 0 to 0."""
    fld.check(a)
    fld.check(b)
    if a == 0:
        raise UsageError("a must be nonzero")
    inv = _inverse_array(fld)
    x = np.arange(fld.order)
    return [int(s) for s in np.flatnonzero((inv[x ^ a] ^ inv) == b)]


def solution_count_profile(fld: FieldSpec, a: int) -> dict[int, int]:
    """Number of right-hand sides b having each solution count, for fixed a."""
    fld.check(a)
    if a == 0:
        raise UsageError("a must be nonzero")
    inv = _inverse_array(fld)
    x = np.arange(fld.order)
    hits = np.bincount(inv[x ^ a] ^ inv, minlength=fld.order)
    return dict(sorted(Counter(int(h) for h in hits).items()))


def expected_image_size(m: int) -> int:
    """Image size of x -> (x + a)^-1 + x^-1: 2^(m-1) - 1 for even m, 2^(m-1) for odd m."""
    return (1 << (m - 1)) - 1 if m % 2 == 0 else 1 << (m - 1)


# --- Hua's identity ---


def hua_sides(fld: FieldSpec, a: int, b: int) -> tuple[int, int]:
    """a + ((a - b^-1)^-1 - a^-1)^-1 and a b a; subtraction is XOR."""
    fld.check(a)
    fld.check(b)
    mul = fld.mul_table
    if a == 0 or b == 0 or mul[a, b] == 1:
        raise UsageError(f"need a, b and ab - 1 invertible, got a={a}, b={b}")
    inv = fld.inverse_table
    lhs = a ^ inv[inv[a ^ inv[b]] ^ inv[a]]
    rhs = int(mul[mul[a, b], a])
    return lhs, rhs


def hua_identity_check(fld: FieldSpec, a: int, b: int) -> bool:
    lhs, rhs = hua_sides(fld, a, b)
    return lhs == rhs


def hua_sweep(fld: FieldSpec, samples: int | None = None, seed: int | None = None) -> HuaSweep:
    """Every valid (a, b) for small fields, otherwise ``samples`` seeded pairs."""
    mul = fld.mul_table
    if samples is None and fld.m <= HUA_EXHAUSTIVE_MAX_M:
        nonzero = range(1, fld.order)
        valid: list[tuple[int, int]] = [(a, b) for a in nonzero for b in nonzero if mul[a, b] != 1]
        exhaustive = True
    else:
        target = samples or HUA_SAMPLES
        rng = np.random.default_rng(config.settings.seed if seed is None else seed)
        valid = []
        # pairs with ab = 1 are redrawn
        while len(valid) < target:
            draws = rng.integers(1, fld.order, size=(target - len(valid), 2))
            valid += [(int(a), int(b)) for a, b in draws if mul[a, b] != 1]
        exhaustive = False
    failures = sum(not hua_identity_check(fld, a, b) for a, b in valid)
    if failures:
        logger.error(f"Hua identity failed on {failures} pairs in {fld.describe()}")
    return HuaSweep(pairs_checked=len(valid), failures=failures, exhaustive=exhaustive)


# --- Inversion-closed subspaces ---


def subfield_dimensions(m: int) -> list[int]:
    """Dimensions of the subfields of GF(2^m): the divisors of m."""
    return [k for k in range(1, m + 1) if m % k == 0]


def is_subfield(s: Subspace, fld: FieldSpec) -> bool:
    """1 in S and S closed under multiplication."""
    if s.width != fld.m:
        raise UsageError(f"subspace width {s.width} does not match field degree {fld.m}")
    if s.is_zero:
        raise UsageError("the zero subspace is not a candidate subfield")
    if not s.contains_int(1):
        return False
    elements = s.element_array().astype(np.int64)
    products = fld.mul_table[np.ix_(elements, elements)].ravel()
    return bool(s.contains_array(products.astype(np.uint64)).all())


def _inversion_closed(s: Subspace, inv: tuple[int, ...], inv_arr: np.ndarray) -> bool:
    # basis rows first; most candidates fail there
    if not all(s.contains_int(inv[r]) for r in s.rows):
        return False
    return bool(s.contains_array(inv_arr[s.element_array()]).all())


def inversion_closed_subspaces(fld: FieldSpec, budget: int | None = None) -> SubfieldCatalog:
    """Sweeps every subspace of GF(2)^m and keeps the nonzero ones closed under inversion."""
    inv = fld.inverse_table
    inv_arr = np.array(inv, dtype=np.uint64)
    logger.info(f"Sweeping all subspaces of {fld.describe()}")
    examined = 0
    entries = []
    for s in enumerate_all_subspaces(fld.m, budget):
        examined += 1
        if s.is_zero or not _inversion_closed(s, inv, inv_arr):
            continue
        entries.append(SubfieldEntry(dim=s.dim, basis=s.to_hex_rows(), is_subfield=is_subfield(s, fld)))
    catalog = SubfieldCatalog(
        field=fld.describe(),
        m=fld.m,
        reduction_poly=f"{fld.reduction_poly:#x}",
        entries=entries,
        subspaces_examined=examined,
        expected_dimensions=subfield_dimensions(fld.m),
    )
    logger.info(f"{examined} subspaces examined, {len(entries)} closed under inversion")
    return catalog


def field_appendix(fld: FieldSpec, hua_samples: int | None = None, seed: int | None = None) -> FieldAppendixReport:
    catalog = inversion_closed_subspaces(fld)
    if catalog.all_subfields:
        logger.success(f"every inversion-closed subspace of {fld.describe()} is a subfield")
    else:
        logger.warning(f"{fld.describe()}: an inversion-closed subspace is not a subfield")
    return FieldAppendixReport(
        catalog=catalog,
        hua=hua_sweep(fld, hua_samples, seed),
        min_image_size=min_image_size(SBoxTable.inversion(fld)),
        expected_image_size=expected_image_size(fld.m),
    )
