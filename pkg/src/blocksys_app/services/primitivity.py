# src/blocksys_app/services/primitivity.py
"""
Sufficient conditions for the group <T, rho> to be primitive.

For every S-box gamma_i and some r with 1 <= r < m/s:
  (1) gamma_i^s = 1 and 0 gamma_i = 0;
  (2) every difference map x -> (x + a) gamma_i + x gamma_i, a != 0, has image
      larger than 2^(m-r-1), and no proper nonzero gamma_i-invariant subspace of
      V_i has codimension <= s*r;
and (3) no sum of some of the V_i other than {0} and V is lambda-invariant.

Failure of a condition proves nothing; the verdict is CERTIFIED_PRIMITIVE or INCONCLUSIVE.
"""
from __future__ import annotations

import numpy as np
from loguru import logger

from blocksys_app.errors import UsageError
from blocksys_app.schemas import (
    BlockIntersection,
    InvariantSubspaceTrace,
    PrimitivityReport,
    SBoxCheck,
    SubspaceRead,
)
from blocksys_app.services.cipher import CipherSpec, Partition, SBoxTable
from blocksys_app.services.gf2 import (
    BitMatrix,
    Subspace,
    annihilator,
    enumerate_subspaces,
    span,
    subspace_intersection,
)

MAX_SUBSET_BLOCKS = 24
TRACE_MAX_DIM = 16


def _check_s(s: int) -> None:
    if s < 2:
        raise UsageError(f"s must be at least 2, got {s}")


# --- Condition (1) ---


def check_power_condition(sbox: SBoxTable, s: int = 2) -> bool:
    """0 gamma = 0 and the s-fold composition of gamma is the identity."""
    _check_s(s)
    if sbox.table[0] != 0:
        return False
    return sbox.power(s).table == tuple(range(len(sbox.table)))


# --- Condition (2) ---


def differential_image_size(sbox: SBoxTable, a: int) -> int:
    """|{ (x + a) gamma + x gamma : x }|."""
    if a == 0:
        raise UsageError("the input difference must be nonzero")
    if not 0 < a < len(sbox.table):
        raise UsageError(f"difference {a:#x} is not an element of GF(2)^{sbox.m}")
    table = sbox.array
    points = np.arange(len(table), dtype=np.uint64)
    return int(np.unique(table[points ^ np.uint64(a)] ^ table).size)


def min_image_size(sbox: SBoxTable) -> int:
    return min(differential_image_size(sbox, a) for a in range(1, 1 << sbox.m))


def _r_range(m: int, s: int) -> range:
    # 1 <= r and r*s < m
    return range(1, (m - 1) // s + 1)


def _image_ok(min_image: int, m: int, r: int) -> bool:
    return min_image > 1 << (m - r - 1)


def max_certifiable_r(sbox: SBoxTable, s: int = 2, min_image: int | None = None) -> int | None:
    """Largest r with 1 <= r < m/s whose image-size bound holds, or None."""
    _check_s(s)
    min_image = min_image_size(sbox) if min_image is None else min_image
    good = [r for r in _r_range(sbox.m, s) if _image_ok(min_image, sbox.m, r)]
    return max(good) if good else None


def smallest_admissible_r(sbox: SBoxTable, s: int = 2, min_image: int | None = None) -> int | None:
    """
    Smallest r in range whose image-size bound holds. The image bound weakens
    as r grows while the subspace bound s*r tightens, so this is the r to check.
    """
    _check_s(s)
    min_image = min_image_size(sbox) if min_image is None else min_image
    return next((r for r in _r_range(sbox.m, s) if _image_ok(min_image, sbox.m, r)), None)


def is_invariant(sbox: SBoxTable, s: Subspace) -> bool:
    """gamma maps every point of s into s (and hence onto s)."""
    images = sbox.array[s.element_array()]
    return bool(s.contains_array(images).all())


def invariant_subspaces_up_to_codim(sbox: SBoxTable, c: int) -> list[Subspace]:
    """
    Proper nonzero gamma-invariant subspaces of codimension <= c, found as the
    annihilators of the dual subspaces of dimension 1..c.
    """
    if not 0 <= c < sbox.m:
        raise UsageError(f"codimension bound must be in 0..{sbox.m - 1}, got {c}")
    found = []
    for k in range(1, c + 1):
        for dual in enumerate_subspaces(sbox.m, k):
            candidate = annihilator(dual)
            if is_invariant(sbox, candidate):
                found.append(candidate)
    found.sort(key=Subspace.sort_key)
    logger.debug(f"{len(found)} invariant subspaces of codim <= {c}")
    return found


# --- Condition (3) ---


def block_reach(lam: BitMatrix, partition: Partition) -> list[int]:
    """reach[i]: bitmask of blocks j on which V_i lambda has a nonzero projection."""
    reach = []
    for i in range(partition.n_t):
        mask = 0
        for j in range(partition.m):
            image = lam.rows[i * partition.m + j]
            for t in range(partition.n_t):
                if partition.project(image, t):
                    mask |= 1 << t
        reach.append(mask)
    return reach


def lambda_invariant_block_sums(lam: BitMatrix, partition: Partition) -> list[list[int]]:
    """Nonempty proper block subsets S with (sum of V_i, i in S) lambda inside that sum."""
    n_t = partition.n_t
    if n_t > MAX_SUBSET_BLOCKS:
        raise UsageError(f"subset enumeration supports at most {MAX_SUBSET_BLOCKS} blocks, got {n_t}")
    if lam.n_rows != partition.n_b:
        raise UsageError(f"mixing layer has {lam.n_rows} rows, partition needs {partition.n_b}")
    reach = block_reach(lam, partition)
    subsets = np.arange(1, (1 << n_t) - 1, dtype=np.int64)
    ok = np.ones(subsets.shape, dtype=bool)
    for i, r in enumerate(reach):
        has_i = ((subsets >> i) & 1).astype(bool)
        ok &= ~has_i | ((subsets & r) == r)
    return [[i for i in range(n_t) if (int(x) >> i) & 1] for x in subsets[ok]]


# --- Verdict ---


def verify_primitivity(spec: CipherSpec, s: int = 2) -> PrimitivityReport:
    _check_s(s)
    logger.info(f"Checking primitivity conditions for {spec.name} (s={s})")
    checks: list[tuple[SBoxTable, list[int], bool, int, int | None, int | None]] = []
    for sbox, blocks in spec.distinct_sboxes():
        min_image = min_image_size(sbox)
        checks.append(
            (
                sbox,
                blocks,
                check_power_condition(sbox, s),
                min_image,
                max_certifiable_r(sbox, s, min_image),
                smallest_admissible_r(sbox, s, min_image),
            )
        )

    condition1 = all(c[2] for c in checks)
    admissible = [c[5] for c in checks]
    achieved_r = None if None in admissible else max(a for a in admissible if a is not None)
    maxima = [c[4] for c in checks]
    max_r = None if None in maxima else min(x for x in maxima if x is not None)
    codim_bound = None if achieved_r is None else s * achieved_r

    sbox_reports = []
    found: list[list[SubspaceRead]] = []
    for sbox, blocks, power_ok, min_image, r_max, r_min in checks:
        invariant = (
            [] if codim_bound is None else invariant_subspaces_up_to_codim(sbox, codim_bound)
        )
        reads = [SubspaceRead.from_subspace(u) for u in invariant]
        found.append(reads)
        sbox_reports.append(
            SBoxCheck(
                blocks=blocks,
                power_condition=power_ok,
                min_image_size=min_image,
                max_r=r_max,
                admissible_r=r_min,
                invariant_subspaces=reads,
            )
        )

    sums = lambda_invariant_block_sums(spec.lam, spec.partition)

    reasons = []
    if not condition1:
        reasons.append(f"an S-box fails gamma^{s} = 1 with 0 gamma = 0")
    if achieved_r is None:
        reasons.append(f"no r with 1 <= r < m/{s} satisfies the differential image bound")
    if any(found):
        reasons.append(f"an S-box has an invariant subspace of codimension <= {codim_bound}")
    if sums:
        reasons.append(f"{len(sums)} proper block sums are lambda-invariant")
    if spec.n_t == 1:
        reasons.append("single block: the diffusion condition is vacuous, not certified")
    verdict = "INCONCLUSIVE" if reasons else "CERTIFIED_PRIMITIVE"

    if verdict == "CERTIFIED_PRIMITIVE":
        logger.success(f"{spec.name}: certified primitive (r={achieved_r})")
    else:
        logger.warning(f"{spec.name}: inconclusive ({'; '.join(reasons)})")

    return PrimitivityReport(
        cipher=spec.name,
        s=s,
        condition1=condition1,
        min_image_size=[c[3] for c in checks],
        max_r=max_r,
        achieved_r=achieved_r,
        codim_bound=codim_bound,
        sboxes=sbox_reports,
        invariant_subspaces_found=found,
        lambda_invariant_sums=sums,
        verdict=verdict,
        reasons=reasons,
        notes=list(spec.notes),
    )


# --- Proof replay on a concrete invariant subspace ---


def _block_subspace(partition: Partition, i: int) -> Subspace:
    return Subspace(partition.n_b, tuple(1 << (i * partition.m + j) for j in range(partition.m)))


def _image(mat: BitMatrix, u: Subspace) -> Subspace:
    return span(mat.cols, (mat.apply_int(r) for r in u.rows))


def trace_invariant_subspace(spec: CipherSpec, u: Subspace) -> InvariantSubspaceTrace:
    """
    Replays the certification argument on U: W = U lambda^-1, U gamma = W,
    and the per-block intersections U n V_i, W n V_i, U n W n V_i.
    """
    if u.width != spec.n_b:
        raise UsageError(f"subspace width {u.width} does not match cipher width {spec.n_b}")
    if u.dim > TRACE_MAX_DIM or spec.n_b > 64:
        raise UsageError(f"tracing needs dim U <= {TRACE_MAX_DIM} and n_b <= 64")
    p = spec.partition
    w = _image(spec.lam_inverse, u)
    gamma_ok = bool(w.contains_array(spec.gamma_array(u.element_array())).all())

    active = [i for i in range(p.n_t) if any(p.project(r, i) for r in u.rows)]
    intersections = []
    for i in range(p.n_t):
        v_i = _block_subspace(p, i)
        u_i = subspace_intersection(u, v_i)
        w_i = subspace_intersection(w, v_i)
        intersections.append(
            BlockIntersection(
                block=i,
                dim_u=u_i.dim,
                dim_w=w_i.dim,
                dim_uw=subspace_intersection(u_i, w_i).dim,
            )
        )

    block_sum = span(p.n_b, (r for i in active for r in _block_subspace(p, i).rows))
    is_block_sum = block_sum == u
    lam_invariant = _image(spec.lam, u) == u if is_block_sum else None

    return InvariantSubspaceTrace(
        subspace=SubspaceRead.from_subspace(u),
        w=SubspaceRead.from_subspace(w),
        dims_match=w.dim == u.dim,
        gamma_maps_u_to_w=gamma_ok,
        active_blocks=active,
        intersections=intersections,
        is_block_sum=is_block_sum,
        block_sum_lambda_invariant=lam_invariant,
    )
