# src/blocksys_app/services/block_systems.py
"""
Block systems of G = <T, rho>.

Blocks through 0 are linear subspaces U with (v + u) rho + v rho in U for all
u in U, v in V; the blocks are then the cosets of U. Two searches find them:
the difference closure of a seed vector (any width, exhaustive up to the
configured cap and sampled above it) and the classical minimal-block
union-find on the materialized action (toy widths).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from loguru import logger

from blocksys_app import config
from blocksys_app.errors import UsageError
from blocksys_app.schemas import BlockSystemReport, CrosscheckResult, SeedTrace, SubspaceRead
from blocksys_app.services.cipher import CipherSpec
from blocksys_app.services.gf2 import BitVector, Echelon, Subspace, random_bits, to_hex

MASK64 = (1 << 64) - 1
_ONE = np.uint64(1)
CONFIRMATION_PASSES = 2


# --- 128-bit states as pairs of uint64 arrays ---


def _halves_mask(width: int) -> tuple[np.uint64, np.uint64]:
    return np.uint64((1 << min(width, 64)) - 1), np.uint64((1 << max(width - 64, 0)) - 1)


def _random_halves(rng: np.random.Generator, count: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    lo_mask, hi_mask = _halves_mask(width)
    top = np.iinfo(np.uint64).max
    lo = rng.integers(0, top, size=count, dtype=np.uint64, endpoint=True) & lo_mask
    hi = rng.integers(0, top, size=count, dtype=np.uint64, endpoint=True) & hi_mask
    return lo, hi


class _WideRho:
    """rho evaluated on (lo, hi) uint64 array pairs, for any state width up to 128."""

    def __init__(self, spec: CipherSpec) -> None:
        self.spec = spec
        self.mask = np.uint64(spec.partition.block_mask)
        self.sboxes = [s.array for s in spec.sboxes]
        self.lo_tables = [np.array([t & MASK64 for t in tab], dtype=np.uint64) for tab in spec.lam.byte_tables]
        self.hi_tables = [np.array([t >> 64 for t in tab], dtype=np.uint64) for tab in spec.lam.byte_tables]

    def gamma(self, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        m = self.spec.m
        out_lo = np.zeros_like(lo)
        out_hi = np.zeros_like(hi)
        for i, table in enumerate(self.sboxes):
            start, end = i * m, (i + 1) * m
            if end <= 64:
                s = np.uint64(start)
                out_lo |= table[(lo >> s) & self.mask] << s
            elif start >= 64:
                s = np.uint64(start - 64)
                out_hi |= table[(hi >> s) & self.mask] << s
            else:
                s, back = np.uint64(start), np.uint64(64 - start)
                y = table[((lo >> s) | (hi << back)) & self.mask]
                out_lo |= y << s
                out_hi |= y >> back
        return out_lo, out_hi

    def lam(self, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        out_lo = np.zeros_like(lo)
        out_hi = np.zeros_like(hi)
        for c, (t_lo, t_hi) in enumerate(zip(self.lo_tables, self.hi_tables, strict=True)):
            src, shift = (lo, 8 * c) if c < 8 else (hi, 8 * (c - 8))
            idx = (src >> np.uint64(shift)) & np.uint64(0xFF)
            out_lo ^= t_lo[idx]
            out_hi ^= t_hi[idx]
        return out_lo, out_hi

    def __call__(self, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.lam(*self.gamma(lo, hi))

    def differences(
        self, w: int, lo: np.ndarray, hi: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        a_lo, a_hi = self(lo ^ np.uint64(w & MASK64), hi ^ np.uint64(w >> 64))
        b_lo, b_hi = self(lo, hi)
        return a_lo ^ b_lo, a_hi ^ b_hi


def _reduce_halves(lo: np.ndarray, hi: np.ndarray, row: int) -> None:
    p = row.bit_length() - 1
    if p < 64:
        bit = (lo >> np.uint64(p)) & _ONE
    else:
        bit = (hi >> np.uint64(p - 64)) & _ONE
    lo ^= bit * np.uint64(row & MASK64)
    hi ^= bit * np.uint64(row >> 64)


def _absorb_halves(echelon: Echelon, lo: np.ndarray, hi: np.ndarray) -> list[int]:
    """Adjoins every vector of the array pair to the echelon; returns the new rows."""
    lo, hi = lo.copy(), hi.copy()
    for row in echelon.freeze().rows:
        _reduce_halves(lo, hi, row)
    added: list[int] = []
    while not echelon.is_full:
        keep = (lo | hi) != 0
        lo, hi = lo[keep], hi[keep]
        if lo.size == 0:
            break
        v = int(lo[0]) | (int(hi[0]) << 64)
        echelon.add(v)
        added.append(v)
        _reduce_halves(lo, hi, v)
    return added


# --- Difference closure ---


@dataclass
class ClosureResult:
    subspace: Subspace
    evidence: str


def _exhaustive_cap() -> int:
    return config.settings.exhaustive_bits


def _check_mode(spec: CipherSpec, sampled: bool) -> bool:
    """True for the exhaustive v-loop; raises when the width needs sampling and it was not allowed."""
    if spec.n_b <= _exhaustive_cap():
        return True
    if not sampled:
        raise UsageError(
            f"{spec.n_b}-bit state exceeds the exhaustive cap of {_exhaustive_cap()} bits; "
            "enable sampled mode"
        )
    return False


def _exhaustive_closure(spec: CipherSpec, u: int) -> Subspace:
    rho = spec.rho_table
    points = np.arange(1 << spec.n_b, dtype=np.uint64)
    echelon = Echelon(spec.n_b, [u])
    pending = [u]
    while pending and not echelon.is_full:
        # newest first
        w = pending.pop()
        pending.extend(echelon.add_array(rho[points ^ np.uint64(w)] ^ rho))
    return echelon.freeze()


def _sampled_closure(spec: CipherSpec, u: int, sample_size: int, rng: np.random.Generator) -> Subspace:
    wide = _WideRho(spec)
    echelon = Echelon(spec.n_b, [u])
    pending = [u]
    while True:
        while pending and not echelon.is_full:
            w = pending.pop()
            lo, hi = _random_halves(rng, sample_size, spec.n_b)
            pending.extend(_absorb_halves(echelon, *wide.differences(w, lo, hi)))
        if echelon.is_full:
            break
        # a proper candidate must survive fresh samples over its whole basis;
        # every failed pass grows the dimension, so this terminates
        for _ in range(CONFIRMATION_PASSES):
            for w in echelon.freeze().rows:
                lo, hi = _random_halves(rng, sample_size, spec.n_b)
                pending.extend(_absorb_halves(echelon, *wide.differences(w, lo, hi)))
        if not pending:
            break
    return echelon.freeze()


def closure_of(
    spec: CipherSpec,
    u: int,
    *,
    sampled: bool = False,
    sample_size: int | None = None,
    rng: np.random.Generator | None = None,
) -> ClosureResult:
    if u == 0 or u >> spec.n_b:
        raise UsageError(f"seed must be a nonzero {spec.n_b}-bit vector, got {u:#x}")
    if _check_mode(spec, sampled):
        return ClosureResult(_exhaustive_closure(spec, u), "exhaustive")
    sample_size = config.settings.sample_size if sample_size is None else sample_size
    rng = rng or np.random.default_rng(config.settings.seed)
    return ClosureResult(_sampled_closure(spec, u, sample_size, rng), "sampled")


def difference_closure(
    spec: CipherSpec,
    u: BitVector,
    *,
    sampled: bool = False,
    sample_size: int | None = None,
    seed: int | None = None,
) -> Subspace:
    """The smallest difference-invariant subspace containing u."""
    spec.check_state(u)
    rng = np.random.default_rng(config.settings.seed if seed is None else seed)
    return closure_of(spec, u.bits, sampled=sampled, sample_size=sample_size, rng=rng).subspace


def is_difference_invariant(spec: CipherSpec, u: Subspace) -> bool:
    """Exhaustive check of (v + w) rho + v rho in U over a basis of U and every v."""
    if spec.n_b > _exhaustive_cap():
        raise UsageError(f"exhaustive invariance check needs n_b <= {_exhaustive_cap()}")
    rho = spec.rho_table
    points = np.arange(1 << spec.n_b, dtype=np.uint64)
    return all(bool(u.contains_array(rho[points ^ np.uint64(w)] ^ rho).all()) for w in u.rows)


# --- Search for all minimal invariant subspaces ---


class _ClosureCache:
    def __init__(self, spec: CipherSpec) -> None:
        self.spec = spec
        self.memo: dict[int, Subspace] = {}
        self.trace: list[SeedTrace] = []

    def get(self, u: int, record: bool = False) -> Subspace:
        found = self.memo.get(u)
        if found is None:
            found = _exhaustive_closure(self.spec, u)
            self.memo[u] = found
        if record:
            self.trace.append(SeedTrace(seed=to_hex(u, self.spec.n_b), dim=found.dim))
            logger.debug(f"closure of {u:#x}: dim {found.dim}")
        return found


def _refine(cache: _ClosureCache, start: Subspace) -> list[Subspace]:
    """
    Every minimal closure below ``start``. A closure is minimal iff each of its
    nonzero elements regenerates it; otherwise all the smaller closures are explored.
    """
    minimal: list[Subspace] = []
    stack = [start]
    seen: set[Subspace] = set()
    while stack:
        k = stack.pop()
        if k in seen:
            continue
        seen.add(k)
        smaller = {c for x in k.elements() if x and (c := cache.get(x)) != k}
        if smaller:
            stack.extend(smaller)
        else:
            minimal.append(k)
    return minimal


def _find_exhaustive(spec: CipherSpec) -> BlockSystemReport:
    n = 1 << spec.n_b
    rho = spec.rho_table
    points = np.arange(n, dtype=np.uint64)
    cache = _ClosureCache(spec)
    covered = np.zeros(n, dtype=bool)
    full_known = np.zeros(n, dtype=bool)
    orbits = stabilizer_orbit_labels(spec)
    nontrivial: list[Subspace] = []

    for u in range(1, n):
        if covered[u] or full_known[u]:
            continue
        closure = cache.get(u, record=True)
        if closure.is_full:
            # closures along a stabilizer orbit are images of each other, so all of them are V
            full_known[orbits == orbits[u]] = True
            full_known[rho[points ^ np.uint64(u)] ^ rho] = True
        else:
            nontrivial.append(closure)
            covered[closure.element_array()] = True

    minimal: set[Subspace] = set()
    for k in nontrivial:
        minimal.update(_refine(cache, k))
    ordered = sorted(minimal, key=Subspace.sort_key)
    return BlockSystemReport(
        cipher=spec.name,
        method="CLOSURE",
        evidence="exhaustive",
        exists_nontrivial=bool(ordered),
        invariant_subspaces=[SubspaceRead.from_subspace(s) for s in ordered],
        trace=cache.trace,
    )


def _sampled_seeds(spec: CipherSpec, rng: np.random.Generator) -> list[int]:
    seeds = [1 << (i * spec.m) for i in range(spec.n_t)]
    target = max(config.settings.sampled_seed_count, len(seeds))
    while len(seeds) < target:
        x = random_bits(rng, spec.n_b)
        if x and x not in seeds:
            seeds.append(x)
    return seeds


def _find_sampled(spec: CipherSpec, sample_size: int | None, seed: int) -> BlockSystemReport:
    rng = np.random.default_rng(seed)
    found: set[Subspace] = set()
    trace = []
    for u in _sampled_seeds(spec, rng):
        if any(s.contains_int(u) for s in found):
            continue
        result = closure_of(spec, u, sampled=True, sample_size=sample_size, rng=rng)
        trace.append(SeedTrace(seed=to_hex(u, spec.n_b), dim=result.subspace.dim))
        if not result.subspace.is_full:
            found.add(result.subspace)
    minimal = [s for s in found if not any(t != s and t.is_subspace_of(s) for t in found)]
    minimal.sort(key=Subspace.sort_key)
    if minimal:
        logger.warning(f"{spec.name}: {len(minimal)} candidate subspaces from sampled closures")
    return BlockSystemReport(
        cipher=spec.name,
        method="CLOSURE",
        evidence="sampled",
        exists_nontrivial=bool(minimal),
        invariant_subspaces=[SubspaceRead.from_subspace(s) for s in minimal],
        trace=trace,
    )


def find_linear_block_systems(
    spec: CipherSpec,
    *,
    sampled: bool = False,
    sample_size: int | None = None,
    seed: int | None = None,
) -> BlockSystemReport:
    """
    Closures of every nonzero u, skipping u already inside a found closure or
    known to generate V. Lists every minimal nontrivial invariant subspace.
    """
    logger.info(f"Searching difference-invariant subspaces of {spec.name} ({spec.n_b} bits)")
    if _check_mode(spec, sampled):
        report = _find_exhaustive(spec)
    else:
        report = _find_sampled(spec, sample_size, config.settings.seed if seed is None else seed)
    logger.info(
        f"{spec.name}: {len(report.invariant_subspaces)} minimal invariant subspaces "
        f"({len(report.trace)} closures computed)"
    )
    return report


# --- Group action: minimal blocks by union-find ---


def _check_group_width(spec: CipherSpec) -> None:
    cap = config.settings.group_action_bits
    if spec.n_b > cap:
        raise UsageError(f"group action materializes 2^{spec.n_b} points; cap is {cap} bits")


def _minimal_block_labels(spec: CipherSpec, alpha: int) -> list[int] | None:
    """
    Union-find minimal block system of <T, rho> with 0 ~ alpha. Returns the
    representative of every point, or None once a class passes half the points
    (the only block is then V).
    """
    n = 1 << spec.n_b
    rho = [int(x) for x in spec.rho_table]
    parent = list(range(n))
    size = [1] * n

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int) -> int:
        if size[a] < size[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]
        return a

    translations = [1 << i for i in range(spec.n_b)]
    root = union(0, alpha)
    if size[root] * 2 > n:
        return None
    pairs = [(0, alpha)]
    while pairs:
        a, b = pairs.pop()
        images = [(a ^ t, b ^ t) for t in translations]
        images.append((rho[a], rho[b]))
        for ga, gb in images:
            ra, rb = find(ga), find(gb)
            if ra != rb:
                root = union(ra, rb)
                if size[root] * 2 > n:
                    return None
                pairs.append((ra, rb))
    return [find(x) for x in range(n)]


def minimal_block_through(spec: CipherSpec, alpha: BitVector) -> frozenset[int]:
    """The smallest block of <T, rho> containing 0 and alpha."""
    _check_group_width(spec)
    spec.check_state(alpha)
    if not alpha:
        raise UsageError("alpha must be nonzero")
    labels = _minimal_block_labels(spec, alpha.bits)
    if labels is None:
        return frozenset(range(1 << spec.n_b))
    return frozenset(x for x, r in enumerate(labels) if r == labels[0])


def _block_subspace(spec: CipherSpec, block: frozenset[int]) -> Subspace:
    echelon = Echelon(spec.n_b)
    echelon.add_many(block)
    return echelon.freeze()


def stabilizer_orbit_labels(spec: CipherSpec, generator_count: int = 32) -> np.ndarray:
    """
    Orbit labels on the points of the subgroup generated by h_t : x -> (x + t) rho + t rho
    for t in a seeded set of shifts; each label is the smallest point of its orbit.
    These maps lie in the stabilizer of 0, so minimal blocks through points of one
    orbit are images of each other.
    """
    n = 1 << spec.n_b
    rho = spec.rho_table
    points = np.arange(n, dtype=np.uint64)
    rng = np.random.default_rng(config.settings.seed)
    shifts = sorted({1 << i for i in range(spec.n_b)} | {int(x) for x in rng.integers(1, n, generator_count)})
    maps = [(rho[points ^ np.uint64(t)] ^ rho[t]).tolist() for t in shifts]

    label = [-1] * n
    label[0] = 0
    for start in range(1, n):
        if label[start] >= 0:
            continue
        label[start] = start
        stack = [start]
        while stack:
            x = stack.pop()
            for h in maps:
                y = h[x]
                if label[y] < 0:
                    label[y] = start
                    stack.append(y)
    return np.array(label, dtype=np.int64)


def stabilizer_orbit_representatives(spec: CipherSpec, generator_count: int = 32) -> list[int]:
    labels = stabilizer_orbit_labels(spec, generator_count)
    return [int(x) for x in np.flatnonzero(labels == np.arange(labels.size))[1:]]


def find_blocks_group_action(spec: CipherSpec) -> BlockSystemReport:
    """Minimal blocks through 0, one computation per stabilizer-orbit representative."""
    _check_group_width(spec)
    n = 1 << spec.n_b
    logger.info(f"Computing minimal blocks of <T, rho> on {n} points")
    blocks: set[frozenset[int]] = set()
    trace = []
    for alpha in stabilizer_orbit_representatives(spec):
        block = minimal_block_through(spec, BitVector(spec.n_b, alpha))
        trace.append(SeedTrace(seed=to_hex(alpha, spec.n_b), dim=len(block).bit_length() - 1))
        if len(block) < n:
            blocks.add(block)
    minimal = [b for b in blocks if not any(c != b and c < b for c in blocks)]
    subspaces = sorted((_block_subspace(spec, b) for b in minimal), key=Subspace.sort_key)
    smallest = min((len(b) for b in minimal), default=n)
    return BlockSystemReport(
        cipher=spec.name,
        method="GROUP_ACTION",
        evidence="exhaustive",
        exists_nontrivial=bool(subspaces),
        invariant_subspaces=[SubspaceRead.from_subspace(s) for s in subspaces],
        trace=trace,
        block_size=smallest,
        block_count=n // smallest,
    )


# --- Blocks are cosets of subspaces ---


def crosscheck_blocks_are_cosets(
    spec: CipherSpec, sample_count: int = 64, seed: int | None = None
) -> CrosscheckResult:
    """
    For sampled alpha: the union-find block through {0, alpha} is, as a point set,
    the difference closure of alpha, and every block is a coset of it.
    """
    _check_group_width(spec)
    n = 1 << spec.n_b
    rng = np.random.default_rng(config.settings.seed if seed is None else seed)
    if sample_count >= n - 1:
        alphas = list(range(1, n))
    else:
        alphas = sorted(int(x) for x in rng.choice(np.arange(1, n), size=sample_count, replace=False))
    points = np.arange(n, dtype=np.uint64)

    def fail(alpha: int, detail: str) -> CrosscheckResult:
        logger.error(f"crosscheck failed at alpha={alpha:#x}: {detail}")
        return CrosscheckResult(
            cipher=spec.name,
            passed=False,
            alphas_checked=len(alphas),
            counterexample=to_hex(alpha, spec.n_b),
            detail=detail,
        )

    for alpha in alphas:
        closure = _exhaustive_closure(spec, alpha)
        labels = _minimal_block_labels(spec, alpha)
        if labels is None:
            if not closure.is_full:
                return fail(alpha, f"block is V but closure has dim {closure.dim}")
            continue
        roots = np.array(labels, dtype=np.int64)
        block = np.flatnonzero(roots == roots[0])
        if block.size != closure.size:
            return fail(alpha, f"block has {block.size} points, closure has {closure.size}")
        if not closure.contains_array(block.astype(np.uint64)).all():
            return fail(alpha, "block is not the closure subspace")
        for w in closure.rows:
            if not np.array_equal(roots[points ^ np.uint64(w)], roots):
                return fail(alpha, f"translation by {w:#x} does not preserve the blocks")
        if not (np.bincount(roots)[np.unique(roots)] == closure.size).all():
            return fail(alpha, "blocks are not all cosets of one size")

    logger.success(f"{spec.name}: blocks match closures for {len(alphas)} alphas")
    return CrosscheckResult(cipher=spec.name, passed=True, alphas_checked=len(alphas))
