# src/blocksys_app/services/trapdoor.py
"""
Ciphers with a planted difference-invariant subspace U, and what U buys an attacker.

In an adapted basis y = x P^-1 with U = the low d coordinates, the S-box is
y = (y_u, y_w) -> (g_{y_w}(y_u), h(y_w)) and the mixing layer is block
triangular with U lambda' = U. Differences in U then stay in U through every round.
"""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from loguru import logger

from blocksys_app import config
from blocksys_app.errors import BlocksysError, InconsistentOracleError, UsageError
from blocksys_app.schemas import AttackResult, SubspaceRead, TrapdoorDemoReport
from blocksys_app.services.block_systems import is_difference_invariant
from blocksys_app.services.cipher import TOY_MAX_BITS, CipherSpec, Partition, SBoxTable, toy_spec
from blocksys_app.services.gf2 import (
    BitMatrix,
    Subspace,
    count_subspaces,
    mat_invert,
    random_bits,
    random_invertible_matrix,
    random_subspace,
    span,
    to_hex,
)

ATTACK_MODEL = (
    "one round v -> v rho + k with k unknown; known plaintext/ciphertext pairs; "
    "a trial is one evaluation of the round under a candidate key"
)


@dataclass(frozen=True)
class TrapdoorSpec:
    cipher: CipherSpec
    planted_u: Subspace
    basis_change: BitMatrix
    quotient_perm: tuple[int, ...]
    coset_perms: tuple[tuple[int, ...], ...]

    @property
    def n_b(self) -> int:
        return self.cipher.n_b

    @property
    def d(self) -> int:
        return self.planted_u.dim


def _check_dims(n_b: int, d: int) -> None:
    if not 1 <= n_b <= TOY_MAX_BITS:
        raise UsageError(f"trapdoor ciphers need 1 <= n_b <= {TOY_MAX_BITS}, got {n_b}")
    if not 0 < d < n_b:
        raise UsageError(f"planted dimension must satisfy 0 < d < n_b, got d={d}, n_b={n_b}")


def _triangular_mixing(n_b: int, d: int, rng: np.random.Generator) -> BitMatrix:
    """Invertible lambda' with the low d coordinates mapped into themselves."""
    top = random_invertible_matrix(d, rng)
    bottom = random_invertible_matrix(n_b - d, rng)
    rows = list(top.rows)
    for r in bottom.rows:
        rows.append(random_bits(rng, d) | (r << d))
    return BitMatrix(tuple(rows), n_b)


def build_trapdoor_cipher(
    n_b: int, d: int | None = None, seed: int | None = None, *, scramble: bool = True
) -> TrapdoorSpec:
    d = n_b // 2 if d is None else d
    _check_dims(n_b, d)
    seed = config.settings.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    low, high = 1 << d, 1 << (n_b - d)

    if scramble:
        h = tuple(int(x) for x in rng.permutation(high))
        g = tuple(tuple(int(x) for x in rng.permutation(low)) for _ in range(high))
    else:
        h = tuple(range(high))
        g = (tuple(range(low)),) * high

    p = random_invertible_matrix(n_b, rng)
    p_inv = mat_invert(p)
    lam_adapted = _triangular_mixing(n_b, d, rng)

    table = []
    for x in range(1 << n_b):
        y = p_inv.apply_int(x)
        y_u, y_w = y & (low - 1), y >> d
        table.append(g[y_w][y_u] | (h[y_w] << d))

    cipher = CipherSpec(
        name=f"trapdoor:{n_b}:{d}",
        partition=Partition(1, n_b),
        sboxes=(SBoxTable(n_b, tuple(table)),),
        lam=lam_adapted.then(p),
        notes=(f"planted subspace of dimension {d} (seed={seed})",),
    )
    planted = span(n_b, p.rows[:d])
    if not is_difference_invariant(cipher, planted):
        raise BlocksysError("planted subspace is not difference-invariant")
    logger.info(f"Built trapdoor cipher n_b={n_b}, d={d}, seed={seed}")
    return TrapdoorSpec(cipher, planted, p, h, g)


# --- Distinguisher ---


def truncated_distinguisher(
    spec: CipherSpec, u: Subspace, pair_count: int, seed: int | None = None
) -> float:
    """Fraction of random pairs (v, v + u), u in U nonzero, whose output difference lies in U."""
    if u.width != spec.n_b:
        raise UsageError(f"subspace width {u.width} does not match cipher width {spec.n_b}")
    if u.is_zero or u.is_full:
        raise UsageError("the distinguisher needs a proper nonzero subspace")
    if pair_count < 1:
        raise UsageError("pair_count must be at least 1")
    rng = np.random.default_rng(config.settings.seed if seed is None else seed)
    if spec.n_b <= TOY_MAX_BITS:
        rho = spec.rho_table
        coeffs = rng.integers(1, u.size, size=pair_count)
        v = rng.integers(0, 1 << spec.n_b, size=pair_count).astype(np.uint64)
        diffs = u.element_array()[coeffs]
        out = rho[v ^ diffs] ^ rho[v]
        return float(u.contains_array(out).mean())
    hits = 0
    for _ in range(pair_count):
        v = random_bits(rng, spec.n_b)
        w = u.combine(_nonzero_coefficients(rng, u.dim))
        hits += u.contains_int(spec.rho_int(v ^ w) ^ spec.rho_int(v))
    return hits / pair_count


def _nonzero_coefficients(rng: np.random.Generator, dim: int) -> int:
    c = 0
    while not c:
        c = random_bits(rng, dim)
    return c


def chance_baseline(n_b: int, d: int) -> float:
    """Probability that a uniform nonzero difference lands in a fixed d-dimensional subspace."""
    return ((1 << d) - 1) / ((1 << n_b) - 1)


def control_cipher(n_b: int, seed: int | None = None) -> CipherSpec:
    """A single random S-box followed by a random invertible mixing layer."""
    return toy_spec(1, n_b, "random", "random", seed)


# --- Key recovery ---


def oracle_pairs(
    cipher: CipherSpec, key: int, count: int, rng: np.random.Generator
) -> list[tuple[int, int]]:
    pairs = []
    for _ in range(count):
        p = random_bits(rng, cipher.n_b)
        pairs.append((p, cipher.rho_int(p) ^ key))
    return pairs


def coset_key_recovery(trapdoor: TrapdoorSpec, pairs: Sequence[tuple[int, int]]) -> AttackResult:
    """
    Phase 1 finds the coset k + U by trying one representative per coset;
    phase 2 tries the 2^d keys of that coset against every pair.
    """
    if not pairs:
        raise UsageError("at least one plaintext/ciphertext pair is required")
    cipher, u = trapdoor.cipher, trapdoor.planted_u
    p0, c0 = pairs[0]
    image0 = cipher.rho_int(p0)

    phase1 = 0
    coset = None
    for q in u.coset_representatives():
        phase1 += 1
        if u.contains_int(image0 ^ q ^ c0):
            coset = q
            break
    if coset is None:
        raise InconsistentOracleError("no coset of U is consistent with the first pair")

    images = [(cipher.rho_int(p), c) for p, c in pairs]
    phase2 = 0
    for x in u.elements():
        phase2 += 1
        key = coset ^ x
        if all(img ^ key == c for img, c in images):
            n_b, d = trapdoor.n_b, trapdoor.d
            logger.debug(f"key recovered after {phase1} + {phase2} trials")
            return AttackResult(
                recovered_key=to_hex(key, n_b),
                trial_count=phase1 + phase2,
                phase1_trials=phase1,
                phase2_trials=phase2,
                theoretical_bound=(1 << (n_b - d)) + (1 << d),
                full_search=1 << n_b,
            )
    raise InconsistentOracleError(f"no key in coset {coset:#x} + U reproduces all {len(pairs)} pairs")


def run_attack_trials(
    trapdoor: TrapdoorSpec, trials: int, seed: int, pairs_per_trial: int = 2
) -> tuple[list[AttackResult], bool]:
    """Seeded keys, one attack each; returns the results and whether every key was recovered."""
    rng = np.random.default_rng(seed)
    results = []
    all_ok = True
    for _ in range(trials):
        key = random_bits(rng, trapdoor.n_b)
        result = coset_key_recovery(trapdoor, oracle_pairs(trapdoor.cipher, key, pairs_per_trial, rng))
        all_ok &= int(result.recovered_key, 16) == key
        results.append(result)
    return results, all_ok


def run_trapdoor_demo(
    n_b: int, d: int | None = None, seed: int | None = None, *, trials: int = 1, pairs: int = 10_000
) -> tuple[TrapdoorSpec, TrapdoorDemoReport]:
    if trials < 1:
        raise UsageError("at least one key-recovery trial is required")
    seed = config.settings.seed if seed is None else seed
    trapdoor = build_trapdoor_cipher(n_b, d, seed)
    d = trapdoor.d
    control = control_cipher(n_b, seed + 1)
    control_u = random_subspace(n_b, d, np.random.default_rng(seed + 2))

    on_trapdoor = truncated_distinguisher(trapdoor.cipher, trapdoor.planted_u, pairs, seed)
    on_control = truncated_distinguisher(control, control_u, pairs, seed)
    logger.info(f"distinguisher: trapdoor {on_trapdoor:.4f}, control {on_control:.4f}")

    results, all_ok = run_attack_trials(trapdoor, trials, seed)
    bound = (1 << (n_b - d)) + (1 << d)
    worst = max(r.trial_count for r in results)
    if all_ok and worst <= bound:
        logger.success(f"recovered {trials} keys with at most {worst} trials (bound {bound})")
    else:
        logger.error(f"attack failed: recovered={all_ok}, worst trials={worst}, bound={bound}")

    report = TrapdoorDemoReport(
        n_b=n_b,
        d=d,
        seed=seed,
        planted_U=SubspaceRead.from_subspace(trapdoor.planted_u),
        distinguisher_trapdoor=on_trapdoor,
        distinguisher_control=on_control,
        baseline=chance_baseline(n_b, d),
        pairs=pairs,
        attacks=results,
        all_keys_recovered=all_ok,
        max_trial_count=worst,
        trial_bound=bound,
        candidate_subspaces=count_subspaces(n_b, d),
        attack_model=ATTACK_MODEL,
    )
    return trapdoor, report
