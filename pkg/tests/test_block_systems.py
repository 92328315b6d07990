import numpy as np
import pytest

from blocksys_app import config
from blocksys_app.errors import UsageError
from blocksys_app.services.aes import aes_spec
from blocksys_app.services.block_systems import (
    _WideRho,
    crosscheck_blocks_are_cosets,
    difference_closure,
    find_blocks_group_action,
    find_linear_block_systems,
    is_difference_invariant,
    minimal_block_through,
    stabilizer_orbit_representatives,
)
from blocksys_app.services.cipher import CipherSpec, Partition, SBoxTable, toy_spec
from blocksys_app.services.gf2 import (
    BitVector,
    Subspace,
    random_bits,
    random_invertible_matrix,
    span,
    subspace_intersection,
    subspace_sum,
)
from blocksys_app.services.trapdoor import build_trapdoor_cipher


@pytest.fixture
def small_exhaustive_cap(monkeypatch):
    monkeypatch.setattr(config.settings, "exhaustive_bits", 8)


# --- difference closure ---


def test_closure_under_identity_round_is_a_line(identity_toy):
    for bits in (1, 0b0110, 0b1111):
        assert difference_closure(identity_toy, BitVector(4, bits)) == span(4, [bits])


def test_closure_of_primitive_toy_is_everything(primitive_toy):
    for i in range(primitive_toy.n_b):
        assert difference_closure(primitive_toy, BitVector.unit(10, i)).is_full


def test_closure_rejects_zero_and_wrong_width(primitive_toy):
    with pytest.raises(UsageError):
        difference_closure(primitive_toy, BitVector.zero(10))
    with pytest.raises(UsageError):
        difference_closure(primitive_toy, BitVector.unit(9, 0))


def test_closure_is_difference_invariant(rng):
    spec = toy_spec(2, 4, "random", "random", seed=11)
    for _ in range(5):
        u = BitVector(8, random_bits(rng, 8) | 1)
        closure = difference_closure(spec, u)
        assert u in closure
        assert is_difference_invariant(spec, closure)


def test_closure_of_planted_vector_stays_in_planted_subspace():
    trapdoor = build_trapdoor_cipher(10, 4, seed=3)
    u = trapdoor.planted_u
    for row in u.rows:
        closure = difference_closure(trapdoor.cipher, BitVector(10, row))
        assert closure.is_subspace_of(u)


def test_exhaustive_cap_requires_sampled_mode(primitive_toy, small_exhaustive_cap):
    with pytest.raises(UsageError):
        difference_closure(primitive_toy, BitVector.unit(10, 0))
    full = difference_closure(primitive_toy, BitVector.unit(10, 0), sampled=True, sample_size=4096)
    assert full.is_full


def test_sampled_closure_on_aes_reaches_the_whole_state():
    e0 = BitVector.unit(128, 0)
    assert difference_closure(aes_spec(), e0, sampled=True, sample_size=256).is_full


def test_wide_rho_matches_scalar_rho(rng):
    p = Partition(9, 8)
    sboxes = tuple(SBoxTable.random(8, rng) for _ in range(9))
    spec = CipherSpec(name="wide", partition=p, sboxes=sboxes, lam=random_invertible_matrix(72, rng))
    states = [random_bits(rng, 72) for _ in range(50)]
    lo = np.array([s & ((1 << 64) - 1) for s in states], dtype=np.uint64)
    hi = np.array([s >> 64 for s in states], dtype=np.uint64)
    out_lo, out_hi = _WideRho(spec)(lo, hi)
    got = [int(a) | (int(b) << 64) for a, b in zip(out_lo, out_hi, strict=True)]
    assert got == [spec.rho_int(s) for s in states]


# --- searching for all minimal invariant subspaces ---


def test_identity_round_lists_every_line(identity_toy):
    report = find_linear_block_systems(identity_toy)
    assert report.method == "CLOSURE"
    assert report.evidence == "exhaustive"
    assert report.exists_nontrivial
    subspaces = [s.to_subspace() for s in report.invariant_subspaces]
    assert len(subspaces) == 15
    assert all(s.dim == 1 for s in subspaces)


def test_primitive_toy_has_no_block_system(primitive_toy):
    report = find_linear_block_systems(primitive_toy)
    assert not report.exists_nontrivial
    assert report.invariant_subspaces == []
    assert report.trace[0].dim == primitive_toy.n_b


def test_planted_subspace_is_found():
    trapdoor = build_trapdoor_cipher(10, 4, seed=3)
    report = find_linear_block_systems(trapdoor.cipher)
    assert report.exists_nontrivial
    found = [s.to_subspace() for s in report.invariant_subspaces]
    assert any(s.is_subspace_of(trapdoor.planted_u) for s in found)
    assert all(is_difference_invariant(trapdoor.cipher, s) for s in found)


def test_reported_subspaces_are_minimal():
    trapdoor = build_trapdoor_cipher(8, 4, seed=9, scramble=False)
    report = find_linear_block_systems(trapdoor.cipher)
    for read in report.invariant_subspaces:
        s = read.to_subspace()
        for x in s.elements():
            if x:
                assert difference_closure(trapdoor.cipher, BitVector(8, x)) == s


def test_sampled_search_agrees_on_primitive_toy(primitive_toy, small_exhaustive_cap):
    report = find_linear_block_systems(primitive_toy, sampled=True, sample_size=4096)
    assert report.evidence == "sampled"
    assert not report.exists_nontrivial


def test_search_is_deterministic():
    spec = toy_spec(2, 4, "random", "random", seed=21)
    assert find_linear_block_systems(spec) == find_linear_block_systems(spec)


# --- group action ---


def test_minimal_block_through_identity_round(identity_toy):
    assert minimal_block_through(identity_toy, BitVector(4, 0b0101)) == frozenset({0, 0b0101})


def test_minimal_block_through_primitive_toy_is_everything(primitive_toy):
    block = minimal_block_through(primitive_toy, BitVector.unit(10, 3))
    assert len(block) == 1 << 10


def test_minimal_block_is_the_closure():
    trapdoor = build_trapdoor_cipher(10, 4, seed=5)
    alpha = trapdoor.planted_u.rows[0]
    block = minimal_block_through(trapdoor.cipher, BitVector(10, alpha))
    closure = difference_closure(trapdoor.cipher, BitVector(10, alpha))
    assert block == frozenset(int(x) for x in closure.element_array())
    assert all(trapdoor.planted_u.contains_int(x) for x in block)


def test_minimal_block_rejects_zero(identity_toy):
    with pytest.raises(UsageError):
        minimal_block_through(identity_toy, BitVector.zero(4))


def test_group_action_width_cap(monkeypatch, primitive_toy):
    monkeypatch.setattr(config.settings, "group_action_bits", 8)
    with pytest.raises(UsageError):
        find_blocks_group_action(primitive_toy)


def test_orbit_representatives_cover_every_point(primitive_toy):
    reps = stabilizer_orbit_representatives(primitive_toy)
    assert reps[0] == 1
    assert 0 not in reps
    assert reps == sorted(set(reps))


def test_group_action_on_identity_round(identity_toy):
    report = find_blocks_group_action(identity_toy)
    assert report.method == "GROUP_ACTION"
    assert report.exists_nontrivial
    assert report.block_size == 2
    assert report.block_count == 8


@pytest.mark.parametrize(
    "spec",
    [
        toy_spec(2, 5, "inversion", "mixcolumns"),
        toy_spec(2, 2, "identity", "identity"),
        toy_spec(2, 4, "random", "random", seed=4),
        toy_spec(3, 3, "random", "rotate", seed=4),
    ],
    ids=lambda s: s.name,
)
def test_methods_agree(spec):
    closure = find_linear_block_systems(spec)
    group = find_blocks_group_action(spec)
    assert closure.exists_nontrivial == group.exists_nontrivial


def test_methods_agree_on_trapdoor():
    trapdoor = build_trapdoor_cipher(8, 3, seed=17)
    closure = find_linear_block_systems(trapdoor.cipher)
    group = find_blocks_group_action(trapdoor.cipher)
    assert closure.exists_nontrivial and group.exists_nontrivial
    assert group.block_size is not None and group.block_size <= 1 << 3


# --- blocks are cosets of invariant subspaces ---


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(10))
def test_blocks_are_cosets_on_random_toys(seed):
    spec = toy_spec(2, 4, "random", "random", seed=seed)
    result = crosscheck_blocks_are_cosets(spec, sample_count=32, seed=seed)
    assert result.passed, result.detail
    closure = find_linear_block_systems(spec)
    assert closure.exists_nontrivial == find_blocks_group_action(spec).exists_nontrivial


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(10))
def test_blocks_are_cosets_on_trapdoors(seed):
    trapdoor = build_trapdoor_cipher(8 if seed % 2 else 12, seed=seed)
    result = crosscheck_blocks_are_cosets(trapdoor.cipher, sample_count=32, seed=seed)
    assert result.passed, result.detail
    assert find_linear_block_systems(trapdoor.cipher).exists_nontrivial
    assert find_blocks_group_action(trapdoor.cipher).exists_nontrivial


def test_crosscheck_on_identity_round(identity_toy):
    result = crosscheck_blocks_are_cosets(identity_toy)
    assert result.passed
    assert result.alphas_checked == 15


def test_zero_subspace_is_trivially_invariant(primitive_toy):
    assert is_difference_invariant(primitive_toy, Subspace.zero(10))
    assert is_difference_invariant(primitive_toy, Subspace.full(10))


# --- search cost and lattice structure ---


def test_primitive_search_takes_one_closure_per_orbit(primitive_toy):
    report = find_linear_block_systems(primitive_toy)
    assert len(report.trace) <= len(stabilizer_orbit_representatives(primitive_toy))
    assert all(t.dim == primitive_toy.n_b for t in report.trace)


@pytest.mark.slow
def test_sixteen_bit_primitive_toy_is_searched_exhaustively():
    spec = toy_spec(4, 4, "inversion", "mixcolumns")
    report = find_linear_block_systems(spec)
    assert report.evidence == "exhaustive"
    assert not report.exists_nontrivial
    assert len(report.trace) <= len(stabilizer_orbit_representatives(spec))


@pytest.mark.parametrize("seed", [2, 5, 11])
def test_sums_and_intersections_of_invariant_subspaces_are_invariant(seed):
    trapdoor = build_trapdoor_cipher(10, 4, seed=seed)
    report = find_linear_block_systems(trapdoor.cipher)
    found = [s.to_subspace() for s in report.invariant_subspaces] + [trapdoor.planted_u]
    for a in found:
        for b in found:
            assert is_difference_invariant(trapdoor.cipher, subspace_sum(a, b))
            assert is_difference_invariant(trapdoor.cipher, subspace_intersection(a, b))
