import numpy as np
import pytest

from blocksys_app.errors import UsageError
from blocksys_app.services.cipher import CipherSpec, Partition, SBoxTable, mixing_layer, toy_spec
from blocksys_app.services.gf2 import BitMatrix, span
from blocksys_app.services.gf2m import FieldSpec
from blocksys_app.services.primitivity import (
    check_power_condition,
    differential_image_size,
    invariant_subspaces_up_to_codim,
    lambda_invariant_block_sums,
    max_certifiable_r,
    min_image_size,
    smallest_admissible_r,
    trace_invariant_subspace,
    verify_primitivity,
)


# --- condition (1) ---


def test_power_condition_examples(gf8):
    assert check_power_condition(SBoxTable.inversion(gf8), 2)
    assert check_power_condition(SBoxTable.identity(3), 2)
    cycle = SBoxTable(2, (0, 2, 3, 1))
    assert not check_power_condition(cycle, 2)
    assert check_power_condition(cycle, 3)


def test_power_condition_needs_zero_fixed():
    swap = SBoxTable(1, (1, 0))
    assert swap.power(2) == SBoxTable.identity(1)
    assert not check_power_condition(swap, 2)


def test_power_condition_rejects_small_s(gf8):
    with pytest.raises(UsageError):
        check_power_condition(SBoxTable.inversion(gf8), 1)


# --- condition (2) ---


def test_differential_image_size_examples(gf8):
    inv = SBoxTable.inversion(gf8)
    assert differential_image_size(inv, 1) == 4
    assert differential_image_size(SBoxTable.identity(3), 5) == 1
    with pytest.raises(UsageError):
        differential_image_size(inv, 0)


@pytest.mark.parametrize("m", [3, 4, 5, 6, 7, 8])
def test_inversion_image_size_by_parity(m):
    expected = (1 << (m - 1)) - 1 if m % 2 == 0 else 1 << (m - 1)
    assert min_image_size(SBoxTable.inversion(FieldSpec.default(m))) == expected


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6, 8])
def test_image_size_never_exceeds_half_the_brick(m, rng):
    # x and x + a always give the same difference
    sboxes = [SBoxTable.identity(m), SBoxTable.inversion(FieldSpec.default(m))]
    sboxes += [SBoxTable.random(m, rng) for _ in range(3)]
    for sbox in sboxes:
        assert all(differential_image_size(sbox, a) <= 1 << (m - 1) for a in range(1, 1 << m))


def _random_involution(m, rng):
    table = list(range(1 << m))
    points = [int(x) for x in rng.permutation(np.arange(1, 1 << m))]
    for x, y in zip(points[::2], points[1::2]):
        table[x], table[y] = y, x
    return SBoxTable(m, tuple(table))


@pytest.mark.parametrize("m", [3, 4, 6, 8])
def test_involution_image_sizes_match_the_inverse_table(m, rng):
    for sbox in (SBoxTable.inversion(FieldSpec.default(m)), _random_involution(m, rng)):
        inverse = sbox.inverse()
        assert check_power_condition(sbox, 2)
        for a in range(1, 1 << m):
            assert differential_image_size(sbox, a) == differential_image_size(inverse, a)


def test_r_bounds(gf8, gf256):
    aes_inv = SBoxTable.inversion(gf256)
    assert max_certifiable_r(aes_inv, 2) == 3
    assert smallest_admissible_r(aes_inv, 2) == 1
    # m = 3, s = 2 leaves only r = 1, and 4 > 2^(3-1-1) holds
    assert max_certifiable_r(SBoxTable.inversion(gf8), 2) == 1
    # the identity has image size 1, never above the bound
    assert max_certifiable_r(SBoxTable.identity(8), 2) is None


def test_invariant_subspaces_of_small_inversion(gf8):
    found = invariant_subspaces_up_to_codim(SBoxTable.inversion(gf8), 2)
    assert found == [span(3, [1])]


def test_invariant_subspaces_of_identity_are_all_hyperplanes():
    for m in (3, 4, 5):
        found = invariant_subspaces_up_to_codim(SBoxTable.identity(m), 1)
        assert len(found) == (1 << m) - 1
        assert all(s.codim == 1 for s in found)


@pytest.mark.slow
def test_invariant_subspaces_of_gf256_inversion(gf256):
    inv = SBoxTable.inversion(gf256)
    assert invariant_subspaces_up_to_codim(inv, 2) == []
    found = invariant_subspaces_up_to_codim(inv, 4)
    # the subfield GF(16)
    assert [s.dim for s in found] == [4]


def test_codim_bound_range(gf8):
    with pytest.raises(UsageError):
        invariant_subspaces_up_to_codim(SBoxTable.inversion(gf8), 3)


# --- condition (3) ---


def test_lambda_invariant_sums_identity():
    sums = lambda_invariant_block_sums(BitMatrix.identity(6), Partition(3, 2))
    assert len(sums) == 6
    assert [0] in sums and [1, 2] in sums


def test_lambda_invariant_sums_rotation():
    p = Partition(4, 2)
    assert lambda_invariant_block_sums(mixing_layer("rotate", p), p) == []


def test_lambda_invariant_sums_two_cycles():
    # blocks 0 <-> 1 and 2 <-> 3
    p = Partition(4, 1)
    lam = BitMatrix((0b0010, 0b0001, 0b1000, 0b0100), 4)
    assert lambda_invariant_block_sums(lam, p) == [[0, 1], [2, 3]]


def test_lambda_invariant_sums_single_block():
    assert lambda_invariant_block_sums(BitMatrix.identity(4), Partition(1, 4)) == []


# --- verdicts ---


def test_small_primitive_toys_are_certified(primitive_toy):
    report = verify_primitivity(primitive_toy)
    assert report.verdict == "CERTIFIED_PRIMITIVE"
    assert report.reasons == []
    assert report.achieved_r == 1
    assert report.min_image_size == [16]

    seven = verify_primitivity(toy_spec(2, 7, "inversion", "mixcolumns"))
    assert seven.verdict == "CERTIFIED_PRIMITIVE"


def test_single_block_is_inconclusive():
    report = verify_primitivity(toy_spec(1, 3, "inversion", "identity"))
    assert report.verdict == "INCONCLUSIVE"
    assert report.lambda_invariant_sums == []
    assert any("single block" in r for r in report.reasons)


def test_identity_layers_are_inconclusive(identity_toy):
    report = verify_primitivity(identity_toy)
    assert report.verdict == "INCONCLUSIVE"
    assert report.achieved_r is None
    assert report.lambda_invariant_sums == [[0], [1]]


def test_cycle_sbox_passes_condition_one_only_at_s3():
    sbox = SBoxTable(2, (0, 2, 3, 1))
    spec = CipherSpec(
        name="cycle",
        partition=Partition(2, 2),
        sboxes=(sbox, sbox),
        lam=mixing_layer("mixcolumns", Partition(2, 2)),
    )
    assert not verify_primitivity(spec, 2).condition1
    assert verify_primitivity(spec, 3).condition1


def test_power_failure_is_a_reason(rng):
    sbox = SBoxTable.random(5, rng)
    spec = CipherSpec(
        name="random",
        partition=Partition(2, 5),
        sboxes=(sbox, sbox),
        lam=mixing_layer("mixcolumns", Partition(2, 5)),
    )
    report = verify_primitivity(spec)
    if not report.condition1:
        assert report.verdict == "INCONCLUSIVE"
        assert any("gamma^2" in r for r in report.reasons)


# --- proof replay ---


def test_trace_of_lambda_invariant_block_sum(identity_toy):
    u = span(4, [0b0001, 0b0010])
    trace = trace_invariant_subspace(identity_toy, u)
    assert trace.dims_match
    assert trace.gamma_maps_u_to_w
    assert trace.active_blocks == [0]
    assert trace.is_block_sum
    assert trace.block_sum_lambda_invariant
    assert [x.dim_u for x in trace.intersections] == [2, 0]


def test_trace_width_mismatch(identity_toy):
    with pytest.raises(UsageError):
        trace_invariant_subspace(identity_toy, span(5, [1]))
