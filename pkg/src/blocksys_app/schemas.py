from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from blocksys_app.services.gf2 import Subspace

# Pydantic v2 models

Verdict = Literal["CERTIFIED_PRIMITIVE", "INCONCLUSIVE"]
BlockMethod = Literal["CLOSURE", "GROUP_ACTION"]
Evidence = Literal["exhaustive", "sampled"]
OutputFormat = Literal["text", "json"]
LambdaName = Literal["aes", "identity", "rotate", "random", "mixcolumns"]
SBoxName = Literal["inversion", "identity", "random"]


class SubspaceRead(BaseModel):
    width: int
    dim: int
    basis: list[str]

    @classmethod
    def from_subspace(cls, s: Subspace) -> SubspaceRead:
        return cls(width=s.width, dim=s.dim, basis=s.to_hex_rows())

    def to_subspace(self) -> Subspace:
        return Subspace(self.width, tuple(int(r, 16) for r in self.basis))


# --- Cipher-spec files ---


class CipherSpecFile(BaseModel):
    """On-disk cipher description; ``lambda`` is aliased because it is a keyword."""

    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    name: str = "custom"
    n_t: int = Field(ge=1)
    m: int = Field(ge=1)
    sboxes: list[list[int]] | SBoxName = "inversion"
    lambda_: list[str] | LambdaName = Field(default="identity", alias="lambda")
    seed: int | None = None
    planted_U: list[str] | None = None


# --- Primitivity ---


class SBoxCheck(BaseModel):
    blocks: list[int]
    power_condition: bool
    min_image_size: int
    max_r: int | None
    admissible_r: int | None
    invariant_subspaces: list[SubspaceRead] = Field(default_factory=list)


class PrimitivityReport(BaseModel):
    cipher: str
    s: int
    condition1: bool
    min_image_size: list[int]
    max_r: int | None
    achieved_r: int | None
    codim_bound: int | None
    sboxes: list[SBoxCheck]
    invariant_subspaces_found: list[list[SubspaceRead]]
    lambda_invariant_sums: list[list[int]]
    verdict: Verdict
    reasons: list[str] = Field(default_factory=list)
    notes: list[str] = Field(default_factory=list)


class BlockIntersection(BaseModel):
    block: int
    dim_u: int
    dim_w: int
    dim_uw: int


class InvariantSubspaceTrace(BaseModel):
    """The certification argument replayed on one concrete invariant subspace."""

    subspace: SubspaceRead
    w: SubspaceRead
    dims_match: bool
    gamma_maps_u_to_w: bool
    active_blocks: list[int]
    intersections: list[BlockIntersection]
    is_block_sum: bool
    block_sum_lambda_invariant: bool | None


# --- Block systems ---


class SeedTrace(BaseModel):
    seed: str
    dim: int


class BlockSystemReport(BaseModel):
    cipher: str
    method: BlockMethod
    evidence: Evidence = "exhaustive"
    exists_nontrivial: bool
    invariant_subspaces: list[SubspaceRead] = Field(default_factory=list)
    trace: list[SeedTrace] = Field(default_factory=list)
    block_size: int | None = None
    block_count: int | None = None


class FindBlocksResult(BaseModel):
    cipher: str
    n_b: int
    reports: list[BlockSystemReport]
    methods_agree: bool | None = None
    planted_U: SubspaceRead | None = None
    planted_recovered: bool | None = None
    traces: list[InvariantSubspaceTrace] = Field(default_factory=list)


class CrosscheckResult(BaseModel):
    cipher: str
    passed: bool
    alphas_checked: int
    counterexample: str | None = None
    detail: str | None = None


# --- Trapdoor ---


class AttackResult(BaseModel):
    recovered_key: str
    trial_count: int
    phase1_trials: int
    phase2_trials: int
    theoretical_bound: int
    full_search: int


class TrapdoorDemoReport(BaseModel):
    n_b: int
    d: int
    seed: int
    planted_U: SubspaceRead
    distinguisher_trapdoor: float
    distinguisher_control: float
    baseline: float
    pairs: int
    attacks: list[AttackResult]
    all_keys_recovered: bool
    max_trial_count: int
    trial_bound: int
    candidate_subspaces: int
    attack_model: str


# --- Field structure ---


class SubfieldEntry(BaseModel):
    dim: int
    basis: list[str]
    is_subfield: bool


class SubfieldCatalog(BaseModel):
    field: str
    m: int
    reduction_poly: str
    entries: list[SubfieldEntry]
    subspaces_examined: int
    expected_dimensions: list[int]

    @property
    def dimensions(self) -> list[int]:
        return [e.dim for e in self.entries]

    @property
    def all_subfields(self) -> bool:
        return all(e.is_subfield for e in self.entries)


class HuaSweep(BaseModel):
    pairs_checked: int
    failures: int
    exhaustive: bool


class FieldAppendixReport(BaseModel):
    catalog: SubfieldCatalog
    hua: HuaSweep
    min_image_size: int
    expected_image_size: int


# --- CLI ---


class RunConfig(BaseModel):
    command: str
    source: str | None = None
    seed: int
    budget: int
    sample_size: int
    sampled: bool = False
    format: OutputFormat = "text"
