# src/blocksys_app/services/render.py
"""Plain-text and JSON rendering of reports. Output goes to stdout only."""
from __future__ import annotations

from pydantic import BaseModel

from blocksys_app.schemas import (
    BlockSystemReport,
    FieldAppendixReport,
    FindBlocksResult,
    InvariantSubspaceTrace,
    PrimitivityReport,
    SubspaceRead,
    TrapdoorDemoReport,
)

# long subspace lists are cut in text output; JSON always carries everything
TEXT_LIST_LIMIT = 20


def _subspace(s: SubspaceRead, indent: str = "    ") -> list[str]:
    head = f"{indent}dim {s.dim}:"
    if not s.basis:
        return [f"{head} {{0}}"]
    return [head] + [f"{indent}  {row}" for row in s.basis]


def _cut(items: list, label: str) -> tuple[list, list[str]]:
    if len(items) <= TEXT_LIST_LIMIT:
        return items, []
    return items[:TEXT_LIST_LIMIT], [f"    ... {len(items) - TEXT_LIST_LIMIT} more {label}"]


def render_primitivity(r: PrimitivityReport) -> str:
    lines = [
        f"cipher: {r.cipher}",
        f"s: {r.s}",
        f"condition 1 (gamma^s = 1, 0 gamma = 0): {'pass' if r.condition1 else 'fail'}",
        f"min differential image size: {', '.join(map(str, r.min_image_size))}",
        f"max admissible r: {r.max_r if r.max_r is not None else 'none'}",
        f"achieved r: {r.achieved_r if r.achieved_r is not None else 'none'}",
    ]
    for i, check in enumerate(r.sboxes):
        lines.append(
            f"  S-box {i} (blocks {','.join(map(str, check.blocks))}): "
            f"image {check.min_image_size}, {len(check.invariant_subspaces)} invariant subspaces"
            + (f" of codim <= {r.codim_bound}" if r.codim_bound is not None else "")
        )
        shown, more = _cut(check.invariant_subspaces, "subspaces")
        for s in shown:
            lines.extend(_subspace(s))
        lines.extend(more)
    lines.append(f"lambda-invariant block sums: {len(r.lambda_invariant_sums)}")
    shown_sums, more = _cut(r.lambda_invariant_sums, "sums")
    lines.extend(f"    {{{', '.join(map(str, s))}}}" for s in shown_sums)
    lines.extend(more)
    lines.append(f"verdict: {r.verdict}")
    lines.extend(f"  - {reason}" for reason in r.reasons)
    lines.extend(f"note: {n}" for n in r.notes)
    return "\n".join(lines)


def _render_blocks(r: BlockSystemReport) -> list[str]:
    lines = [
        f"[{r.method}] evidence={r.evidence} nontrivial={'yes' if r.exists_nontrivial else 'no'}",
    ]
    if r.block_size is not None:
        lines.append(f"  smallest block: {r.block_size} points, {r.block_count} blocks")
    lines.append(f"  minimal invariant subspaces: {len(r.invariant_subspaces)}")
    shown, more = _cut(r.invariant_subspaces, "subspaces")
    for s in shown:
        lines.extend(_subspace(s))
    lines.extend(more)
    lines.append(f"  seeds: {len(r.trace)}")
    return lines


def _render_trace(t: InvariantSubspaceTrace) -> list[str]:
    lines = [
        f"  trace of dim-{t.subspace.dim} subspace: W = U lambda^-1 has dim {t.w.dim}, "
        f"U gamma = W: {'yes' if t.gamma_maps_u_to_w else 'no'}",
        f"    active blocks: {', '.join(map(str, t.active_blocks)) or 'none'}",
        f"    sum of whole blocks: {'yes' if t.is_block_sum else 'no'}",
    ]
    for x in t.intersections:
        lines.append(f"    block {x.block}: dim U^V={x.dim_u} W^V={x.dim_w} U^W^V={x.dim_uw}")
    return lines


def render_find_blocks(r: FindBlocksResult) -> str:
    lines = [f"cipher: {r.cipher} ({r.n_b} bits)"]
    if r.planted_U is not None:
        lines.append("planted U:")
        lines.extend(_subspace(r.planted_U))
        lines.append(f"  contains a reported subspace: {'yes' if r.planted_recovered else 'no'}")
    for report in r.reports:
        lines.extend(_render_blocks(report))
    if r.methods_agree is not None:
        lines.append(f"methods agree: {'yes' if r.methods_agree else 'NO'}")
    for t in r.traces:
        lines.extend(_render_trace(t))
    return "\n".join(lines)


def render_trapdoor(r: TrapdoorDemoReport) -> str:
    lines = [f"trapdoor cipher: n_b={r.n_b}, d={r.d}, seed={r.seed}", "planted U:"]
    lines.extend(_subspace(r.planted_U))
    lines += [
        f"distinguisher ({r.pairs} pairs): trapdoor {r.distinguisher_trapdoor:.4f}, "
        f"control {r.distinguisher_control:.4f}, chance {r.baseline:.6f}",
        f"key recovery: {len(r.attacks)} trials, all keys recovered: "
        f"{'yes' if r.all_keys_recovered else 'NO'}",
        f"  max trials {r.max_trial_count} <= bound {r.trial_bound} "
        f"(full search {1 << r.n_b})",
        f"subspaces of dimension {r.d} an attacker would have to guess: {r.candidate_subspaces}",
        f"attack model: {r.attack_model}",
    ]
    return "\n".join(lines)


def render_field_appendix(r: FieldAppendixReport) -> str:
    c = r.catalog
    lines = [
        f"field: {c.field}",
        f"subspaces examined: {c.subspaces_examined}",
        f"inversion-closed nonzero subspaces: {len(c.entries)}",
        f"{'dim':>4}  {'subfield':<8}  basis",
    ]
    for e in c.entries:
        lines.append(f"{e.dim:>4}  {('yes' if e.is_subfield else 'NO'):<8}  {' '.join(e.basis)}")
    lines += [
        f"subfield dimensions expected: {', '.join(map(str, c.expected_dimensions))}",
        f"Hua identity: {r.hua.pairs_checked} pairs "
        f"({'exhaustive' if r.hua.exhaustive else 'sampled'}), {r.hua.failures} failures",
        f"inversion differential image size: {r.min_image_size} (expected {r.expected_image_size})",
    ]
    return "\n".join(lines)


_RENDERERS = {
    PrimitivityReport: render_primitivity,
    FindBlocksResult: render_find_blocks,
    TrapdoorDemoReport: render_trapdoor,
    FieldAppendixReport: render_field_appendix,
}


def render(model: BaseModel, fmt: str = "text") -> str:
    if fmt == "json":
        return model.model_dump_json(indent=2)
    return _RENDERERS[type(model)](model)  # type: ignore[operator]


def emit(model: BaseModel, fmt: str = "text") -> None:
    print(render(model, fmt))
