# src/blocksys_app/services/spec_file.py
"""
Cipher-spec files (JSON) and preset strings.

    {"name": "...", "n_t": 2, "m": 4, "sboxes": "inversion" | [[...], ...],
     "lambda": "mixcolumns" | ["hex row", ...], "seed": 1, "planted_U": ["hex row", ...]}
"""
from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np
from loguru import logger
from pydantic import ValidationError

from blocksys_app import config
from blocksys_app.errors import BlocksysError, SpecParseError, UsageError
from blocksys_app.schemas import CipherSpecFile
from blocksys_app.services.aes import aes_lambda, aes_spec
from blocksys_app.services.cipher import (
    LAMBDA_KINDS,
    SBOX_KINDS,
    CipherSpec,
    Partition,
    SBoxTable,
    mixing_layer,
    sbox_layer,
    toy_spec,
)
from blocksys_app.services.gf2 import BitMatrix, Subspace, span

_TOY = re.compile(r"^toy:(\d+)x(\d+)(?::([a-z]+))?(?::([a-z]+))?$")


def _line_of_key(text: str, key: str) -> int | None:
    for lineno, line in enumerate(text.splitlines(), start=1):
        if f'"{key}"' in line:
            return lineno
    return None


def read_spec_file(path: str | Path) -> tuple[CipherSpecFile, str]:
    """Parses and validates a spec file; returns the model and the raw text."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    text = path.read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecParseError(e.msg, source=str(path), line=e.lineno, column=e.colno) from e
    if not isinstance(raw, dict):
        raise SpecParseError("top level must be an object", source=str(path), line=1)
    try:
        doc = CipherSpecFile.model_validate(raw)
    except ValidationError as e:
        err = e.errors()[0]
        loc = [str(p) for p in err["loc"]]
        key = loc[0] if loc else None
        raise SpecParseError(
            err["msg"],
            source=str(path),
            line=_line_of_key(text, key) if key else None,
            field=".".join(loc) or None,
        ) from e
    return doc, text


def build_cipher_spec(doc: CipherSpecFile, source: str = "<spec>", text: str = "") -> CipherSpec:
    """Turns a validated document into a CipherSpec, tagging failures with the field."""
    seed = config.settings.seed if doc.seed is None else doc.seed
    rng = np.random.default_rng(seed)

    def fail(field: str, exc: Exception) -> SpecParseError:
        return SpecParseError(str(exc), source=source, line=_line_of_key(text, field), field=field)

    try:
        partition = Partition(doc.n_t, doc.m)
    except BlocksysError as e:
        raise fail("n_t", e) from e

    try:
        if isinstance(doc.sboxes, str):
            sboxes = sbox_layer(doc.sboxes, partition, rng)
        else:
            if len(doc.sboxes) != doc.n_t:
                raise UsageError(f"expected {doc.n_t} tables, got {len(doc.sboxes)}")
            sboxes = tuple(SBoxTable(doc.m, tuple(t)) for t in doc.sboxes)
    except BlocksysError as e:
        raise fail("sboxes", e) from e

    try:
        if isinstance(doc.lambda_, str):
            if doc.lambda_ == "aes":
                if partition.n_b != 128:
                    raise UsageError("the aes mixing layer needs n_t=16 and m=8")
                lam = aes_lambda()
            else:
                lam = mixing_layer(doc.lambda_, partition, rng)
        else:
            if len(doc.lambda_) != partition.n_b:
                raise UsageError(f"expected {partition.n_b} rows, got {len(doc.lambda_)}")
            lam = BitMatrix.from_hex(doc.lambda_, partition.n_b)
        return CipherSpec(name=doc.name, partition=partition, sboxes=sboxes, lam=lam)
    except (BlocksysError, ValueError) as e:
        raise fail("lambda", e) from e


def planted_subspace(doc: CipherSpecFile, width: int, source: str = "<spec>") -> Subspace | None:
    if doc.planted_U is None:
        return None
    try:
        rows = [int(r, 16) for r in doc.planted_U]
        for r in rows:
            if r >> width:
                raise UsageError(f"row {r:#x} does not fit in {width} bits")
    except ValueError as e:
        raise SpecParseError(str(e), source=source, field="planted_U") from e
    return span(width, rows)


def load_spec(path: str | Path) -> tuple[CipherSpec, Subspace | None]:
    doc, text = read_spec_file(path)
    spec = build_cipher_spec(doc, str(path), text)
    logger.info(f"Loaded {spec.name} from {path} (n_t={spec.n_t}, m={spec.m})")
    return spec, planted_subspace(doc, spec.n_b, str(path))


def parse_preset(text: str, seed: int | None = None) -> CipherSpec:
    """``aes`` or ``toy:<n_t>x<m>[:<sbox>[:<lambda>]]``."""
    if text == "aes":
        return aes_spec()
    match = _TOY.match(text)
    if not match:
        raise UsageError(f"unknown preset {text!r}; expected 'aes' or 'toy:<n_t>x<m>:<sbox>:<lambda>'")
    n_t, m = int(match.group(1)), int(match.group(2))
    sbox_kind = match.group(3) or "inversion"
    lambda_kind = match.group(4) or "mixcolumns"
    if sbox_kind not in SBOX_KINDS:
        raise UsageError(f"unknown S-box kind {sbox_kind!r}; expected one of {', '.join(SBOX_KINDS)}")
    if lambda_kind not in LAMBDA_KINDS:
        raise UsageError(f"unknown mixing layer {lambda_kind!r}; expected one of {', '.join(LAMBDA_KINDS)}")
    return toy_spec(n_t, m, sbox_kind, lambda_kind, seed)


def dump_cipher_spec(spec: CipherSpec, planted: Subspace | None = None) -> str:
    """Explicit tables and hex rows; loading the result rebuilds the same cipher."""
    doc = CipherSpecFile(
        name=spec.name,
        n_t=spec.n_t,
        m=spec.m,
        sboxes=[list(s.table) for s in spec.sboxes],
        lambda_=spec.lam.to_hex_rows(),
        planted_U=planted.to_hex_rows() if planted is not None else None,
    )
    return doc.model_dump_json(by_alias=True, exclude_none=True, indent=2)


def save_cipher_spec(path: str | Path, spec: CipherSpec, planted: Subspace | None = None) -> None:
    Path(path).write_text(dump_cipher_spec(spec, planted) + "\n", encoding="utf-8")
    logger.info(f"Wrote {spec.name} to {path}")
