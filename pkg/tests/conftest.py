# tests/conftest.py
"""
Pytest fixtures for blocksys.

- `run_cli()` runs `python -m blocksys_app.cli ...` with the SAME interpreter
  pytest is using, with `src/` on PYTHONPATH.
- `assert_ok()` fails with the captured stdout/stderr of a CLI run.
- Field and cipher fixtures for the small instances used across test modules.
"""

from __future__ import annotations

import os
import subprocess
import sys
from collections.abc import Mapping
from pathlib import Path

import numpy as np
import pytest

from blocksys_app.services.cipher import CipherSpec, toy_spec
from blocksys_app.services.gf2m import FieldSpec

PROJECT_ROOT = Path(__file__).parent.parent


# Helper to assert subprocess success
def assert_ok(proc, *, msg: str | None = None, code: int = 0):
    if proc is None:
        raise AssertionError("Subprocess result is None. The CLI may have failed to launch.")
    if proc.returncode != code:
        details = (
            (msg + "\n") if msg else ""
        ) + f"Exit code: {proc.returncode} (expected {code})\n--- STDOUT ---\n{proc.stdout}\n--- STDERR ---\n{proc.stderr}"
        raise AssertionError(details)


def _merge_env(extra: Mapping[str, str] | None = None) -> dict[str, str]:
    """Return a copy of os.environ with optional overrides."""
    env = os.environ.copy()
    if extra:
        env.update(extra)
    return env


@pytest.fixture
def run_cli():
    """
    Run the CLI as a Python module to avoid PATH/console-script issues.

    Example:
        res = run_cli("analyze", "--preset", "aes")
        assert res.returncode == 0, res.stderr
    """
    def _runner(
        *args: str,
        module: str = "blocksys_app.cli",
        cwd: Path | None = None,
        env: Mapping[str, str] | None = None,
        timeout: float | None = 300,
        check: bool = False,
    ) -> subprocess.CompletedProcess[str]:
        cmd: list[str] = [sys.executable, "-m", module, *args]
        merged_env = _merge_env(env)
        # Ensure PYTHONPATH includes src directory
        src_path = str(PROJECT_ROOT / "src")
        merged_env["PYTHONPATH"] = src_path + os.pathsep + merged_env.get("PYTHONPATH", "")
        result = subprocess.run(
            cmd,
            cwd=str(cwd) if cwd else None,
            env=merged_env,
            capture_output=True,
            text=True,
            timeout=timeout,
            check=False,  # we raise manually so we can include stdout on failure
        )
        if check and result.returncode != 0:
            raise AssertionError(
                f"CLI exited with {result.returncode}\n"
                f"CMD: {' '.join(cmd)}\n"
                f"--- STDOUT ---\n{result.stdout}\n"
                f"--- STDERR ---\n{result.stderr}\n"
            )
        return result
    return _runner


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def gf8() -> FieldSpec:
    return FieldSpec(3, 0b1011)


@pytest.fixture
def gf4() -> FieldSpec:
    return FieldSpec(2, 0b111)


@pytest.fixture
def gf16() -> FieldSpec:
    return FieldSpec(4, 0b10011)


@pytest.fixture
def gf256() -> FieldSpec:
    return FieldSpec(8, 0x11B)


@pytest.fixture(scope="session")
def primitive_toy() -> CipherSpec:
    """Two GF(2^5) inversion S-boxes with the 2-block MixColumns analogue; certified primitive."""
    return toy_spec(2, 5, "inversion", "mixcolumns")


@pytest.fixture(scope="session")
def identity_toy() -> CipherSpec:
    return toy_spec(2, 2, "identity", "identity")
