# src/blocksys_app/errors.py
from __future__ import annotations


class BlocksysError(ValueError):
    """Base class for every error raised by the analyses."""


class UsageError(BlocksysError):
    """Raised when an operation is called outside its preconditions."""


class SingularMatrixError(BlocksysError):
    """Raised when inverting a matrix that has no inverse over GF(2)."""


class EnumerationTooLargeError(BlocksysError):
    """Raised when an enumeration would exceed the configured budget."""


class NotAPermutationError(BlocksysError):
    """Raised when an S-box table is not a bijection."""


class ReducibleModulusError(BlocksysError):
    """Raised when a field modulus is reducible or has the wrong degree."""


class InconsistentOracleError(BlocksysError):
    """Raised when no key reproduces every known plaintext/ciphertext pair."""


class SpecParseError(BlocksysError):
    """Raised for a malformed cipher-spec file; carries position diagnostics."""

    def __init__(
        self,
        message: str,
        *,
        source: str | None = None,
        line: int | None = None,
        column: int | None = None,
        field: str | None = None,
    ) -> None:
        self.source = source
        self.line = line
        self.column = column
        self.field = field
        where = []
        if source:
            where.append(source)
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if field:
            where.append(f"field {field!r}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
