"""Exception hierarchy shared by every shapx module."""

from __future__ import annotations


class ShapxError(Exception):
    """Base class for all errors raised by shapx."""


class SignatureError(ShapxError):
    """Model, distribution and instance disagree on features or domains."""


class CapacityError(ShapxError):
    """An exponential-cost path was requested beyond its configured cap."""


class ZeroProbabilityError(ShapxError):
    """Conditioning on an event of probability zero where that is undefined."""


class ModelFormatError(ShapxError):
    """A model, distribution or dataset file could not be parsed."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)


class StructureError(ShapxError):
    """A circuit or tree violates a structural invariant (decomposability, acyclicity, ...)."""


class PrecisionAuditError(ShapxError):
    """An interval enclosure straddles a decision boundary, so no answer is given."""


class ReductionMismatch(ShapxError):
    """Two independent computation paths disagreed."""
