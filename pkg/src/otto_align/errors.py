"""Exception types shared across the toolkit."""

from __future__ import annotations


class OttoAlignError(Exception):
    """Base class for all toolkit errors."""


class RecordError(OttoAlignError):
    """A record failed validation; carries enough context to report it."""

    def __init__(self, message: str, *, pair_id: str | None = None, line: int | None = None):
        self.pair_id = pair_id
        self.line = line
        prefix = []
        if line is not None:
            prefix.append(f"line {line}")
        if pair_id is not None:
            prefix.append(f"pair {pair_id!r}")
        super().__init__((": ".join([", ".join(prefix), message]) if prefix else message))


class ParseError(RecordError):
    """Malformed record file content."""


class DimensionMismatch(RecordError):
    """Embedding dimensionality disagrees where it must match."""


class ZeroNormWord(RecordError):
    """A word vector has (near-)zero norm; cosine distance is undefined."""


class MappingGap(RecordError):
    """Some word index receives no tokens in a token-to-word mapping."""


class InfeasibleMass(OttoAlignError):
    """Requested partial-transport mass violates the marginal budget."""


class NumericalUnderflow(OttoAlignError):
    """Unstabilized Sinkhorn scaling collapsed to zero/inf."""


class TooLarge(OttoAlignError):
    """Problem exceeds the size cap of the exact oracle."""


class DegenerateLabels(OttoAlignError):
    """A ranking metric was requested on single-class data."""


class JoinMismatch(OttoAlignError):
    """Prediction and gold files could not be joined one-to-one."""

    def __init__(self, message: str, missing: list[str] | None = None):
        self.missing = missing or []
        super().__init__(message)
