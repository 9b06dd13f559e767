"""Exception hierarchy.

Exit-code mapping used by the CLI: validation/config problems -> 2,
resource caps -> 3, numeric failures -> 4.
"""


class TransferLabError(Exception):
    """Base class for all library errors."""


class DomainError(TransferLabError, ValueError):
    """An argument is outside the mathematical domain of the operation."""


class ValidationError(TransferLabError, ValueError):
    """Input data violates a structural invariant (bad map, bad config)."""


class UnsupportedVariantError(ValidationError):
    """Operation requires a different map variant (e.g. exact path on a smooth map)."""


class ResourceError(TransferLabError, RuntimeError):
    """A configured cap (cylinder count, matrix dimension) would be exceeded."""


class NumericError(TransferLabError, RuntimeError):
    """A numerical routine failed to converge or returned garbage."""


class ClassificationError(TransferLabError, RuntimeError):
    """Fitted homogeneity degree falls outside the admissible window (-1, 0]."""


class ProbeError(TransferLabError, RuntimeError):
    """A black-box norm returned a non-finite value during a homogeneity probe."""

    def __init__(self, message: str, scale=None):
        super().__init__(message)
        self.scale = scale
