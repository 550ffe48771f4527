"""Exception types shared across the package."""

__all__ = ["SchemaError", "ValidationError", "NearDefectiveError", "NonFiniteError"]


class SchemaError(ValueError):
    """A config document is structurally invalid: missing or ill-typed field.

    ``path`` locates the offending field, e.g. ``dynamics[1].terms[0].coef``.
    """

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class ValidationError(ValueError):
    """A config parsed cleanly but violates a semantic invariant."""


class NearDefectiveError(ArithmeticError):
    """The eigenvector matrix is too ill-conditioned for spectral propagation."""


class NonFiniteError(ArithmeticError):
    """A numeric stage produced or detected non-finite values."""
