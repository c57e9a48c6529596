"""Exception types shared across the package."""


class GraphInputError(ValueError):
    """Malformed graph data: dangling references, duplicate edges, bad names."""


class CapacityError(RuntimeError):
    """A size guard was exceeded (node caps, canonicalization bounds)."""


class DegeneracyError(ArithmeticError):
    """A divisor or determinant fell below tolerance; input is non-generic."""


class InconsistentCovarianceError(ArithmeticError):
    """The covariance matrix is not consistent with the model structure."""


class FitFailureError(RuntimeError):
    """Numeric block fit did not converge below tolerance from any start."""


class UnsolvedColumnError(RuntimeError):
    """A computation required loading-matrix columns that are not solved yet."""
