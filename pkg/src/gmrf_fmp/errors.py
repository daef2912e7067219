"""Exception and warning types shared across the package."""


class GmrfError(Exception):
    """Base class for all errors raised by this package."""


class ModelFormatError(GmrfError):
    """Malformed GGM text input. Carries the offending line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ModelValueError(GmrfError):
    """Structurally invalid model (bad indices, duplicate edges, non-positive diagonal)."""


class NotNormalizedError(GmrfError):
    """Operation requires a unit-diagonal model."""


class NotPositiveDefiniteError(GmrfError):
    """The precision matrix is not positive definite."""


class NotForestError(GmrfError):
    """Tree BP was given a graph that contains a cycle."""


class FvsValidationError(GmrfError):
    """A claimed feedback vertex set leaves a cycle behind. Carries one such cycle."""

    def __init__(self, message, cycle=()):
        super().__init__(message)
        self.cycle = tuple(cycle)


class LbpBreakdownError(GmrfError):
    """A message precision hit zero or went negative during loopy BP.

    Distinct from plain non-convergence: the iteration cannot continue.
    """

    def __init__(self, node, excluded, iteration):
        super().__init__(
            f"LBP breakdown: message precision at node {node} (excluding neighbor "
            f"{excluded}) is not positive at iteration {iteration}"
        )
        self.node = node
        self.excluded = excluded
        self.iteration = iteration


class FeedbackSystemError(GmrfError):
    """The k x k feedback system was not positive definite."""


class GenerationError(GmrfError):
    """Model generation could not satisfy the request (e.g. unreachable target rho)."""


class NumericsWarning(UserWarning):
    """Soft numerical issues: power iteration hit its cap, asymmetric feedback system."""
