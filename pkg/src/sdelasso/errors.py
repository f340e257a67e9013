"""Exception types shared across the package."""


class SdeLassoError(Exception):
    """Base class for package errors."""


class DomainError(SdeLassoError):
    """A state or parameter left the model's admissible region.

    Attributes:
        x: offending state value, if known.
        term: short description of the violated constraint.
        step_index: simulation step at which the path left the region
            (set by the simulator, otherwise None).
    """

    def __init__(self, message, x=None, term=None, step_index=None):
        super().__init__(message)
        self.x = x
        self.term = term
        self.step_index = step_index


class NonFiniteError(SdeLassoError):
    """A computed quantity came out NaN or infinite."""


class InvalidReductionError(SdeLassoError):
    """A reduction would remove the diffusion scale (degenerate diffusion)."""


class NotPositiveDefiniteError(SdeLassoError):
    """A matrix required to be positive definite is not."""


class ParseError(SdeLassoError):
    """Malformed input file.

    Attributes:
        line: 1-based line number of the first offending line, if known.
    """

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class GridError(SdeLassoError):
    """Observation times deviate from the declared uniform grid.

    Attributes:
        row: 1-based data row index of the first offending spacing.
    """

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class AllFailedError(SdeLassoError):
    """Every Monte Carlo replication failed."""


class DegenerateSampleError(SdeLassoError):
    """A sample is too small or too concentrated for a density estimate."""
