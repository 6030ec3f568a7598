"""Exception and warning types shared across the package."""


class InvalidArgument(ValueError):
    """A parameter lies outside the domain of an operation."""


class CutoffTooSmall(InvalidArgument):
    """The Fock cutoff cannot hold the result within the deficit bound.

    ``required`` carries the smallest cutoff estimated to satisfy the bound,
    or ``None`` when no estimate is available.
    """

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class NumericalGuardError(RuntimeError):
    """A conditioning or symmetry guard tripped during a computation."""


class TruncationWarning(UserWarning):
    """A constructed state lost more weight to the cutoff than recommended."""


class GridTooSmallWarning(UserWarning):
    """A characteristic function did not decay inside the sampled window."""
