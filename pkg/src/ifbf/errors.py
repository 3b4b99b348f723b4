"""Exception types shared by the solvers."""


class DimensionError(ValueError):
    """Operands live in spaces of different dimension or block signature."""


class ParameterError(ValueError):
    """Algorithm parameters violate an admissibility condition.

    ``index`` is the iteration at which a lazily checked schedule failed,
    or ``None`` when the violation was detected before iterating.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NonFiniteError(FloatingPointError):
    """A NaN or infinite value entered the iteration."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index
