"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An argument violates an operation's precondition."""


class DetectorError(RuntimeError):
    """An external detector failed: bad exit status, bad output, or IO failure."""
