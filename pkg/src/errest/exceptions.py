"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit 2, I/O
problems exit 3, and numeric/estimation failures exit 4.
"""


class InvalidSpecError(ValueError):
    """A model, kernel, or run specification violates its invariants."""


class InsufficientClassDataError(ValueError):
    """An operation needs more points of some class than the dataset has."""


class UnsupportedOperationError(RuntimeError):
    """The classifier does not support the requested operation."""


class EstimationFailedError(RuntimeError):
    """An error estimator could not produce a value (e.g. every bootstrap
    replicate had an empty out-of-bag set)."""
