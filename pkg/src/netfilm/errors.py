"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: configuration problems exit 2,
numerical failures exit 3, I/O failures exit 4.
"""


class GraphError(ValueError):
    """Invalid network description (bad endpoints, disconnected, ...)."""


class GridError(ValueError):
    """Invalid discretization request (too few cells, unknown edge, ...)."""


class ConfigError(ValueError):
    """Config file cannot be parsed or violates the schema."""


class StepFailure(Exception):
    """A single implicit step could not be completed; the step may be retried
    with a smaller dt (linear solve breakdown, residual not reducible)."""


class NumericalError(RuntimeError):
    """Unrecoverable numerical failure (NaN/Inf state, step-size underflow)."""
