"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: config errors exit 2, precondition
violations exit 3, numerical failures exit 4.
"""


class ConfigError(Exception):
    """Malformed or inconsistent run configuration."""


class SpecValidationError(Exception):
    """A block-model specification violates its invariants."""


class PreconditionError(Exception):
    """An operation was called outside its stated preconditions."""


class NumericalError(Exception):
    """Non-finite values or divergence during computation."""
