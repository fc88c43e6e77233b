"""Exception types shared across the package.

The CLI maps each family to a distinct exit code, so solver and data code
should raise these rather than bare ValueError where the distinction
matters to a caller.
"""


class SteppathError(Exception):
    """Base class for all package-specific errors."""


class InvalidWeightsError(SteppathError):
    """Step weights are negative, empty where they must not be, or malformed."""


class BudgetExceededError(SteppathError):
    """An exhaustive search would exceed the configured enumeration budget."""


class NumericalFailureError(SteppathError):
    """A linear solve failed even after the ridge fallback."""


class DataError(SteppathError):
    """Input data is unusable (missing file, bad target, too few rows...)."""


class ConstantColumnError(DataError):
    """A feature (or the target) has zero variance and cannot be standardized."""


class ConfigError(SteppathError):
    """Mutually inconsistent or out-of-range run configuration."""
