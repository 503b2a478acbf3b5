"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: configuration problems exit 2,
numeric/domain problems exit 3, inequality violations exit 4, solver
instability exit 5.
"""


class LandaulabError(Exception):
    """Base class for all package errors."""


class ConfigError(LandaulabError):
    """Malformed or contradictory run configuration."""


class DomainError(LandaulabError):
    """Evaluation requested outside a distribution's domain."""


class NumericError(LandaulabError):
    """Non-finite or divergent value met during a computation."""


class DegenerateInputError(LandaulabError):
    """Input distribution too degenerate for the requested operation."""


class SaturationError(LandaulabError):
    """Quantum parameter too large: the Fermi-Dirac moment system has no solution."""


class PauliViolationError(LandaulabError):
    """eps * f reached 1 somewhere, violating the exclusion constraint."""


class PreconditionError(LandaulabError):
    """Operation called on a state that misses a documented precondition."""


class InstabilityError(LandaulabError):
    """Time integration produced an inadmissible state.

    Carries the last admissible state so a run can be diagnosed.
    """

    def __init__(self, message, time=None, last_good=None):
        super().__init__(message)
        self.time = time
        self.last_good = last_good
