"""Exception taxonomy shared by the library and the CLI.

Exit-code mapping used by the CLI: input problems -> 1, domain errors -> 2,
violated theorem conditions -> 3, anything else -> 4.
"""


class CrpError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 4


class ModelError(CrpError):
    """Malformed model input: bad field, bad mass, bad support."""

    exit_code = 1


class DomainError(CrpError):
    """Argument outside the finiteness/analyticity domain of a function.

    Optional attributes ``lower`` and ``upper`` carry the computed boundary
    of the open interval that was violated.
    """

    exit_code = 2

    def __init__(self, message, lower=None, upper=None):
        super().__init__(message)
        self.lower = lower
        self.upper = upper


class ConditionError(CrpError):
    """A structural condition of one of the limit theorems fails.

    ``condition`` is a short machine-readable label, e.g. ``"[Z]"`` for the
    arithmetic support condition or ``"admissible-heterogeneity"`` for the
    first-jump transform being finite at the tilt point.
    """

    exit_code = 3

    def __init__(self, message, condition):
        super().__init__(message)
        self.condition = condition


class DivergenceError(ConditionError):
    """The prefactor series over waiting-time survivals diverges.

    Raised when the tilt exponent reaches the radius of convergence of the
    waiting-time transform, i.e. the target slope falls in the excluded
    interval [beta-, beta+].
    """

    def __init__(self, message, beta_minus=None, beta_plus=None):
        super().__init__(message, condition="beta-interval")
        self.beta_minus = beta_minus
        self.beta_plus = beta_plus
