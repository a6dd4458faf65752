"""Exception hierarchy shared by the library and the command line."""


class TorusSplinesError(Exception):
    pass


class ValidationError(TorusSplinesError, ValueError):
    """Malformed input: bad parameters, grammar violations, inconsistent shapes."""


class InvalidSpline(ValidationError):
    """Weights violate the annihilation system for the operator's null space."""


class InadmissibleMeasurement(ValidationError):
    """A functional that is not defined on the operator's native space."""


class SolverError(TorusSplinesError, RuntimeError):
    """Numerical failure: singular systems, non-finite data, broken step estimates."""
