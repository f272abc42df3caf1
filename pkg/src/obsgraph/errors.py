"""Exception types raised across obsgraph."""


class ObsGraphError(ValueError):
    """Base class; the CLI maps every subclass to exit status 1."""


class InvalidSpecError(ObsGraphError):
    """A graph descriptor is malformed or has out-of-range parameters."""


class InvalidSetError(ObsGraphError):
    """A set descriptor is malformed or names vertices outside the graph."""


class InvalidInputError(ObsGraphError):
    """Numerical parameters violate an operation's preconditions."""


class ContractViolationError(ObsGraphError):
    """An input matrix breaks a structural contract (e.g. not Hermitian)."""
