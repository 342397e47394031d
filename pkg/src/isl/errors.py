"""Exception hierarchy shared by all modules."""


class IslError(Exception):
    """Base class for failures raised by this package."""


class DomainError(IslError, ValueError):
    """Evaluation requested at or too near a singular point of a formula."""


class GeometryError(IslError, ValueError):
    """A path or configuration violates a clearance or distinctness requirement."""


class IntegrationError(IslError, RuntimeError):
    """The adaptive integrator could not reach the end of a path."""

    def __init__(self, message, status=None, s_reached=None):
        super().__init__(message)
        self.status = status
        self.s_reached = s_reached


class PreconditionError(IslError, ValueError):
    """Input data do not satisfy the hypotheses of the requested check."""


class DegreeCollapse(IslError, ArithmeticError):
    """Leading coefficient of a polynomial vanished to working precision."""


class RepresentationError(IslError, ValueError):
    """Parameters fall outside the validity region of a series or integral."""


class ConfigError(IslError, ValueError):
    """Malformed experiment configuration; ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
