"""Exception hierarchy shared by all modules."""


class FloquetError(Exception):
    """Base class for every error raised by :mod:`pwfloquet`."""


class InvalidDegreeError(FloquetError, ValueError):
    pass


class QuadratureError(FloquetError):
    """Adaptive quadrature did not reach the requested tolerance."""


class MeshError(FloquetError, ValueError):
    pass


class MeshMismatchError(MeshError):
    """Explicit partition does not start at 0 or end at the horizon."""


class DelayTooSmallError(MeshError):
    pass


class DomainError(FloquetError, ValueError):
    """Evaluation point outside the admissible interval."""


class ValidationError(FloquetError, ValueError):
    """A delay system or solution fixture violates its invariants."""


class AssemblyError(FloquetError):
    """A coefficient returned a non-finite or mis-shaped value during assembly."""


class SingularFixedPointError(FloquetError):
    pass


class EigenError(FloquetError):
    pass


class NoBracketError(FloquetError):
    """The expanding search found no sign change of the test function."""


class ExprSyntaxError(FloquetError, ValueError):
    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class ExprBindError(FloquetError, ValueError):
    """An expression references something not available at evaluation time."""


class ConfigError(FloquetError, ValueError):
    pass
