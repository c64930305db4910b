"""Exception types shared across the package."""


class SmgaugeError(Exception):
    """Base class for all package errors."""


class DomainError(SmgaugeError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class GridMismatchError(SmgaugeError, ValueError):
    """Two fields that must share a grid (or an angular order) do not."""


class UnsupportedTargetError(SmgaugeError, ValueError):
    """The sphere target (mu = +1) was requested where only the
    hyperbolic branch is implemented."""


class ConvergenceError(SmgaugeError, RuntimeError):
    """An iteration failed to converge.  Carries the last residual."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual={residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class FrameInstabilityError(SmgaugeError, RuntimeError):
    """Frame integration drifted off the orthonormality constraints;
    usually cured by a finer grid."""


class InvalidMapError(SmgaugeError, ValueError):
    """A map profile does not lie on the target manifold or violates the
    boundary condition at the outer radius."""


class NanAbort(SmgaugeError, RuntimeError):
    """A non-finite value appeared during time stepping."""

    def __init__(self, t: float, where: str, node: int):
        super().__init__(f"non-finite value at t={t:.6g} in {where} (first offending node {node})")
        self.t = t
        self.where = where
        self.node = node


class ConfigError(SmgaugeError, ValueError):
    """A run configuration failed validation."""
