"""Exception and warning types raised across the package."""


class WkamError(Exception):
    """Base class for solver errors (CLI exit code 3)."""


class ProfileNotConvex(WkamError, ValueError):
    pass


class NewtonDivergence(WkamError):
    pass


class ShapeMismatch(WkamError, ValueError):
    pass


class SliceMismatch(WkamError, ValueError):
    pass


class NonFiniteKernel(WkamError, ValueError):
    pass


class NonConvergence(WkamError):
    pass


class NoConvergence(WkamError):
    """Fixed-point iteration did not reach its tolerance; carries the residual history."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class WrapMismatch(WkamError):
    pass


class WindowNotSettled(WkamError):
    pass


class EmptyMask(WkamError):
    pass


class StepRejected(WkamError):
    pass


class ConfigInvalid(Exception):
    """Scenario configuration failed validation (CLI exit code 2)."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class BoundaryArgmin(UserWarning):
    """A minimising velocity sits on the edge of the velocity lattice."""
