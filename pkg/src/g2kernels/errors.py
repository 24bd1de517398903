"""Exception hierarchy shared by every module of the workbench."""


class DomainError(ValueError):
    """An argument lies outside the domain where an operation is defined."""


class NotInG2Error(DomainError):
    """A point of C^2 is not in the symmetrized bidisc."""


class NumericalError(ArithmeticError):
    """A numerical procedure could not meet its accuracy contract."""


class CancellationError(NumericalError):
    """Catastrophic cancellation between two nearly equal terms."""


class NonConvergenceError(NumericalError):
    """A series or iteration hit its cap before converging."""


class BranchTrackingError(NumericalError):
    """Continuation of a logarithm along a path failed to resolve the winding."""


class UnsupportedPowerError(DomainError):
    """A real power was requested for a kernel not known to be non-vanishing."""


class SingularJacobianError(DomainError):
    """A chart change is singular (the bidisc chart on the royal variety)."""
