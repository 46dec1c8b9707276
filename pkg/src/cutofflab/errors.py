"""Exception hierarchy shared across the package.

Invalid-input errors map to CLI exit code 1, numerical failures to exit
code 2.
"""


class CutoffLabError(Exception):
    """Base class for all package errors."""


class InvalidInput(CutoffLabError):
    """A parameter violates a documented precondition."""


class NumericalFailure(CutoffLabError):
    """A numerical routine could not produce a trustworthy result."""


class DomainError(InvalidInput):
    """The requested evaluation point or grid is outside the valid domain."""


class SolverFailure(NumericalFailure):
    """An eigensolve or root search did not converge or failed sanity checks."""


class CapabilityError(NumericalFailure):
    """No available backend can compute the requested quantity."""


class DegenerateZeroError(CutoffLabError):
    """Centered initial datum with no even mode: the distance is identically zero."""


class StiffnessError(NumericalFailure):
    """Adaptive ODE stepping underflowed the minimum step size."""
