"""Exception hierarchy shared by all modules."""


class QuadpropError(Exception):
    """Base class for library errors."""


class ValidationError(QuadpropError, ValueError):
    """Invalid input data (non-positive mass, malformed table, bad grid)."""


class DomainError(QuadpropError, ValueError):
    """Evaluation requested outside the working interval."""


class DegenerateBasisError(QuadpropError, ValueError):
    """Homogeneous solutions are linearly dependent."""


class AnchorError(QuadpropError, ValueError):
    """u vanishes at the anchor time, so the shifted basis is undefined."""


class CausticError(QuadpropError, ValueError):
    """v_s(t_b) = 0: t_b is a conjugate point of t_a and the kernel diverges."""

    def __init__(self, message, t_caustic=None):
        super().__init__(message)
        self.t_caustic = t_caustic


class NumericalError(QuadpropError, RuntimeError):
    """Integrator or quadrature failure."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t
