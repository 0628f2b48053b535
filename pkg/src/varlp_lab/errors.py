"""Exception hierarchy shared by every module."""


class VarlpError(Exception):
    """Base class for all varlp-lab errors."""


class DomainError(VarlpError, ValueError):
    """A point or parameter lies outside the domain of an operation."""


class InvalidExponentError(VarlpError, ValueError):
    """Exponent violates 1 < p_- <= p_+ < inf."""


class ShapeError(VarlpError, ValueError):
    """Grid shapes or dimensions are incompatible."""


class AlignmentError(VarlpError, ValueError):
    """A measure or cube is not aligned with the cell grid."""


class FamilyError(VarlpError, ValueError):
    """A cube family is not pairwise disjoint."""


class PreconditionError(VarlpError, ValueError):
    """An argument violates a documented precondition."""


class ConvergenceError(VarlpError, ArithmeticError):
    """An iterative solver failed to converge.

    The ``diagnostics`` attribute holds the solver state at failure.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
