"""Exception hierarchy shared by every module."""

import numpy as np


class SympocpError(Exception):
    """Base class for all library errors."""


class ModelError(SympocpError, ValueError):
    """Inconsistent problem data: bad dimensions, non-symmetric or indefinite matrices."""


class RegularityError(SympocpError):
    """A matrix that has to be invertible (control Hessian, mixed generating-function block) is not.

    The offending matrix is kept on the exception for inspection.
    """

    def __init__(self, message, matrix=None):
        super().__init__(message)
        self.matrix = None if matrix is None else np.array(matrix)


class ConvergenceError(SympocpError):
    """An iterative solve ran out of iterations or stalled."""

    def __init__(self, message, residual=np.inf, history=()):
        super().__init__(message)
        self.residual = float(residual)
        self.history = list(history)


class StepError(ConvergenceError):
    """A one-step map failed. ``index`` is the step that failed, ``partial`` the trajectory so far."""

    def __init__(self, message, residual=np.inf, history=(), index=None, partial=None):
        super().__init__(message, residual, history)
        self.index = index
        self.partial = partial


class VerificationError(SympocpError):
    """A verification routine could not be evaluated (e.g. a step failed on a stencil point)."""


class SingularStepError(StepError, RegularityError):
    """A one-step map hit a singular regularity matrix; carries the matrix like :class:`RegularityError`."""

    def __init__(self, message, matrix=None, index=None):
        StepError.__init__(self, message, index=index)
        self.matrix = None if matrix is None else np.array(matrix)
