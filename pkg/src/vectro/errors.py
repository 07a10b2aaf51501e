"""Exception hierarchy shared by every vectro module.

The CLI maps these onto exit codes: ``ValidationError`` -> 2,
``NumericError`` -> 3, anything else derived from ``VectroError`` -> 1.
"""

from __future__ import annotations


class VectroError(Exception):
    """Base class for all library errors."""


class ValidationError(VectroError, ValueError):
    """Invalid input, violated precondition or violated bound."""


class NumericError(VectroError, ArithmeticError):
    """A numerical routine failed (non-convergence, factorization, blow-up)."""


class ConvergenceError(NumericError):
    """Iterative solver stopped before reaching its tolerance.

    The best iterate found so far is kept on ``best`` so callers can decide
    whether it is good enough for their purpose.
    """

    def __init__(self, message: str, best=None, grad_norm: float = float("nan"),
                 iterations: int = 0):
        super().__init__(message)
        self.best = best
        self.grad_norm = grad_norm
        self.iterations = iterations


class TrajectoryError(NumericError):
    """ODE tracing left the optimality manifold and could not be repaired."""


class ModelFormatError(VectroError, ValueError):
    """Base class for model-file decoding failures."""


class BadMagicError(ModelFormatError):
    pass


class UnsupportedVersionError(ModelFormatError):
    pass


class TruncatedFileError(ModelFormatError):
    pass


class DimensionMismatchError(ModelFormatError):
    pass
