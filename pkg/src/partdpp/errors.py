"""Exception types raised by partdpp.

Input problems derive from ``ValueError``. Numerical breakdowns derive from
``ArithmeticError``. The CLI maps these two families to exit codes 2 and 3.
"""


class DPPError(Exception):
    """Base class for every error raised by this package."""


class InputError(DPPError, ValueError):
    pass


class NumericalError(DPPError, ArithmeticError):
    pass


class NotPSD(InputError):
    """Kernel has an eigenvalue below ``-tol * lambda_max``."""


class InvalidPartition(InputError):
    pass


class IndexOutOfRange(InputError, IndexError):
    pass


class TooLarge(InputError):
    """Brute-force enumeration would exceed the instance-size guard."""


class ZeroRow(NumericalError):
    """Projection direction has (numerically) zero norm."""


class InterpolationResidual(NumericalError):
    """Recovered coefficients carry a non-negligible imaginary part."""


class RankTooLow(NumericalError):
    pass


class EmptySupport(NumericalError):
    """No subset satisfying the constraints has positive determinant."""


class DeadEnd(NumericalError):
    """Every step probability vanished in the middle of a draw."""
