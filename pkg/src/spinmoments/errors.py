"""Exception types raised across the package."""


class SpinMomentsError(Exception):
    """Base class for all package errors."""


class OutOfRange(SpinMomentsError, ValueError):
    pass


class NonHermitianInput(SpinMomentsError, ValueError):
    pass


class BadPartition(SpinMomentsError, ValueError):
    pass


class BadDirection(SpinMomentsError, ValueError):
    pass


class ShapeMismatch(SpinMomentsError, ValueError):
    pass


class BadArity(SpinMomentsError, ValueError):
    pass


class OddN(SpinMomentsError, ValueError):
    pass


class NotSymmetric(SpinMomentsError, ValueError):
    pass


class ComplexRoots(SpinMomentsError, ArithmeticError):
    """Moments are inconsistent with a real symmetric covariance matrix."""


class InsufficientDesignStrength(SpinMomentsError, ValueError):
    pass


class NoConvergence(SpinMomentsError, RuntimeError):
    pass


class TooFewShots(SpinMomentsError, ValueError):
    pass
