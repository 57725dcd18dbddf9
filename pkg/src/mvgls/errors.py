"""Exception hierarchy shared by every module of the package."""


class MvglsError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(MvglsError, ValueError):
    pass


class DomainError(MvglsError, ValueError):
    pass


class NotPositiveDefinite(MvglsError, ArithmeticError):
    pass


class SingularMatrix(MvglsError, ArithmeticError):
    pass


class NoConvergence(MvglsError, ArithmeticError):
    pass


class SingularDesign(SingularMatrix):
    """The regressor Gram matrix cannot be inverted."""


class SingularGram(SingularMatrix):
    """The lagged-residual Gram matrix of a VAR fit cannot be inverted."""


class SingularRestriction(SingularMatrix):
    """``R M^-1 R'`` is not positive definite (or R is rank deficient)."""


class SingularCovariance(SingularMatrix):
    pass


class InsufficientSample(MvglsError, ValueError):
    pass


class NonStationaryVar(MvglsError, ArithmeticError):
    """The fitted VAR has a companion spectral radius of one or more."""


class NotCommonFactors(MvglsError, ValueError):
    pass


class AllReplicationsFailed(MvglsError, RuntimeError):
    pass
