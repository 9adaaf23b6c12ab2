"""Exception types raised across the package."""


class HitSeriesError(Exception):
    """Base class for all package errors."""


class GridMismatch(HitSeriesError, ValueError):
    pass


class NotAContraction(HitSeriesError, ValueError):
    """Raised when ``I - A*A`` has an eigenvalue below the clamping window."""


class BetaOutOfRange(HitSeriesError, ValueError):
    pass


class NonOrthonormalBasis(HitSeriesError, ValueError):
    pass


class StartOutsideDomain(HitSeriesError, ValueError):
    pass


class OrderTooLarge(HitSeriesError, ValueError):
    pass


class PecletViolation(HitSeriesError, ValueError):
    """Centered advection would lose monotonicity on the given grid."""


class LadderConditioningError(HitSeriesError, ValueError):
    pass


class QuadratureBlowUp(HitSeriesError, ArithmeticError):
    """Chaos coefficients exceed the second-moment budget of an indicator."""


class ConfigError(HitSeriesError, ValueError):
    pass
