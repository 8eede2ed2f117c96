"""Exception types raised across the package."""


class SubIdError(Exception):
    """Base class for all errors raised by subid."""


class DimensionError(SubIdError, ValueError):
    pass


class NonPhysicalParameters(SubIdError, ValueError):
    pass


class NonConvergence(SubIdError, RuntimeError):
    """The Riccati fixed-point iteration did not reach the requested defect."""


class SingularInnovation(SubIdError, ArithmeticError):
    """C P C^T + R could not be Cholesky-factored."""


class UnstableClosedLoop(SubIdError, ArithmeticError):
    """Spectral radius of A - K C is not below one."""


class SingularGram(SubIdError, ArithmeticError):
    """Y_p Y_p^T is numerically singular (too few trajectories or no excitation)."""


class RankDeficient(SubIdError, ArithmeticError):
    """A retained singular value is at or below tolerance; the order is too large."""


class IllConditionedShift(SubIdError, ArithmeticError):
    """The upper block of the observability estimate is rank deficient."""


class ThresholdUnmet(SubIdError, ValueError):
    """N is below the sample-size threshold required for a bound to apply."""


class ConfigError(SubIdError, ValueError):
    pass


class DegenerateAlignment(UserWarning):
    """Warning: the Procrustes cross product is rank deficient, so U is not unique."""
