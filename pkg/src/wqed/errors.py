"""Exception types raised by the simulator."""


class WQEDError(Exception):
    """Base class for all simulator errors."""


class ParameterError(WQEDError, ValueError):
    pass


class ResonantDenominator(WQEDError):
    """Schrieffer-Wolff energy denominator U^2 - (eps_{j+1} - eps_j)^2 vanishes."""


class ConvergenceFailure(WQEDError):
    pass


class NearDefective(WQEDError):
    """Right-eigenvector matrix is too ill-conditioned (close to an exceptional point)."""


class PoleProximity(WQEDError):
    pass


class DegenerateEigenvalue(WQEDError):
    pass


class NumericalCancellationLoss(WQEDError):
    pass


class IntegrationFailure(WQEDError):
    pass


class InsufficientDecay(WQEDError):
    pass


class ProbabilityOutOfRange(WQEDError):
    pass


class ConfigError(WQEDError):
    pass
