"""Exception hierarchy shared by all modules."""


class AnomalKPPError(Exception):
    """Base class for errors raised by this package."""


class InvalidParameters(AnomalKPPError, ValueError):
    pass


class NotApplicable(AnomalKPPError):
    """A closed-form quantity is undefined for the given parameters."""


class OutOfRegime(AnomalKPPError, ValueError):
    pass


class SubcriticalSpeed(AnomalKPPError, ValueError):
    pass


class NonMonotone(AnomalKPPError):
    pass


class StrongDecayOrbit(AnomalKPPError):
    """The computed front decays at the strong rate instead of the weak one."""


class ExpansionViolated(AnomalKPPError):
    pass


class QuadratureFailure(AnomalKPPError):
    pass


class NoBracket(AnomalKPPError):
    pass


class NotFoundWithinHorizon(AnomalKPPError):
    pass


class NonpositiveD(AnomalKPPError):
    pass


class CUTooSmall(AnomalKPPError, ValueError):
    pass


class DataOutOfRange(AnomalKPPError, ValueError):
    pass


class StabilityViolation(AnomalKPPError):
    pass


class NotCrossed(AnomalKPPError):
    pass


class WindowClipped(AnomalKPPError):
    pass


class InsufficientSamples(AnomalKPPError, ValueError):
    pass
