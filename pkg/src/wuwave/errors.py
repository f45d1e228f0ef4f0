"""Exception types raised by the toolkit."""


class WuWaveError(Exception):
    """Base class for all toolkit errors."""


class ChordArcViolation(WuWaveError):
    """The sampled curve fails the discrete chord-arc test."""

    def __init__(self, ratio, threshold):
        super().__init__(f"chord-arc ratio {ratio:.3e} below threshold {threshold}")
        self.ratio = ratio
        self.threshold = threshold


class NoConvergence(WuWaveError):
    """A fixed-point iteration hit its iteration cap."""


class BlowupDetected(WuWaveError):
    """An evolution left the admissible regime (chord-arc loss or norm explosion)."""

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class AmplitudeOutOfRange(WuWaveError):
    """Stokes amplitude outside the supported range."""


class NewtonDiverged(WuWaveError):
    """The Stokes Newton solver failed to reach its tolerance."""


class IncompatiblePeriod(WuWaveError):
    """Grid period is not an integer multiple of the required period."""


class NonMonotoneParametrization(WuWaveError):
    """Re(zeta) is not strictly increasing, so x(alpha) cannot be inverted."""


class NoUnstableMode(WuWaveError):
    """No integer mode lies in the modulationally unstable band."""


class OrthogonalityViolated(WuWaveError):
    """The envelope seed fails the orthogonality precondition."""
