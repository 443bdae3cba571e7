"""Exception and warning types raised by the simulator."""


class FmpsError(Exception):
    """Base class for simulator errors."""


class InvalidIntervalError(FmpsError, ValueError):
    pass


class TooFewPointsError(FmpsError, ValueError):
    pass


class NormalizationError(FmpsError, ValueError):
    """An input wavefunction is not normalized within tolerance."""


class NormLossError(FmpsError, RuntimeError):
    """A gate lost too much norm, usually because the bounding box is too small."""


class DiscretizationError(FmpsError, RuntimeError):
    """A moment estimate came out unphysical (e.g. negative variance)."""


class SvdFailure(FmpsError, RuntimeError):
    pass


class MemoryGuardError(FmpsError, MemoryError):
    """The dense oracle was asked to hold more amplitudes than allowed."""


class NonGaussianGateError(FmpsError, ValueError):
    pass


class AliasingWarning(UserWarning):
    """Sampling on a grid is likely too coarse for the represented function."""


class CircuitError(FmpsError, ValueError):
    """A circuit description is malformed or cannot be resolved."""


class SimulationError(FmpsError, RuntimeError):
    """A gate or measurement failed; the message names its circuit position."""
