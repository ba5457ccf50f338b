"""Exception types shared across the package."""


class HyperflowError(Exception):
    """Base class for all package-specific errors."""


class JetOrderError(HyperflowError):
    """A symbolic derivation needed a jet order above the configured cap."""


class DegenerateCurve(HyperflowError):
    """A discrete curve failed an immersion-type sanity check."""


class ResolutionExceeded(HyperflowError):
    """The requested derivative order or energy needs more vertices."""


class ConstantInput(HyperflowError):
    """Interpolation-inequality ratio undefined for constant samples."""


class StepTooSmall(HyperflowError):
    """Finite-difference gradient dominated by floating-point rounding."""


class StepFailure(HyperflowError):
    """Flow step rejected even after exhausting time-step halvings."""


class NotCritical(HyperflowError):
    """Second-variation assembly requested away from a critical point."""


class OutOfTubularNeighborhood(HyperflowError):
    """Height-function extraction outside the reach of the base curve."""


class InsufficientDecay(HyperflowError):
    """Trace does not span enough energy decades for exponent fitting."""


class ConfigError(HyperflowError):
    """Invalid or unknown key in a flow configuration."""
