"""
Errors - Exception and Warning Hierarchy

Every failure raised by spikelab derives from SpikelabError so that the CLI
can map it to an exit code:
- input validation failures also derive from ValueError
- numerical failures (quadrature, bracketing, divergence) do not
- soft conditions are warnings, mirrored as flags on the report objects
"""


class SpikelabError(Exception):
    """Base class for all spikelab errors."""


class NegativeProb(SpikelabError, ValueError):
    """A prior atom was given a negative probability."""


class EmptySupport(SpikelabError, ValueError):
    """A prior has no atom with positive mass."""


class NonFiniteValue(SpikelabError, ValueError):
    """An atom value or probability is NaN or infinite."""


class DomainError(SpikelabError, ValueError):
    """An argument lies outside the domain of the function."""


class BadWindow(SpikelabError, ValueError):
    """Coupling window incompatible with the chain length."""


class ConfigError(SpikelabError, ValueError):
    """Invalid run configuration (file line or field named in the message)."""


class QuadratureNotConverged(SpikelabError):
    """Doubling the Gauss-Hermite node count kept changing the result."""


class NoBracket(SpikelabError):
    """The threshold indicator does not change sign on the search interval."""


class NegativeSnr(SpikelabError):
    """An effective snr came out negative: the profile is not valid."""


class AmpDiverged(SpikelabError):
    """AMP left the region of sensible estimates.

    The partial trace is attached so that callers can still report it.
    """

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class TooLarge(SpikelabError):
    """Exhaustive enumeration would exceed the configuration budget."""


class NotDifferentiable(SpikelabError):
    """The output channel log-likelihood is not smooth at y = 0."""


class SpikelabWarning(UserWarning):
    """Base class for spikelab warnings."""


class AssumptionViolation(SpikelabWarning):
    """The potential has more than three stationary points."""


class AtTransition(SpikelabWarning):
    """Two minima of the potential are degenerate: the model sits at Δ_RS."""
