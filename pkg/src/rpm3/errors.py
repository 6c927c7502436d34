"""Exception types shared across the package."""


class Rpm3Error(Exception):
    """Base class for all errors raised by this package."""


class ZeroInverse(Rpm3Error):
    """Multiplicative inverse of zero requested."""


class DimensionMismatch(Rpm3Error):
    """Matrix shapes (or moduli) incompatible for the requested operation."""


class DuplicateNode(Rpm3Error):
    """Interpolation nodes collide."""


class DuplicateAbscissa(Rpm3Error):
    """Sample x-coordinates collide."""


class InsufficientSamples(Rpm3Error):
    """Fewer samples than degree_bound + 1."""


class InconsistentSamples(Rpm3Error):
    """Extra samples disagree with the interpolated polynomial."""


class IndexOutOfRange(Rpm3Error):
    """Block index outside the declared partition."""


class InconsistentPacket(Rpm3Error):
    """A fully reduced packet has a nonzero residual."""


class TooFewWorkers(Rpm3Error):
    """Worker pool cannot satisfy the privacy/decodability constraints."""


class PlanViolation(Rpm3Error):
    """Worker referenced outside the frozen cluster plan."""


class MissingSharedEvals(Rpm3Error):
    """Cluster u >= 2 asked to decode before the round's shared values exist."""


class Timeout(Rpm3Error):
    """Event budget exceeded; guards non-termination."""


class EmptyQueue(Rpm3Error):
    """Pop from an empty event queue."""


class Infeasible(Rpm3Error):
    """No parameter choice satisfies the scheme's constraints."""


class RegimeViolation(Rpm3Error):
    """Collusion parameter outside the scheme's validity regime."""


class ModelUnsupported(Rpm3Error):
    """Service-time model not supported by the requested scheme."""


class ConventionViolation(Rpm3Error):
    """Inputs break the shift/rate coupling a bound assumes."""


class PrecisionLoss(Rpm3Error):
    """Numerical evaluation failed to reach the requested tolerance."""


class InsufficientShares(Rpm3Error):
    """Fewer shares than needed to reconstruct the masks."""


class InstanceTooLarge(Rpm3Error):
    """Audit instance exceeds the exhaustive-enumeration cap."""


class ConfigError(Rpm3Error):
    """Invalid experiment configuration.

    ``field`` carries a dotted path to the offending entry when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
