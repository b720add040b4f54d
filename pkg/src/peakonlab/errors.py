class PeakonlabError(Exception):
    """Base class for all errors raised by peakonlab."""


class OutOfSpan(PeakonlabError, ValueError):
    pass


class CollisionImminent(PeakonlabError):
    """Two peakons are closer than the configured gap floor."""

    def __init__(self, message, pair=None, gap=None):
        super().__init__(message)
        self.pair = pair
        self.gap = gap


class SlopeMismatch(PeakonlabError, ValueError):
    """Left and right slopes differ at a characteristic's starting point."""

    def __init__(self, message, left=None, right=None):
        super().__init__(message)
        self.left = left
        self.right = right


class ArgumentOutOfRange(PeakonlabError, ValueError):
    pass


class VFloorViolated(PeakonlabError, ValueError):
    pass


class WindowInverted(PeakonlabError, ValueError):
    pass


class InsufficientSamples(PeakonlabError, ValueError):
    pass


class NonCauchy(PeakonlabError):
    """Successive differences of an approach sequence fail to decay."""


class RegimeViolated(PeakonlabError, ValueError):
    pass
