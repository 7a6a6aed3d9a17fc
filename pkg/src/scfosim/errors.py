"""Exception types raised by the library.

Every domain error derives from ScfoError so callers (and the CLI) can
distinguish domain failures (exit code 1) from usage errors (exit code 2).
"""


class ScfoError(Exception):
    """Base class for all domain errors."""


# rational clock math
class ZeroDenominator(ScfoError):
    pass


class NegativeFrequency(ScfoError):
    pass


class RatioOutOfRange(ScfoError):
    """Resampling ratio outside the +/-50% band the scheme assumes."""


# signal synthesis
class EmptyBand(ScfoError):
    pass


class UnknownAntenna(ScfoError):
    pass


# frontend
class BandZoneMismatch(ScfoError):
    pass


class AlreadyQuantized(ScfoError):
    pass


# filter / mixer design
class DesignInfeasible(ScfoError):
    pass


# resampler
class StreamTooShort(ScfoError):
    pass


class ChainWasQuantized(ScfoError):
    pass


# polyphase
class TapCountNotDivisible(ScfoError):
    pass


# correlator
class RateMismatch(ScfoError):
    pass


class InsufficientOverlap(ScfoError):
    pass


class EnvelopeRegimeViolated(ScfoError):
    pass


class InsufficientSamples(ScfoError):
    pass


# timing
class PulseTooNarrow(ScfoError):
    pass


class WindowTooShort(ScfoError):
    pass


# planning / scenarios
class Infeasible(ScfoError):
    pass


class ConfigInvalid(ScfoError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
