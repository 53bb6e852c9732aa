"""Exception taxonomy.

Everything raised on purpose derives from CovertIdError so the CLI can map
failures to exit codes: bad config or artifact input -> 2, blown enumeration
or allocation budget -> 3, violated mathematical assumptions -> 4.
"""


class CovertIdError(Exception):
    """Base class for all deliberate failures."""


class AssumptionViolated(CovertIdError):
    """A mathematical precondition does not hold for the given inputs."""


class AlphabetMismatch(AssumptionViolated):
    """Two distributions that must share an alphabet have different sizes."""


class AbsoluteContinuityViolated(AssumptionViolated):
    """P puts mass where Q does not (P << Q required)."""


class BlocklengthTooSmall(AssumptionViolated):
    """n is too small for the requested covertness budget."""


class SlacknessOutOfRange(AssumptionViolated):
    """A slack parameter falls outside its admissible open interval."""


class DegenerateRange(AssumptionViolated):
    """All ranges in a concentration bound have zero width."""


class UnboundedLLR(AssumptionViolated):
    """A log-likelihood ratio needed by a bound is infinite on the support."""


class InfiniteLLR(AssumptionViolated):
    """An information-density addend is +inf (inputs were not validated)."""


class UnknownMessage(AssumptionViolated):
    """Message index outside the codebook."""


class SameMessage(AssumptionViolated):
    """A cross-message quantity was requested with both messages equal."""


class NoGoodMessages(AssumptionViolated):
    """Refinement found no message below the third-kind error gate."""


class EmptyAfterExpurgation(AssumptionViolated):
    """Expurgation removed every message."""


class KMismatch(AssumptionViolated):
    """Empirical laws with different denominators were compared."""


class BudgetExceeded(CovertIdError):
    """An exact enumeration or allocation would exceed the configured cap."""


class FormatError(CovertIdError):
    """A serialized artifact is malformed; carries the offending line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(CovertIdError):
    """A config file is malformed; carries the offending line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
