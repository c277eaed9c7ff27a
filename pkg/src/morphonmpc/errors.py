"""Exception types raised across the package.

Everything derives from MorphonmpcError so callers can catch the package's
failures with a single except clause while still telling apart the cases
that matter (singular attitude aborts a plant run; validation problems are
user input errors).
"""


class MorphonmpcError(Exception):
    """Base class for all errors raised by this package."""


class SingularAttitude(MorphonmpcError):
    """Pitch too close to +-90 deg for the Euler rate map to be invertible."""


class InvalidLegIndex(MorphonmpcError):
    """Leg index outside 1..4."""


class DimensionMismatch(MorphonmpcError):
    """Array argument has the wrong shape for the operation."""


class NonFiniteCost(MorphonmpcError):
    """Rollout cost or gradient evaluated to nan/inf and could not recover."""


class ScenarioInvalid(MorphonmpcError):
    """Scenario fails validation (inconsistent mode, bounds, waypoints...)."""


class EmptyLog(MorphonmpcError):
    """Operation needs at least one log row."""


class ParseError(MorphonmpcError):
    """Config or log text could not be parsed."""


class ValidationError(MorphonmpcError):
    """Parsed value is structurally valid but out of the accepted domain."""


class IoError(MorphonmpcError):
    """File system problem while reading or writing artifacts."""
