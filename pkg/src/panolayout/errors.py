"""Exception types shared across the package."""


class RoomLayoutError(Exception):
    """Base class for all panolayout errors."""


class InputError(RoomLayoutError, ValueError):
    """Arguments violate an operation's preconditions."""


class GeometryError(RoomLayoutError):
    """Geometrically impossible configuration, e.g. a floor boundary above the horizon."""


class EstimationError(RoomLayoutError):
    """Too little valid data to estimate a quantity."""


class AmbiguityError(RoomLayoutError):
    """A detection window is degenerate; near/far extraction is undefined there."""


class AssemblyError(RoomLayoutError):
    """Corners cannot be assembled into a simple visible layout."""


class ReconstructionError(RoomLayoutError):
    """A signal does not yield enough corners for a closed layout."""


class MetricError(RoomLayoutError):
    """Degenerate metric input (empty corner set, zero-area polygon, ...)."""


class ParseError(RoomLayoutError, ValueError):
    """Malformed input file; the message names the offending line or field."""


class EmitError(RoomLayoutError):
    """A layout is too degenerate to serialize."""
