"""Exception types shared across the simulator."""


class VinesimError(Exception):
    """Base class for all simulator errors."""


class InvalidInputError(VinesimError):
    """An operation received non-finite or malformed input."""


class OutOfWorkspaceError(VinesimError):
    """A commanded tip position is outside the reachable set."""


class ConfigurationError(VinesimError):
    """A layout/config value violates its invariants (e.g. degenerate angles)."""


class CourseError(VinesimError):
    """A course document failed to parse or validate."""


class CourseMismatchError(VinesimError):
    """A run record does not belong to the course it is scored/replayed against."""


class ReplayIntegrityError(VinesimError):
    """Replay diverged from the recorded hash chain."""

    def __init__(self, tick, expected, actual):
        super().__init__(
            f"replay diverged at tick {tick}: recorded {expected[:16]}..., "
            f"resimulated {actual[:16]}..."
        )
        self.tick = tick
        self.expected = expected
        self.actual = actual


class SessionError(VinesimError):
    """Invalid session operation (bad tick rate, input while closed, ...)."""
