"""Exceptions raised by the purification routines."""


class PurificationError(Exception):
    """Base class for errors raised by this package."""


class DegeneratePostselectionError(PurificationError):
    """A round keeps nothing: the post-selection success probability is zero."""


class NonConvergenceError(PurificationError):
    """The target fidelity was not reached within the round cap.

    The partial trace is attached as ``trace`` so callers can still report it.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class BracketError(PurificationError):
    """Bisection could not bracket the threshold (x = 1 failed to converge)."""


class ResourceGuardError(PurificationError, ValueError):
    """The dense oracle was asked to simulate a dimension it refuses to handle."""
