"""Exception hierarchy shared by all modules."""


class BratteliError(Exception):
    """Base class for every error raised by this package."""


class DiagramError(BratteliError, ValueError):
    """Structurally malformed diagram (dangling vertex, empty incoming list, ...)."""

    def __init__(self, message, level=None, vertex=None):
        where = []
        if level is not None:
            where.append(f"level {level}")
        if vertex is not None:
            where.append(f"vertex {vertex}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.level = level
        self.vertex = vertex


class LevelRangeError(BratteliError, IndexError):
    """A level, vertex or cut lies outside the available part of a diagram."""


class PreconditionError(BratteliError, ValueError):
    """Input violates a mathematical precondition (H1-H3, positivity, ...)."""


class NormalizationError(PreconditionError):
    """H1-H3 cannot be reached by contraction and relabeling alone."""


class NeedsDeeperSuffix(BratteliError, RuntimeError):
    """A walk needs edge information above the supplied suffix."""


class InconclusiveOracle(BratteliError, RuntimeError):
    """Brute-force enumeration hit its depth cap before resolving every cylinder."""


class NumericError(BratteliError, ArithmeticError):
    """Iterative numerical routine failed to converge."""


class MeasureUnavailable(BratteliError, LookupError):
    """No invariant measure source can serve the requested level."""
