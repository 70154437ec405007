"""Exception hierarchy shared by all modules."""


class RLSGPError(Exception):
    """Base class for domain errors (CLI maps these to exit status 1)."""


class TreeSyntaxError(RLSGPError, ValueError):
    """Malformed tree text. ``pos`` is the offending character offset."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


class ArityError(TreeSyntaxError):
    """A function node that does not have exactly two children."""


class LiteralIndexError(TreeSyntaxError):
    """A variable index of 0 or one exceeding the declared ``n``."""


class InvalidNodeRef(RLSGPError, LookupError):
    """A path that does not address a node of the subject tree."""


class EmptyTreeError(RLSGPError, ValueError):
    """An operation that is undefined on the empty tree."""


class TooManyVariables(RLSGPError, ValueError):
    """The exact projection path is capped at a number of distinct variables."""


class InvalidProcess(RLSGPError, ValueError):
    """A synthetic drift process whose transition probability would exceed 1."""
