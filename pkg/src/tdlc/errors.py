"""Shared exception hierarchy.

``DomainError`` covers every rule violation that a caller can provoke with
well-typed input: undefined partial products, window truncation, precision
running out, and the various "no such object" outcomes of search routines.
The command line maps ``DomainError`` to exit code 1 and argument/parse
problems to exit code 2.
"""


class DomainError(Exception):
    """A domain rule was violated by otherwise well-formed input."""


class TreeMismatch(DomainError):
    """Two code sets over different trees were combined."""


class InconsistentPair(DomainError):
    """A forward/backward function pair disagrees about some value."""


class NotInjective(DomainError):
    """A map required to be injective sends two points to the same image."""


class PrecisionExhausted(DomainError):
    """A digit stream cannot deliver the requested number of digits."""


class BudgetExceeded(DomainError):
    """A bounded search ran out of budget before reaching a verdict.

    ``state`` carries whatever resumable progress the search accumulated.
    """

    def __init__(self, message: str, state=None):
        super().__init__(message)
        self.state = state


class Undefined(DomainError):
    """A partial operation was applied outside its domain of definition."""


class WindowOverflow(DomainError):
    """An exact result exists but falls outside the finite window."""


class NotUnique(DomainError):
    """A search that must produce exactly one candidate found several."""


class NotFound(DomainError):
    """A search that must produce a candidate found none."""


class NestedChoiceFailed(DomainError):
    """A chain-building step found no admissible next element."""


class NotConvex(DomainError):
    """A vertex set required to be convex in the tree metric is not."""


class ParseError(ValueError):
    """Malformed literal or mini-language input; carries a position."""

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position
