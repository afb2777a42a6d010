"""Exception hierarchy shared by every oplkit module."""

from __future__ import annotations


class OplError(Exception):
    """Base class for all oplkit errors."""


class GrammarSyntaxError(OplError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class GrammarError(OplError):
    """A grammar violates an alphabet invariant or an operation precondition."""


class ResourceLimitError(OplError):
    """A configured size or length guard was exceeded."""


class ConflictError(OplError):
    """A precedence matrix has a cell holding more than one relation."""

    def __init__(self, message: str, conflicts=()):
        super().__init__(message)
        self.conflicts = list(conflicts)


class IncompatibleMatricesError(ConflictError):
    pass


class EqualityCycleError(OplError):
    """The equal-in-precedence relation is circular, so rhs length is unbounded."""


class AutomatonFormatError(OplError):
    pass


class ParseError(OplError):
    """Base class of parser rejections.  ``position`` is a 0-based token index."""

    kind = "parse"

    def __init__(self, message: str, position: int | None = None):
        super().__init__(message)
        self.position = position


class EmptyCellError(ParseError):
    kind = "empty-cell"

    def __init__(self, left: str, right: str, position: int | None):
        super().__init__(
            f"no precedence relation between {left!r} and {right!r} at token {position}",
            position,
        )
        self.left = left
        self.right = right


class NoHandleError(ParseError):
    kind = "no-handle"

    def __init__(self, handle, position: int | None, message: str | None = None):
        text = " ".join(handle)
        super().__init__(message or f"no production has rhs {text!r} (token {position})", position)
        self.handle = tuple(handle)


class TrailingFormError(NoHandleError):
    """Input exhausted but the residue cannot be reduced to the axiom."""

    kind = "trailing-form"

    def __init__(self, handle, position: int | None):
        text = " ".join(handle) if handle else "<empty>"
        super().__init__(handle, position, f"input exhausted; residue {text!r} does not reduce to the axiom")


class PassLimitError(OplError):
    """The parallel parser made no progress within the pass budget."""

    def __init__(self, message: str, residue=()):
        super().__init__(message)
        self.residue = tuple(residue)
