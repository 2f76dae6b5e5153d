"""Exception hierarchy.

Everything raised by this package derives from MegascatterError so callers
(notably the CLI) can distinguish data/configuration problems from bugs.
"""


class MegascatterError(Exception):
    """Base class for all errors raised by megascatter."""


class ColumnError(MegascatterError):
    """A named column is missing, duplicated, or otherwise unusable."""

    def __init__(self, column: str, message: str | None = None):
        self.column = column
        super().__init__(message or f"unknown column: {column!r}")


class ParseError(MegascatterError):
    """Malformed CSV content. ``row`` is the 1-based data row number."""

    def __init__(self, row: int, message: str):
        self.row = row
        super().__init__(f"row {row}: {message}")


class EmptyInputError(MegascatterError):
    """The input contained no data at all."""


class KindMismatchError(MegascatterError):
    """An operation requiring one channel kind was given the other."""


class InvalidPolygonError(MegascatterError):
    """A lasso polygon with fewer than 3 vertices or non-finite vertices."""


class SelectionRangeError(MegascatterError):
    """A selection index outside 0..row_count-1. Names the first offender."""

    def __init__(self, index: int, row_count: int):
        self.index = index
        self.row_count = row_count
        super().__init__(
            f"selection index {index} out of range for table with {row_count} rows"
        )


class EmptySelectionError(MegascatterError):
    """Camera fitting was asked to frame an empty selection."""


class MembershipError(MegascatterError):
    """An event referenced a view id that is not part of the group."""

    def __init__(self, view_id: str):
        self.view_id = view_id
        super().__init__(f"view {view_id!r} is not a member of this group")


class ConfigError(MegascatterError):
    """Invalid normalizer/map/encoding configuration, caught at build time."""


class ProtocolError(MegascatterError):
    """A wire frame or control message violates the protocol."""


class TruncationError(ProtocolError):
    """A frame's declared counts exceed the bytes actually present."""


class EncodingLimitError(MegascatterError):
    """Input exceeds a hard wire-format limit (column count, name length)."""
