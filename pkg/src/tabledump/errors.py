"""Exception types shared across the toolkit.

Everything raised on purpose derives from ToolError so the CLI can turn
any expected failure into a nonzero exit instead of a traceback.  Plain
builtin exceptions (TypeError, ValueError, FileExistsError) are reserved
for API misuse and filesystem refusals.
"""

from __future__ import annotations


class ToolError(Exception):
    """Base class for all expected dump/load failures."""


class MalformedPlan(ToolError):
    """A plan file could not be parsed. Carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# --- dump file format ---

class TooManyFields(ToolError):
    """A record has more fields than the 16-bit field count can hold."""


class MalformedRecord(ToolError):
    """A frame payload does not parse (bad tag, truncation, trailing bytes)."""


class FrameTooLarge(ToolError):
    """A frame payload exceeds the configured maximum frame size."""


class BadMagic(ToolError):
    """The file does not start with the dump-file preamble."""


class CorruptFrame(ToolError):
    """A frame failed its CRC or structural checks during a strict read."""

    def __init__(self, offset: int, message: str):
        self.offset = offset
        super().__init__(f"corrupt frame at byte {offset}: {message}")


class MissingEndFrame(ToolError):
    """The file ended before a valid end frame was seen."""


class CountMismatch(ToolError):
    """The end frame's record count disagrees with the records present."""


class ColumnCountMismatch(ToolError):
    """A row's arity differs from the file header's column count."""

    def __init__(self, ordinal: int, expected: int, got: int):
        self.ordinal = ordinal
        super().__init__(
            f"record {ordinal} has {got} fields, header declares {expected}"
        )


class ArityMismatch(ToolError):
    """Insert SQL placeholder count does not match the column count."""


# --- database backends ---

class BackendError(ToolError):
    """Base class for failures reported by a database connector."""


class QueryFailed(BackendError):
    """The backend rejected a SQL statement."""


class UnknownTable(QueryFailed):
    pass


class UnknownColumn(QueryFailed):
    pass


class DuplicateKey(BackendError):
    """An insert violated a primary-key constraint."""


class ConnectionLost(BackendError):
    """The connection died mid-operation; the current file load aborts."""


class UnsupportedType(ToolError):
    """A result cell is not representable in the dump value model.

    The remedy is always the same: cast the offending column to text in
    the plan's select SQL.  Position context (column, row, table) is
    attached where it becomes known.
    """

    def __init__(self, type_name: str, column: str | None = None):
        self.type_name = type_name
        self.column = column
        self.table: str | None = None
        self.row_ordinal: int | None = None
        super().__init__(type_name)

    def __str__(self) -> str:
        where = []
        if self.table:
            where.append(f"table {self.table!r}")
        if self.row_ordinal is not None:
            where.append(f"row {self.row_ordinal}")
        if self.column:
            where.append(f"column {self.column!r}")
        at = " at " + ", ".join(where) if where else ""
        return (
            f"unsupported cell type {self.type_name!r}{at}; "
            "cast this column to text in select_sql"
        )


# --- engines ---

class DumpFailed(ToolError):
    """One or more tables failed to dump.

    Keeps the reports of tables that completed and the per-table causes,
    so a partial run can still be summarized.
    """

    def __init__(self, failures, reports):
        self.failures = list(failures)  # (table_name, exception) pairs
        self.reports = list(reports)
        names = ", ".join(name for name, _ in self.failures)
        first = self.failures[0][1] if self.failures else None
        super().__init__(f"dump failed for table(s) {names}: {first}")
