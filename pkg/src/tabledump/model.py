"""Value model and dump-plan types.

A record is a plain tuple of cell values drawn from five kinds: None,
int (signed 64-bit at the file boundary), float (IEEE-754 binary64),
str, and bytes.  Anything else (dates, decimals, blob handles) must be
cast to text in the select SQL before it reaches the dump boundary.

Float comparisons here are bit-pattern comparisons: a value read back
from a dump file must be the exact double that was written, including
negative zero and NaN payloads, so tests and multiset checks cannot use
`==` on floats.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from typing import Iterable, TypeAlias

from .errors import MalformedPlan

Value: TypeAlias = "int | float | str | bytes | None"
Row: TypeAlias = "tuple[Value, ...]"

DEFAULT_RECORDS_PER_FILE = 500_000


def float_bits(x: float) -> int:
    """The 64-bit pattern of a float; NaN payloads are preserved."""
    return struct.unpack("<Q", struct.pack("<d", x))[0]


def value_equal(a: Value, b: Value) -> bool:
    """Structural equality; floats compare by bit pattern."""
    if type(a) is not type(b):
        return False
    if isinstance(a, float):
        return float_bits(a) == float_bits(b)
    return a == b


def row_equal(a: Row, b: Row) -> bool:
    return len(a) == len(b) and all(value_equal(x, y) for x, y in zip(a, b))


def row_key(row: Iterable[Value]) -> tuple:
    """A hashable canonical form of a row, for multiset comparisons.

    Floats are replaced by their bit patterns so that -0.0 != 0.0 and
    NaN == NaN, matching the dump format's exact-roundtrip contract.
    """
    return tuple(
        ("f", float_bits(v)) if isinstance(v, float)
        else (type(v).__name__, v)
        for v in row
    )


@dataclass(frozen=True)
class TableSpec:
    """One table's dump instructions: name, select SQL, insert SQL."""

    table_name: str
    select_sql: str
    insert_sql: str

    def __post_init__(self):
        if not self.table_name:
            raise ValueError("table_name must be non-empty")
        if any(sep in self.table_name for sep in ("/", "\\", os.sep)):
            raise ValueError(
                f"table_name {self.table_name!r} contains a path separator"
            )
        if not self.select_sql.strip():
            raise ValueError("select_sql must be non-empty")
        if not self.insert_sql.strip():
            raise ValueError("insert_sql must be non-empty")


@dataclass(frozen=True)
class DumpPlan:
    """An ordered list of tables to dump; names are unique."""

    tables: tuple[TableSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "tables", tuple(self.tables))
        seen = set()
        for spec in self.tables:
            if spec.table_name in seen:
                raise ValueError(f"duplicate table name {spec.table_name!r}")
            seen.add(spec.table_name)

    def __iter__(self):
        return iter(self.tables)

    def __len__(self) -> int:
        return len(self.tables)


@dataclass(frozen=True)
class ChunkPolicy:
    """How many records go into each dump file."""

    records_per_file: int = DEFAULT_RECORDS_PER_FILE

    def __post_init__(self):
        if self.records_per_file < 1:
            raise ValueError("records_per_file must be >= 1")


@dataclass(frozen=True)
class CommitPolicy:
    """When the loader commits: every N records, or once per file (None).

    Per-record commit is batch_size=1 and is the default; it is the
    slowest but loses nothing that did not itself fail to insert.
    """

    batch_size: int | None = 1

    def __post_init__(self):
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch size must be >= 1")

    @classmethod
    def per_record(cls) -> "CommitPolicy":
        return cls(1)

    @classmethod
    def per_batch(cls, size: int) -> "CommitPolicy":
        return cls(size)

    @classmethod
    def per_file(cls) -> "CommitPolicy":
        return cls(None)

    @classmethod
    def parse(cls, text: str) -> "CommitPolicy":
        """Parse the CLI spelling: 'record', 'batch:N', or 'file'."""
        if text == "record":
            return cls.per_record()
        if text == "file":
            return cls.per_file()
        if text.startswith("batch:"):
            try:
                return cls.per_batch(int(text.split(":", 1)[1]))
            except ValueError as exc:
                raise ValueError(f"bad commit mode {text!r}") from exc
        raise ValueError(
            f"bad commit mode {text!r} (expected record, batch:N, or file)"
        )

    def __str__(self) -> str:
        if self.batch_size is None:
            return "file"
        if self.batch_size == 1:
            return "record"
        return f"batch:{self.batch_size}"


_PLAN_KEYS = ("table", "select", "insert")


def parse_plan(text: str) -> DumpPlan:
    """Parse plan-file text into a DumpPlan.

    Each entry is three lines `table: `, `select: `, `insert: ` in that
    order; entries are separated by blank lines; `#` lines are comments.
    """
    entries: list[TableSpec] = []
    pending: dict[str, str] = {}
    pending_line = 0
    names: set[str] = set()

    def flush(at_line: int):
        if not pending:
            return
        missing = [k for k in _PLAN_KEYS if k not in pending]
        if missing:
            raise MalformedPlan(
                f"entry is missing {missing[0]!r}", line=at_line
            )
        spec = TableSpec(pending["table"], pending["select"], pending["insert"])
        if spec.table_name in names:
            raise MalformedPlan(
                f"duplicate table name {spec.table_name!r}", line=pending_line
            )
        names.add(spec.table_name)
        entries.append(spec)
        pending.clear()

    lineno = 0
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if line.startswith("#"):
            continue
        if not line.strip():
            flush(lineno)
            continue
        expected = _PLAN_KEYS[len(pending)] if len(pending) < 3 else None
        if expected is None:
            raise MalformedPlan("entry has more than three lines", line=lineno)
        prefix = expected + ": "
        if not line.startswith(prefix):
            raise MalformedPlan(
                f"expected {prefix!r} prefix, got {line.split(':', 1)[0]!r}",
                line=lineno,
            )
        value = line[len(prefix):].strip()
        if not value:
            raise MalformedPlan(f"empty value for {expected!r}", line=lineno)
        if not pending:
            pending_line = lineno
        pending[expected] = value

    flush(lineno)
    if not entries:
        raise MalformedPlan("plan contains no entries", line=None)
    return DumpPlan(tuple(entries))


def render_plan(plan: DumpPlan) -> str:
    """Serialize a plan back to plan-file text; parse_plan inverts this."""
    blocks = []
    for spec in plan:
        for value in (spec.table_name, spec.select_sql, spec.insert_sql):
            if "\n" in value or "\r" in value:
                raise ValueError("plan values cannot contain newlines")
        blocks.append(
            f"table: {spec.table_name}\n"
            f"select: {spec.select_sql}\n"
            f"insert: {spec.insert_sql}\n"
        )
    return "\n".join(blocks)


def count_placeholders(sql: str) -> int:
    """Count positional `?` placeholders outside single-quoted literals."""
    count = 0
    in_string = False
    i = 0
    while i < len(sql):
        ch = sql[i]
        if in_string:
            if ch == "'":
                if i + 1 < len(sql) and sql[i + 1] == "'":
                    i += 1  # escaped quote
                else:
                    in_string = False
        elif ch == "'":
            in_string = True
        elif ch == "?":
            count += 1
        i += 1
    return count
