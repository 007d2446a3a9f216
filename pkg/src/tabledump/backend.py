"""Database connectors.

Engines never touch a driver directly; they speak to a Connector that
yields rows already mapped into the dump value model.  Two connectors
ship here: an in-memory reference backend (enough SQL to exercise the
whole pipeline, including primary-key violations and transactions) and
a thin sqlite3 adapter so the CLI can work against a real file-backed
database without a server.

Cell mapping is deliberately strict: dates, decimals, and anything else
outside {null, int, float, text, bytes} raise UnsupportedType instead
of being coerced.  The remedy is to cast the column to text in the
plan's select SQL.
"""

from __future__ import annotations

import datetime
import re
import sqlite3
import struct
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .errors import (
    BackendError,
    ConnectionLost,
    DuplicateKey,
    QueryFailed,
    UnknownColumn,
    UnknownTable,
    UnsupportedType,
)
from .model import Row, Value

_I64_MIN = -(1 << 63)
_I64_MAX = (1 << 63) - 1


def map_cell(cell: object) -> Value:
    """Map a driver-level datum to a dump value, or refuse it.

    Total over any input: the result is a Value or UnsupportedType,
    never a silent coercion.  Bools are refused because they would
    come back as integers; integers wider than 64 bits are refused
    rather than truncated.
    """
    if cell is None:
        return None
    if isinstance(cell, bool):
        raise UnsupportedType("bool")
    if isinstance(cell, int):
        if not _I64_MIN <= cell <= _I64_MAX:
            raise UnsupportedType("int (wider than 64 bits)")
        return cell
    if isinstance(cell, float):
        return cell
    if isinstance(cell, str):
        return cell
    if isinstance(cell, (bytes, bytearray, memoryview)):
        return bytes(cell)
    raise UnsupportedType(type(cell).__name__)


@dataclass(frozen=True)
class ConnectionConfig:
    """Where to connect and as whom; dsn is passed through verbatim."""

    dsn: str
    user: str = ""
    password: str = ""

    def __post_init__(self):
        if not self.dsn:
            raise ValueError("dsn must be non-empty")


class Connector(ABC):
    """One database session.  Not shareable between workers."""

    @abstractmethod
    def query(self, select_sql: str) -> Iterator[Row]:
        """Execute a select and stream rows of mapped values."""

    @abstractmethod
    def insert(self, insert_sql: str, row: Sequence[Value]) -> None:
        """Bind row positionally to the placeholders and execute."""

    @abstractmethod
    def begin(self) -> None: ...

    @abstractmethod
    def commit(self) -> None: ...

    @abstractmethod
    def rollback(self) -> None: ...

    @abstractmethod
    def close(self) -> None: ...

    def __enter__(self) -> "Connector":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


# --- in-memory reference backend ---

ColumnKind = str  # int | float | float32 | text | bytes | date


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: ColumnKind = "text"


@dataclass(frozen=True)
class TableSchema:
    name: str
    columns: tuple[ColumnSchema, ...]
    primary_key: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "primary_key", tuple(self.primary_key))
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate column in table {self.name!r}")
        for pk in self.primary_key:
            if pk not in names:
                raise ValueError(f"primary key column {pk!r} not in table")


def _widen_f32(x: float) -> float:
    return struct.unpack("<f", struct.pack("<f", x))[0]


def _coerce(kind: ColumnKind, v: object, column: str) -> object:
    """Column-kind storage coercion, mimicking what a server would hold."""
    if v is None:
        return None
    if kind == "int":
        if isinstance(v, bool) or not isinstance(v, int):
            raise BackendError(f"column {column!r} expects int, got {type(v).__name__}")
        return v
    if kind in ("float", "float32"):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise BackendError(f"column {column!r} expects float, got {type(v).__name__}")
        return _widen_f32(float(v)) if kind == "float32" else float(v)
    if kind == "text":
        if not isinstance(v, str):
            raise BackendError(f"column {column!r} expects text, got {type(v).__name__}")
        return v
    if kind == "bytes":
        if not isinstance(v, (bytes, bytearray, memoryview)):
            raise BackendError(f"column {column!r} expects bytes, got {type(v).__name__}")
        return bytes(v)
    if kind == "date":
        # Dates accept text verbatim: a loaded dump writes back the
        # text-cast form and the table keeps it as given.
        if not isinstance(v, (datetime.date, datetime.datetime, str)):
            raise BackendError(f"column {column!r} expects date, got {type(v).__name__}")
        return v
    raise ValueError(f"unknown column kind {kind!r}")


def _format_cast(v: object) -> str:
    """Render a cell for cast(... as char(N)), dialect-1 style dates."""
    if isinstance(v, datetime.datetime):
        return f"{v:%Y-%m-%d %H:%M:%S}.{v.microsecond // 100:04d}"
    if isinstance(v, datetime.date):
        return f"{v:%Y-%m-%d} 00:00:00.0000"
    if isinstance(v, str):
        return v
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class _Table:
    schema: TableSchema
    rows: list[tuple] = field(default_factory=list)
    keys: set[tuple] = field(default_factory=set)

    def key_of(self, row: tuple) -> tuple | None:
        if not self.schema.primary_key:
            return None
        index = {c.name: i for i, c in enumerate(self.schema.columns)}
        return tuple(row[index[name]] for name in self.schema.primary_key)


class MemoryDatabase:
    """Shared storage behind reference connectors.

    Scans preserve insertion order, which makes dump order deterministic
    for tests.  A single lock serializes commits and snapshots.
    """

    def __init__(self, schemas: Iterable[TableSchema] = ()):
        self._tables: dict[str, _Table] = {}
        self._lock = threading.Lock()
        for schema in schemas:
            self.create_table(schema)

    def create_table(self, schema: TableSchema) -> None:
        if schema.name in self._tables:
            raise ValueError(f"table {schema.name!r} already exists")
        self._tables[schema.name] = _Table(schema)

    def connect(self) -> "MemoryConnector":
        return MemoryConnector(self)

    def table(self, name: str) -> _Table:
        try:
            return self._tables[name]
        except KeyError:
            raise UnknownTable(f"unknown table {name!r}")

    def seed(self, name: str, rows: Iterable[Sequence[object]]) -> int:
        """Bulk-load rows through the same coercion/key path as insert.

        Test and benchmark plumbing: skips SQL parsing and transactions.
        """
        table = self.table(name)
        count = 0
        with self._lock:
            for row in rows:
                stored = tuple(
                    _coerce(col.kind, v, col.name)
                    for col, v in zip(table.schema.columns, row)
                )
                key = table.key_of(stored)
                if key is not None:
                    if key in table.keys:
                        raise DuplicateKey(f"duplicate key {key!r} in {name!r}")
                    table.keys.add(key)
                table.rows.append(stored)
                count += 1
        return count

    def snapshot(self, name: str) -> list[tuple]:
        with self._lock:
            return list(self.table(name).rows)

    def apply(self, staged: Iterable[tuple[str, tuple, tuple | None]]) -> None:
        """Publish a connector's staged rows; one lock, one pass."""
        with self._lock:
            for name, stored, key in staged:
                table = self._tables[name]
                table.rows.append(stored)
                if key is not None:
                    table.keys.add(key)


_SELECT_RE = re.compile(
    r"^\s*select\s+(?P<cols>.+?)\s+from\s+(?P<table>\w+)\s*;?\s*$",
    re.IGNORECASE | re.DOTALL,
)
_INSERT_RE = re.compile(
    r"^\s*insert\s+into\s+(?P<table>\w+)\s*"
    r"(?:\(\s*(?P<cols>[^)]+?)\s*\)\s*)?"
    r"values\s*\(\s*(?P<params>[^)]*?)\s*\)\s*;?\s*$",
    re.IGNORECASE | re.DOTALL,
)
_CAST_RE = re.compile(
    r"^cast\s*\(\s*(?P<col>\w+)\s+as\s+char\s*\(\s*(?P<width>\d+)\s*\)\s*\)$",
    re.IGNORECASE,
)


def _parse_select(sql: str) -> tuple[str, list[tuple[str, int | None]]]:
    """Returns (table, [(column, cast_width_or_None), ...])."""
    m = _SELECT_RE.match(sql)
    if not m:
        raise QueryFailed(f"unsupported select: {sql!r}")
    items: list[tuple[str, int | None]] = []
    for part in m.group("cols").split(","):
        part = part.strip()
        cast = _CAST_RE.match(part)
        if cast:
            items.append((cast.group("col"), int(cast.group("width"))))
        elif re.fullmatch(r"\w+", part):
            items.append((part, None))
        else:
            raise QueryFailed(f"unsupported select item: {part!r}")
    return m.group("table"), items


def _parse_insert(sql: str) -> tuple[str, list[str] | None, int]:
    """Returns (table, column list or None for schema order, placeholder count)."""
    m = _INSERT_RE.match(sql)
    if not m:
        raise QueryFailed(f"unsupported insert: {sql!r}")
    cols = None
    if m.group("cols"):
        cols = [c.strip() for c in m.group("cols").split(",")]
    params = [p.strip() for p in m.group("params").split(",")] if m.group("params").strip() else []
    if any(p != "?" for p in params):
        raise QueryFailed("only positional ? placeholders are supported")
    return m.group("table"), cols, len(params)


class MemoryConnector(Connector):
    """One session over a MemoryDatabase; read-committed, staged writes."""

    def __init__(self, database: MemoryDatabase):
        self._db = database
        self._staged: list[tuple[str, tuple, tuple | None]] = []
        self._staged_keys: set[tuple] = set()
        self._closed = False
        # insert_sql -> (table, binder) where binder maps each parameter
        # to (storage index, column kind, column name)
        self._insert_cache: dict[str, tuple[_Table, list[tuple[int, str, str]]]] = {}

    @property
    def database(self) -> MemoryDatabase:
        return self._db

    def _check_open(self):
        if self._closed:
            raise BackendError("connection is closed")

    def query(self, select_sql: str) -> Iterator[Row]:
        self._check_open()
        table_name, items = _parse_select(select_sql)
        table = self._db.table(table_name)
        index = {c.name: i for i, c in enumerate(table.schema.columns)}
        for name, _ in items:
            if name not in index:
                raise UnknownColumn(f"unknown column {name!r} in {table_name!r}")
        rows = self._db.snapshot(table_name)

        def generate() -> Iterator[Row]:
            for stored in rows:
                out = []
                for name, width in items:
                    cell = stored[index[name]]
                    if width is not None and cell is not None:
                        text = _format_cast(cell)
                        if len(text) > width:
                            raise QueryFailed(
                                f"cast of column {name!r} truncates: "
                                f"{len(text)} chars into char({width})"
                            )
                        cell = text.ljust(width)
                    try:
                        out.append(map_cell(cell))
                    except UnsupportedType as exc:
                        exc.column = name
                        raise
                yield tuple(out)

        return generate()

    def _prepare_insert(self, insert_sql: str) -> tuple[_Table, list[tuple[int, str, str]]]:
        table_name, cols, n_params = _parse_insert(insert_sql)
        table = self._db.table(table_name)
        schema = table.schema
        if cols is None:
            cols = [c.name for c in schema.columns]
        if len(cols) != n_params:
            raise BackendError(
                f"{len(cols)} columns but {n_params} placeholders in insert"
            )
        index = {c.name: i for i, c in enumerate(schema.columns)}
        binder = []
        for name in cols:
            if name not in index:
                raise UnknownColumn(f"unknown column {name!r} in {table_name!r}")
            i = index[name]
            binder.append((i, schema.columns[i].kind, name))
        return table, binder

    def insert(self, insert_sql: str, row: Sequence[object]) -> None:
        self._check_open()
        prepared = self._insert_cache.get(insert_sql)
        if prepared is None:
            prepared = self._prepare_insert(insert_sql)
            self._insert_cache[insert_sql] = prepared
        table, binder = prepared
        if len(row) != len(binder):
            raise BackendError(
                f"{len(binder)} placeholders, {len(row)} parameters"
            )
        cells: list[object] = [None] * len(table.schema.columns)
        for (i, kind, name), v in zip(binder, row):
            cells[i] = _coerce(kind, v, name)
        self._stage(table, tuple(cells))

    def _stage(self, table: _Table, stored: tuple) -> None:
        key = table.key_of(stored)
        if key is not None:
            tagged = (table.schema.name, key)
            if key in table.keys or tagged in self._staged_keys:
                raise DuplicateKey(
                    f"duplicate key {key!r} in {table.schema.name!r}"
                )
            self._staged_keys.add(tagged)
        self._staged.append((table.schema.name, stored, key))

    def begin(self) -> None:
        self._check_open()

    def commit(self) -> None:
        self._check_open()
        if not self._staged:
            return
        self._db.apply(self._staged)
        self._staged.clear()
        self._staged_keys.clear()

    def rollback(self) -> None:
        self._check_open()
        self._staged.clear()
        self._staged_keys.clear()

    def close(self) -> None:
        if not self._closed:
            self._staged.clear()
            self._staged_keys.clear()
            self._closed = True


def reference_backend(schemas: Iterable[TableSchema]) -> MemoryConnector:
    """A fresh in-memory database with the given tables, connected."""
    return MemoryDatabase(schemas).connect()


# --- sqlite adapter ---

class SqliteConnector(Connector):
    """Thin adapter over sqlite3; the CLI's default real backend.

    sqlite's storage classes are exactly the dump value model, so
    map_cell acts purely as a guard here.  user/password are accepted
    for interface parity and ignored.
    """

    def __init__(self, path: str):
        self._conn = sqlite3.connect(path, timeout=30.0)

    def query(self, select_sql: str) -> Iterator[Row]:
        try:
            cursor = self._conn.execute(select_sql)
        except sqlite3.Error as exc:
            raise QueryFailed(str(exc)) from exc
        names = [d[0] for d in cursor.description or []]

        def generate() -> Iterator[Row]:
            for raw in cursor:
                out = []
                for i, cell in enumerate(raw):
                    try:
                        out.append(map_cell(cell))
                    except UnsupportedType as exc:
                        exc.column = names[i] if i < len(names) else str(i)
                        raise
                yield tuple(out)

        return generate()

    def insert(self, insert_sql: str, row: Sequence[Value]) -> None:
        try:
            self._conn.execute(insert_sql, tuple(row))
        except sqlite3.IntegrityError as exc:
            raise DuplicateKey(str(exc)) from exc
        except sqlite3.ProgrammingError as exc:
            if "closed" in str(exc).lower():
                raise ConnectionLost(str(exc)) from exc
            raise BackendError(str(exc)) from exc
        except sqlite3.Error as exc:
            raise BackendError(str(exc)) from exc

    def begin(self) -> None:
        pass  # sqlite3 opens a transaction implicitly on first write

    def commit(self) -> None:
        try:
            self._conn.commit()
        except sqlite3.Error as exc:
            raise BackendError(str(exc)) from exc

    def rollback(self) -> None:
        try:
            self._conn.rollback()
        except sqlite3.Error as exc:
            raise BackendError(str(exc)) from exc

    def close(self) -> None:
        self._conn.close()


def connector_for(config: ConnectionConfig) -> Connector:
    """Open a connector for a DSN.

    `sqlite:<path>` or a bare filesystem path opens sqlite.  The
    in-memory reference backend has no DSN form; it is constructed
    directly in tests and benchmarks.
    """
    dsn = config.dsn
    if dsn.startswith("sqlite:"):
        return SqliteConnector(dsn[len("sqlite:"):])
    return SqliteConnector(dsn)
