"""Table-level logical backup/restore with a corruption-salvageable format.

Dump tables as streams of typed records into chunked, CRC-framed dump
files; restore them with per-record fault tolerance and optional
file-level parallelism.  See the README for the file format and CLI.
"""

from .backend import (
    ColumnSchema,
    ConnectionConfig,
    Connector,
    MemoryConnector,
    MemoryDatabase,
    SqliteConnector,
    TableSchema,
    connector_for,
    map_cell,
    reference_backend,
)
from .dump import DumpReport, dump_all, dump_table
from .format import (
    DumpFileHeader,
    Frame,
    SalvageReport,
    decode_record,
    encode_record,
    read_salvage,
    read_strict,
    write_dump_file,
)
from .load import LoadReport, load_file, load_many
from .model import (
    ChunkPolicy,
    CommitPolicy,
    DumpPlan,
    Row,
    TableSpec,
    Value,
    parse_plan,
    render_plan,
    row_equal,
    row_key,
    value_equal,
)

__all__ = [
    "ChunkPolicy",
    "ColumnSchema",
    "CommitPolicy",
    "ConnectionConfig",
    "Connector",
    "DumpFileHeader",
    "DumpPlan",
    "DumpReport",
    "Frame",
    "LoadReport",
    "MemoryConnector",
    "MemoryDatabase",
    "Row",
    "SalvageReport",
    "SqliteConnector",
    "TableSchema",
    "TableSpec",
    "Value",
    "connector_for",
    "decode_record",
    "dump_all",
    "dump_table",
    "encode_record",
    "load_file",
    "load_many",
    "map_cell",
    "parse_plan",
    "read_salvage",
    "read_strict",
    "reference_backend",
    "render_plan",
    "row_equal",
    "row_key",
    "value_equal",
    "write_dump_file",
]

__version__ = "0.1.0"
