"""Synthetic-data throughput measurements for dump and load.

Runs entirely against the in-memory reference backend so the numbers
reflect the toolkit's own pipeline, not a server.  Every load runs into
a fresh database so repeated measurements don't collide on keys.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .backend import ColumnSchema, MemoryDatabase, TableSchema
from .dump import DumpReport, dump_table
from .load import LoadReport, load_many
from .model import ChunkPolicy, CommitPolicy, TableSpec

BENCH_TABLE = "bench_rate"

BENCH_SCHEMA = TableSchema(
    name=BENCH_TABLE,
    columns=(
        ColumnSchema("from_currency", "text"),
        ColumnSchema("to_currency", "text"),
        ColumnSchema("conv_rate", "float32"),
        ColumnSchema("update_date", "text"),
    ),
    primary_key=("from_currency", "to_currency"),
)

BENCH_SPEC = TableSpec(
    table_name=BENCH_TABLE,
    select_sql=(
        "select from_currency, to_currency, conv_rate, update_date "
        f"from {BENCH_TABLE}"
    ),
    insert_sql=(
        f"insert into {BENCH_TABLE} "
        "(from_currency, to_currency, conv_rate, update_date) "
        "values (?, ?, ?, ?)"
    ),
)


def synthetic_rows(n: int) -> Iterator[tuple]:
    """Deterministic currency-table-shaped rows with unique keys."""
    for i in range(n):
        yield (
            f"cur{i:09d}",
            f"to{i:09d}",
            1.0 + (i % 9999) * 1e-4,
            "1993-11-22 00:00:00.0000",
        )


@dataclass(frozen=True)
class BenchResult:
    label: str
    rows: int
    seconds: float

    @property
    def records_per_minute(self) -> float | None:
        if self.rows == 0 or self.seconds <= 0:
            return None
        return self.rows * 60.0 / self.seconds

    def line(self) -> str:
        rpm = self.records_per_minute
        if rpm is None:
            return f"{self.label}: n/a ({self.rows} rows)"
        return (
            f"{self.label}: {self.rows} records in {self.seconds:.2f}s "
            f"({rpm:,.0f} records/minute)"
        )


def seeded_database(rows: int) -> MemoryDatabase:
    db = MemoryDatabase([BENCH_SCHEMA])
    db.seed(BENCH_TABLE, synthetic_rows(rows))
    return db


def time_dump(
    db: MemoryDatabase,
    out_dir: Path,
    chunk: ChunkPolicy = ChunkPolicy(),
) -> tuple[BenchResult, DumpReport]:
    conn = db.connect()
    try:
        start = time.perf_counter()
        report = dump_table(conn, BENCH_SPEC, chunk, out_dir, overwrite=True)
        elapsed = time.perf_counter() - start
    finally:
        conn.close()
    return BenchResult("dump", report.total_rows, elapsed), report


def time_load(
    files: list[Path],
    commit: CommitPolicy,
    jobs: int = 1,
) -> tuple[BenchResult, list[LoadReport]]:
    """Load into a fresh empty database; label carries the settings."""
    target = MemoryDatabase([BENCH_SCHEMA])
    start = time.perf_counter()
    reports = load_many(target.connect, files, commit=commit, workers=jobs)
    elapsed = time.perf_counter() - start
    rows = sum(r.inserted for r in reports)
    return BenchResult(f"load [{commit}, jobs={jobs}]", rows, elapsed), reports
