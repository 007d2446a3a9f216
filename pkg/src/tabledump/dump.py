"""Streams planned tables out of a database into chunked dump files.

One table at a time: run the select, buffer up to records_per_file
rows, write each full buffer as `<table>.<i>.dump`, flush the partial
tail last.  Peak memory is therefore one chunk of rows.  An empty
result set writes no file at all.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .backend import Connector
from .errors import ArityMismatch, DumpFailed, UnsupportedType
from .format import DumpFileHeader, write_dump_file
from .model import ChunkPolicy, DumpPlan, Row, TableSpec, count_placeholders


@dataclass(frozen=True)
class DumpReport:
    """What one table's dump produced."""

    table_name: str
    total_rows: int
    files: tuple[tuple[Path, int], ...] = ()


def dump_file_name(table_name: str, chunk_index: int) -> str:
    return f"{table_name}.{chunk_index}.dump"


def _guarded_rows(rows: Iterator[Row], spec: TableSpec) -> Iterator[Row]:
    """Attach table/row position to type-guard failures mid-stream."""
    ordinal = 0
    while True:
        ordinal += 1
        try:
            row = next(rows)
        except StopIteration:
            return
        except UnsupportedType as exc:
            exc.table = spec.table_name
            exc.row_ordinal = ordinal
            raise
        yield row


def dump_table(
    backend: Connector,
    spec: TableSpec,
    policy: ChunkPolicy = ChunkPolicy(),
    out_dir: Path | str = ".",
    overwrite: bool = False,
) -> DumpReport:
    """Dump one table; refuses to overwrite existing dump files."""
    out_dir = Path(out_dir)
    print(f"Dumping table: {spec.table_name}")
    rows = _guarded_rows(iter(backend.query(spec.select_sql)), spec)

    files: list[tuple[Path, int]] = []
    total = 0
    chunk_index = 0
    buffer: list[Row] = []
    column_count: int | None = None

    def flush_chunk():
        nonlocal chunk_index
        chunk_index += 1
        path = out_dir / dump_file_name(spec.table_name, chunk_index)
        header = DumpFileHeader(
            table_name=spec.table_name,
            insert_sql=spec.insert_sql,
            chunk_index=chunk_index,
            column_count=column_count,
        )
        mode = "wb" if overwrite else "xb"
        try:
            sink = open(path, mode)
        except FileExistsError:
            raise FileExistsError(
                f"{path} already exists; pass overwrite to replace it"
            ) from None
        try:
            with sink:
                count = write_dump_file(sink, header, buffer)
        except BaseException:
            # Never leave a half-written dump file behind.
            path.unlink(missing_ok=True)
            raise
        files.append((path, count))
        print(f"{count} records dumped into {path.name} file")
        buffer.clear()

    for row in rows:
        if column_count is None:
            column_count = len(row)
            placeholders = count_placeholders(spec.insert_sql)
            if placeholders != column_count:
                raise ArityMismatch(
                    f"table {spec.table_name!r}: select produced "
                    f"{column_count} columns but insert_sql has "
                    f"{placeholders} placeholders"
                )
        buffer.append(row)
        total += 1
        if len(buffer) == policy.records_per_file:
            flush_chunk()
    if buffer:
        flush_chunk()

    print(f"Total number of records in {spec.table_name} table: {total}")
    print(f"Dumping {spec.table_name} table successful.")
    return DumpReport(
        table_name=spec.table_name, total_rows=total, files=tuple(files)
    )


def dump_all(
    backend: Connector,
    plan: DumpPlan,
    policy: ChunkPolicy = ChunkPolicy(),
    out_dir: Path | str = ".",
    overwrite: bool = False,
    keep_going: bool = False,
) -> list[DumpReport]:
    """Dump every planned table in order.

    Fail-fast by default: the first failing table raises DumpFailed,
    which keeps the reports of tables that completed.  With keep_going,
    remaining tables still run and all failures are raised at the end.
    """
    reports: list[DumpReport] = []
    failures: list[tuple[str, Exception]] = []
    for spec in plan:
        try:
            reports.append(
                dump_table(backend, spec, policy, out_dir, overwrite)
            )
        except Exception as exc:
            failures.append((spec.table_name, exc))
            if not keep_going:
                break
    if failures:
        raise DumpFailed(failures, reports)
    return reports
