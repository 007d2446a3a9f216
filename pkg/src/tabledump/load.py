"""Restores dump files with per-record fault tolerance.

A record that fails to insert is recorded and skipped; loading always
continues.  Under batched commits the open batch is rolled back and
replayed record by record, so only the genuinely failing records are
lost.  Files can be spread across parallel workers, each with its own
connection.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .backend import Connector
from .errors import ArityMismatch, ConnectionLost
from .format import read_salvage, read_strict
from .model import CommitPolicy, Row, count_placeholders

logger = logging.getLogger(__name__)

DEFAULT_FAILURE_CAP = 1000


@dataclass
class LoadReport:
    """Per-file outcome: attempted == inserted + failed."""

    file: Path
    attempted: int = 0
    inserted: int = 0
    failed: int = 0
    failures: list[tuple[int, str]] = field(default_factory=list)
    error: str | None = None  # file-level failure; counts are partial

    @property
    def ok(self) -> bool:
        return self.error is None and self.failed == 0


def _record_failure(
    report: LoadReport, ordinal: int, error: Exception, row: Row,
    failure_cap: int,
) -> None:
    report.failed += 1
    if len(report.failures) < failure_cap:
        report.failures.append((ordinal, str(error)))
    print(f"Unable to load record: {ordinal}")
    logger.debug("record %d failed (%s): %r", ordinal, error, row)


def load_file(
    backend: Connector,
    file: Path | str,
    commit: CommitPolicy = CommitPolicy.per_record(),
    mode: str = "strict",
    failure_cap: int = DEFAULT_FAILURE_CAP,
) -> LoadReport:
    """Load one dump file.

    Strict mode propagates file-format errors; salvage mode loads
    whatever records can be recovered from a damaged file.  A lost
    connection aborts with a partial report (error set).
    """
    file = Path(file)
    report = LoadReport(file=file)
    if mode == "strict":
        with open(file, "rb") as source:
            header, rows = read_strict(source)
    elif mode == "salvage":
        with open(file, "rb") as source:
            header, rows, _ = read_salvage(source)
        if header is None:
            report.error = "no header recovered; cannot derive insert SQL"
            return report
    else:
        raise ValueError(f"unknown read mode {mode!r}")

    placeholders = count_placeholders(header.insert_sql)
    if placeholders != header.column_count:
        raise ArityMismatch(
            f"{file}: insert_sql has {placeholders} placeholders but the "
            f"file header declares {header.column_count} columns"
        )

    batch: list[tuple[int, Row]] = []  # staged, not yet committed

    def commit_batch() -> None:
        backend.commit()
        report.inserted += len(batch)
        batch.clear()

    def replay_batch() -> None:
        """Re-run a rolled-back batch one record at a time."""
        for ordinal, row in batch:
            try:
                backend.insert(header.insert_sql, row)
                backend.commit()
                report.inserted += 1
            except ConnectionLost:
                raise
            except Exception as exc:
                backend.rollback()
                _record_failure(report, ordinal, exc, row, failure_cap)
        batch.clear()

    batch_size = commit.batch_size  # None commits once, at end of file
    try:
        backend.begin()
        for ordinal, row in enumerate(rows, start=1):
            report.attempted += 1
            try:
                backend.insert(header.insert_sql, row)
            except ConnectionLost:
                raise
            except Exception as exc:
                backend.rollback()
                replay_batch()
                _record_failure(report, ordinal, exc, row, failure_cap)
                continue
            batch.append((ordinal, row))
            if batch_size is not None and len(batch) >= batch_size:
                commit_batch()
        if batch:
            commit_batch()
    except ConnectionLost as exc:
        report.error = f"connection lost: {exc}"
        return report

    print(f"{file} file loaded successful.")
    return report


def _partition(files: Sequence[Path], workers: int) -> list[list[tuple[int, Path]]]:
    """Round-robin files (with their input positions) across workers."""
    groups: list[list[tuple[int, Path]]] = [[] for _ in range(workers)]
    for i, f in enumerate(files):
        groups[i % workers].append((i, f))
    return [g for g in groups if g]


def load_many(
    backend_factory: Callable[[], Connector],
    files: Sequence[Path | str],
    commit: CommitPolicy = CommitPolicy.per_record(),
    mode: str = "strict",
    workers: int = 1,
    failure_cap: int = DEFAULT_FAILURE_CAP,
) -> list[LoadReport]:
    """Load many files, optionally in parallel; reports in input order.

    Each worker opens its own connection and loads its share of the
    files sequentially.  workers=1 is a plain sequential restore.  A
    file that fails outright gets a report with `error` set; a worker
    that cannot even connect fails all of its files that way.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    paths = [Path(f) for f in files]
    if not paths:
        return []
    results: dict[int, LoadReport] = {}

    def run_worker(group: list[tuple[int, Path]]) -> list[tuple[int, LoadReport]]:
        out: list[tuple[int, LoadReport]] = []
        try:
            backend = backend_factory()
        except Exception as exc:
            for index, path in group:
                out.append((index, LoadReport(file=path, error=f"no connection: {exc}")))
            return out
        try:
            for index, path in group:
                try:
                    report = load_file(backend, path, commit, mode, failure_cap)
                except Exception as exc:
                    report = LoadReport(file=path, error=str(exc))
                out.append((index, report))
        finally:
            backend.close()
        return out

    groups = _partition(paths, workers)
    if len(groups) == 1:
        batches = [run_worker(groups[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(groups)) as pool:
            batches = list(pool.map(run_worker, groups))
    for batch in batches:
        for index, report in batch:
            results[index] = report
    return [results[i] for i in range(len(paths))]
