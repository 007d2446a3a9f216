"""Command-line interface.

Subcommands: dump, load, inspect, verify, salvage, corrupt, bench.
Credentials come from --dsn/--user/--password flags or the TD_DSN,
TD_USER, TD_PASSWORD environment variables (flags win).  `load` also
accepts the classic positional form
`load <dsn> <user> <password> <dump_file>+` when no credential flag or
variable is set.

Exit codes: 0 success, 1 operational failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import os
import random
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .backend import ConnectionConfig, Connector, connector_for
from .bench import seeded_database, time_dump, time_load
from .dump import dump_all
from .errors import DumpFailed, MalformedPlan, ToolError
from .format import read_salvage, read_strict, write_dump_file
from .load import load_many
from .model import ChunkPolicy, CommitPolicy, parse_plan

DEFAULT_CHUNK_SIZE = 500_000

ENV_DSN = "TD_DSN"
ENV_USER = "TD_USER"
ENV_PASSWORD = "TD_PASSWORD"

LOAD_USAGE = (
    "usage: tabledump load <dsn> <user> <password> <dump_file>+\n"
    "       (or pass --dsn/--user/--password or set TD_DSN/TD_USER/TD_PASSWORD\n"
    "        and list only dump files)"
)


@dataclass
class CliConfig:
    """Resolved settings shared by the database-facing commands."""

    dsn: str | None = None
    user: str = ""
    password: str = ""
    plan_path: Path | None = None
    out_dir: Path = Path(".")
    chunk_size: int = DEFAULT_CHUNK_SIZE
    jobs: int = 1
    commit_mode: CommitPolicy = CommitPolicy.per_record()
    read_mode: str = "strict"
    overwrite: bool = False

    def connection(self) -> ConnectionConfig:
        if not self.dsn:
            raise ValueError("no DSN given (use --dsn or TD_DSN)")
        return ConnectionConfig(self.dsn, self.user, self.password)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _nonnegative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def _config_from(args: argparse.Namespace) -> CliConfig:
    def get(name, default=None):
        return getattr(args, name, default)

    return CliConfig(
        dsn=get("dsn") or os.environ.get(ENV_DSN),
        user=get("user") or os.environ.get(ENV_USER, ""),
        password=get("password") or os.environ.get(ENV_PASSWORD, ""),
        plan_path=Path(args.plan) if get("plan") else None,
        out_dir=Path(get("out") or "."),
        chunk_size=get("chunk_size", DEFAULT_CHUNK_SIZE),
        jobs=get("jobs", 1),
        commit_mode=get("commit") or CommitPolicy.per_record(),
        read_mode=get("mode", "strict"),
        overwrite=bool(get("overwrite", False)),
    )


def _fail(message: str, code: int = 1) -> int:
    print(message, file=sys.stderr)
    return code


def cmd_dump(args: argparse.Namespace) -> int:
    config = _config_from(args)
    try:
        text = config.plan_path.read_text(encoding="utf-8")
        plan = parse_plan(text)
    except (OSError, MalformedPlan) as exc:
        return _fail(f"cannot read plan: {exc}", 2)
    try:
        backend = connector_for(config.connection())
    except (ValueError, ToolError) as exc:
        return _fail(str(exc), 2)
    policy = ChunkPolicy(config.chunk_size)
    try:
        with backend:
            reports = dump_all(
                backend,
                plan,
                policy,
                config.out_dir,
                overwrite=config.overwrite,
                keep_going=args.keep_going,
            )
    except DumpFailed as exc:
        for report in exc.reports:
            for path, count in report.files:
                print(f"{path}\t{count}")
        for table, cause in exc.failures:
            print(f"dump failed for table {table!r}: {cause}", file=sys.stderr)
        return 1
    except (ToolError, OSError) as exc:
        return _fail(str(exc))
    for report in reports:
        for path, count in report.files:
            print(f"{path}\t{count}")
    return 0


def _resolve_load_args(args: argparse.Namespace) -> tuple[CliConfig, list[Path]] | int:
    config = _config_from(args)
    rest: list[str] = list(args.args)
    no_flags = (
        args.dsn is None
        and args.user is None
        and args.password is None
        and os.environ.get(ENV_DSN) is None
        and os.environ.get(ENV_USER) is None
        and os.environ.get(ENV_PASSWORD) is None
    )
    if no_flags:
        # Classic positional form: dsn user password files...
        if len(rest) < 4:
            return _fail(LOAD_USAGE, 2)
        config.dsn, config.user, config.password = rest[0], rest[1], rest[2]
        files = rest[3:]
    elif config.dsn is None:
        if not rest:
            return _fail(LOAD_USAGE, 2)
        config.dsn, files = rest[0], rest[1:]
    else:
        files = rest
    if not files:
        return _fail(LOAD_USAGE, 2)
    return config, [Path(f) for f in files]


def cmd_load(args: argparse.Namespace) -> int:
    resolved = _resolve_load_args(args)
    if isinstance(resolved, int):
        return resolved
    config, files = resolved
    connection = config.connection()

    def factory() -> Connector:
        return connector_for(connection)

    reports = load_many(
        factory,
        files,
        commit=config.commit_mode,
        mode=config.read_mode,
        workers=config.jobs,
    )
    status = 0
    for report in reports:
        if report.error is not None:
            print(f"{report.file}: ERROR {report.error}", file=sys.stderr)
            status = 1
        else:
            print(
                f"{report.file}: attempted={report.attempted} "
                f"inserted={report.inserted} failed={report.failed}"
            )
            if report.failed:
                status = 1
    return status


def cmd_inspect(args: argparse.Namespace) -> int:
    try:
        with open(args.file, "rb") as source:
            header, rows = read_strict(source)
    except (ToolError, OSError) as exc:
        return _fail(f"{args.file}: {exc}")
    print(
        f"table={header.table_name} chunk={header.chunk_index} "
        f"columns={header.column_count} records={len(rows)}"
    )
    print(f"insert_sql={header.insert_sql}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    status = 0
    for file in args.files:
        try:
            with open(file, "rb") as source:
                read_strict(source)
        except (ToolError, OSError) as exc:
            print(f"{file}: FAIL ({exc})")
            status = 1
        else:
            print(f"{file}: OK")
    return status


def cmd_salvage(args: argparse.Namespace) -> int:
    try:
        with open(args.file, "rb") as source:
            header, rows, report = read_salvage(source)
    except OSError as exc:
        return _fail(str(exc))
    print(
        f"records_recovered={report.records_recovered} "
        f"bytes_skipped={report.bytes_skipped} "
        f"header_found={report.header_found} "
        f"end_frame_found={report.end_frame_found} "
        f"expected_records={report.expected_records} "
        f"crc_rejections={report.crc_rejections}"
    )
    if header is None:
        print("warning: no header recovered; nothing written", file=sys.stderr)
        return 0
    keep = [r for r in rows if len(r) == header.column_count]
    if len(keep) < len(rows):
        print(
            f"warning: dropped {len(rows) - len(keep)} record(s) with "
            "mismatched column count",
            file=sys.stderr,
        )
    mode = "wb" if args.overwrite else "xb"
    try:
        with open(args.out, mode) as sink:
            count = write_dump_file(sink, header, keep)
    except FileExistsError:
        return _fail(f"{args.out} already exists; pass --overwrite to replace it")
    except (ToolError, OSError) as exc:
        return _fail(str(exc))
    print(f"salvaged {count} records into {args.out}")
    return 0


def corrupted_copy(data: bytes, edits: list[tuple[int, int | None]]) -> bytes:
    """Apply byte edits to a copy; None value means flip (XOR 0xFF)."""
    out = bytearray(data)
    for offset, value in edits:
        if not 0 <= offset < len(out):
            raise IndexError(
                f"offset {offset} outside file of {len(out)} bytes"
            )
        if value is None:
            out[offset] ^= 0xFF
        else:
            out[offset] = value
    return bytes(out)


def _parse_edit(text: str) -> tuple[int, int | None]:
    offset_text, _, value_text = text.partition(":")
    offset = int(offset_text)
    if not value_text:
        return offset, None
    value = int(value_text, 16)
    if not 0 <= value <= 0xFF:
        raise ValueError(f"byte value {value_text!r} out of range")
    return offset, value


def cmd_corrupt(args: argparse.Namespace) -> int:
    if not args.i_know_this_destroys_data:
        return _fail(
            "corrupt writes intentionally damaged files; "
            "pass --i-know-this-destroys-data to proceed",
            2,
        )
    if not args.at and not args.random:
        return _fail("nothing to do: pass --at and/or --random", 2)
    try:
        data = Path(args.file).read_bytes()
    except OSError as exc:
        return _fail(str(exc))
    edits: list[tuple[int, int | None]] = []
    try:
        for spec in args.at or []:
            edits.append(_parse_edit(spec))
    except ValueError as exc:
        return _fail(str(exc), 2)
    if args.random:
        if len(data) == 0:
            return _fail("cannot corrupt an empty file", 2)
        rng = random.Random(args.seed)
        for offset in rng.sample(range(len(data)), min(args.random, len(data))):
            value = (data[offset] + rng.randint(1, 255)) % 256
            edits.append((offset, value))
    try:
        mutated = corrupted_copy(data, edits)
    except IndexError as exc:
        return _fail(str(exc), 2)
    mode = "wb" if args.overwrite else "xb"
    try:
        with open(args.out, mode) as sink:
            sink.write(mutated)
    except FileExistsError:
        return _fail(f"{args.out} already exists; pass --overwrite to replace it")
    except OSError as exc:
        return _fail(str(exc))
    print(f"corrupted {len(edits)} byte(s) of {args.file} into {args.out}")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    config = _config_from(args)
    rows = args.rows
    db = seeded_database(rows)
    with tempfile.TemporaryDirectory(prefix="tabledump-bench-") as tmp:
        out_dir = config.out_dir if args.out else Path(tmp)
        out_dir.mkdir(parents=True, exist_ok=True)
        dump_result, report = time_dump(db, out_dir, ChunkPolicy(config.chunk_size))
        print(dump_result.line())
        files = [path for path, _ in report.files]
        if not files:
            print("load: n/a (no dump files)")
            return 0
        load_result, _ = time_load(files, config.commit_mode, config.jobs)
        print(load_result.line())
        if args.compare_jobs:
            other, _ = time_load(files, config.commit_mode, args.compare_jobs)
            print(other.line())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tabledump",
        description="Table-level logical backup and restore.",
    )
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="enable debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_connection_flags(p):
        p.add_argument("--dsn", help=f"database locator (or ${ENV_DSN})")
        p.add_argument("-u", "--user", help=f"database user (or ${ENV_USER})")
        p.add_argument("-p", "--password", help=f"database password (or ${ENV_PASSWORD})")

    p = sub.add_parser("dump", help="dump planned tables into chunked files")
    add_connection_flags(p)
    p.add_argument("--plan", required=True, help="plan file path")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--chunk-size", type=_positive_int, default=DEFAULT_CHUNK_SIZE,
                   help="records per dump file (default 500000)")
    p.add_argument("--overwrite", action="store_true",
                   help="replace existing dump files")
    p.add_argument("--keep-going", action="store_true",
                   help="continue past a failing table")
    p.set_defaults(func=cmd_dump)

    p = sub.add_parser("load", help="restore dump files")
    add_connection_flags(p)
    p.add_argument("--jobs", type=_positive_int, default=1,
                   help="parallel workers (default 1)")
    p.add_argument("--commit", type=CommitPolicy.parse,
                   default=CommitPolicy.per_record(),
                   help="commit mode: record, batch:N, or file")
    p.add_argument("--mode", choices=("strict", "salvage"), default="strict",
                   help="how to read dump files")
    p.add_argument("args", nargs="*",
                   help="dump files; or <dsn> <user> <password> <dump_file>+")
    p.set_defaults(func=cmd_load)

    p = sub.add_parser("inspect", help="print a dump file's header and counts")
    p.add_argument("file")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("verify", help="strict-read files and report OK/FAIL")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("salvage", help="recover records from a damaged file")
    p.add_argument("file")
    p.add_argument("out", help="path for the rebuilt dump file")
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=cmd_salvage)

    p = sub.add_parser("corrupt", help="write a deliberately damaged copy (test tool)")
    p.add_argument("file")
    p.add_argument("out")
    p.add_argument("--at", action="append", metavar="OFFSET[:HEXBYTE]",
                   help="corrupt this byte (default: XOR 0xFF); repeatable")
    p.add_argument("--random", type=_positive_int, metavar="K",
                   help="corrupt K random bytes")
    p.add_argument("--seed", type=int, help="RNG seed for --random")
    p.add_argument("--overwrite", action="store_true")
    p.add_argument("--i-know-this-destroys-data", action="store_true")
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("bench", help="measure dump/load throughput on synthetic data")
    p.add_argument("--rows", type=_nonnegative_int, default=1_000_000,
                   help="synthetic record count (default 1000000)")
    p.add_argument("--chunk-size", type=_positive_int, default=DEFAULT_CHUNK_SIZE)
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--commit", type=CommitPolicy.parse,
                   default=CommitPolicy.per_record())
    p.add_argument("--out", help="keep dump files here instead of a temp dir")
    p.add_argument("--compare-jobs", type=_positive_int, metavar="N",
                   help="also time the load with N workers")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.DEBUG)
    try:
        return args.func(args)
    except (ToolError, OSError) as exc:
        return _fail(str(exc))


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
