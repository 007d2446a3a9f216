"""The on-disk dump file format.

A dump file is a fixed 8-byte preamble followed by a sequence of
self-checking frames:

    preamble: 8 bytes ASCII ``TDMP0001``
    frame:    SYNC(4: D7 41 9A 5C) | type(1) | payload_len(u32 LE)
              | payload | crc32(u32 LE)

The CRC covers type + payload_len + payload, so a corrupted length
field cannot silently misframe the stream.  Frame types: 'H' header
(exactly one, first), 'R' record, 'E' end (exactly one, last, carrying
the record count).

Payload layouts (all integers little-endian, text lengths in bytes):

    header: format_version(u16 =1) | chunk_index(u32) | column_count(u16)
            | table_name(u32 len + UTF-8) | insert_sql(u32 len + UTF-8)
    record: field_count(u16), then per field a tag byte and body:
            0x00 null | 0x01 int: i64 | 0x02 float: binary64
            | 0x03 text: u32 len + UTF-8 | 0x04 bytes: u32 len + raw
    end:    record_count(u64)

Sync markers are not escaped out of payloads; the salvage reader
filters false positives by bounds checks and the CRC, so an invented
record requires a 2^-32 CRC collision.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Sequence

from .errors import (
    BadMagic,
    ColumnCountMismatch,
    CorruptFrame,
    CountMismatch,
    FrameTooLarge,
    MalformedRecord,
    MissingEndFrame,
    TooManyFields,
)
from .model import Row, Value

MAGIC = b"TDMP0001"
SYNC = b"\xd7\x41\x9a\x5c"

FRAME_HEADER = 0x48  # 'H'
FRAME_RECORD = 0x52  # 'R'
FRAME_END = 0x45  # 'E'
_FRAME_TYPES = (FRAME_HEADER, FRAME_RECORD, FRAME_END)

TAG_NULL = 0x00
TAG_INT = 0x01
TAG_FLOAT = 0x02
TAG_TEXT = 0x03
TAG_BYTES = 0x04

FORMAT_VERSION = 1
DEFAULT_MAX_FRAME_SIZE = 64 * 1024 * 1024

_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")
_I64 = struct.Struct("<q")
_F64 = struct.Struct("<d")

_I64_MIN = -(1 << 63)
_I64_MAX = (1 << 63) - 1


@dataclass(frozen=True)
class DumpFileHeader:
    """Per-file metadata: enough to restore the file on its own."""

    table_name: str
    insert_sql: str
    chunk_index: int
    column_count: int
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        if self.chunk_index < 1:
            raise ValueError("chunk_index is 1-based and must be >= 1")
        if self.column_count < 1:
            raise ValueError("column_count must be >= 1")


@dataclass(frozen=True)
class Frame:
    frame_type: int
    payload: bytes
    crc: int


@dataclass(frozen=True)
class SalvageReport:
    """What a best-effort read managed to pull out of a file."""

    records_recovered: int
    bytes_skipped: int
    header_found: bool
    end_frame_found: bool
    expected_records: int | None
    crc_rejections: int


def encode_record(row: Sequence[Value]) -> bytes:
    """Encode one row as a record-frame payload. Deterministic."""
    if len(row) > 0xFFFF:
        raise TooManyFields(f"{len(row)} fields exceed the 65535 limit")
    parts = [_U16.pack(len(row))]
    for v in row:
        if v is None:
            parts.append(b"\x00")
        elif isinstance(v, bool):
            raise TypeError("bool is not a dump value")
        elif isinstance(v, int):
            if not _I64_MIN <= v <= _I64_MAX:
                raise ValueError(f"integer {v} outside signed 64-bit range")
            parts.append(b"\x01" + _I64.pack(v))
        elif isinstance(v, float):
            parts.append(b"\x02" + _F64.pack(v))
        elif isinstance(v, str):
            raw = v.encode("utf-8")
            parts.append(b"\x03" + _U32.pack(len(raw)) + raw)
        elif isinstance(v, bytes):
            parts.append(b"\x04" + _U32.pack(len(v)) + v)
        else:
            raise TypeError(
                f"{type(v).__name__} is not a dump value "
                "(expected None, int, float, str, or bytes)"
            )
    return b"".join(parts)


def decode_record(payload: bytes) -> Row:
    """Inverse of encode_record; raises MalformedRecord on any garbage."""
    if len(payload) < 2:
        raise MalformedRecord("payload shorter than the field count")
    (count,) = _U16.unpack_from(payload, 0)
    pos = 2
    fields: list[Value] = []
    for _ in range(count):
        if pos >= len(payload):
            raise MalformedRecord(
                f"declares {count} fields, contains {len(fields)}"
            )
        tag = payload[pos]
        pos += 1
        if tag == TAG_NULL:
            fields.append(None)
        elif tag == TAG_INT:
            if pos + 8 > len(payload):
                raise MalformedRecord("truncated int field")
            fields.append(_I64.unpack_from(payload, pos)[0])
            pos += 8
        elif tag == TAG_FLOAT:
            if pos + 8 > len(payload):
                raise MalformedRecord("truncated float field")
            fields.append(_F64.unpack_from(payload, pos)[0])
            pos += 8
        elif tag in (TAG_TEXT, TAG_BYTES):
            if pos + 4 > len(payload):
                raise MalformedRecord("truncated length prefix")
            (n,) = _U32.unpack_from(payload, pos)
            pos += 4
            if pos + n > len(payload):
                raise MalformedRecord("field body extends past payload")
            raw = payload[pos:pos + n]
            pos += n
            if tag == TAG_TEXT:
                try:
                    fields.append(raw.decode("utf-8"))
                except UnicodeDecodeError as exc:
                    raise MalformedRecord(f"invalid UTF-8 in text field: {exc}")
            else:
                fields.append(raw)
        else:
            raise MalformedRecord(f"unknown tag 0x{tag:02X}")
    if pos != len(payload):
        raise MalformedRecord(f"{len(payload) - pos} trailing bytes")
    return tuple(fields)


def _encode_text(value: str) -> bytes:
    raw = value.encode("utf-8")
    return _U32.pack(len(raw)) + raw


def encode_header(header: DumpFileHeader) -> bytes:
    return (
        _U16.pack(header.format_version)
        + _U32.pack(header.chunk_index)
        + _U16.pack(header.column_count)
        + _encode_text(header.table_name)
        + _encode_text(header.insert_sql)
    )


def decode_header(payload: bytes) -> DumpFileHeader:
    def take_text(pos: int) -> tuple[str, int]:
        if pos + 4 > len(payload):
            raise MalformedRecord("truncated header text length")
        (n,) = _U32.unpack_from(payload, pos)
        pos += 4
        if pos + n > len(payload):
            raise MalformedRecord("header text extends past payload")
        try:
            return payload[pos:pos + n].decode("utf-8"), pos + n
        except UnicodeDecodeError as exc:
            raise MalformedRecord(f"invalid UTF-8 in header: {exc}")

    if len(payload) < 8:
        raise MalformedRecord("header payload too short")
    (version,) = _U16.unpack_from(payload, 0)
    if version != FORMAT_VERSION:
        raise MalformedRecord(f"unsupported format version {version}")
    (chunk_index,) = _U32.unpack_from(payload, 2)
    (column_count,) = _U16.unpack_from(payload, 6)
    table_name, pos = take_text(8)
    insert_sql, pos = take_text(pos)
    if pos != len(payload):
        raise MalformedRecord("trailing bytes in header payload")
    try:
        return DumpFileHeader(
            table_name=table_name,
            insert_sql=insert_sql,
            chunk_index=chunk_index,
            column_count=column_count,
        )
    except ValueError as exc:
        raise MalformedRecord(str(exc))


def _frame_bytes(frame_type: int, payload: bytes) -> bytes:
    head = bytes((frame_type,)) + _U32.pack(len(payload))
    crc = zlib.crc32(payload, zlib.crc32(head))
    return SYNC + head + payload + _U32.pack(crc)


def write_frame(
    sink: BinaryIO,
    frame_type: int,
    payload: bytes,
    max_frame_size: int = DEFAULT_MAX_FRAME_SIZE,
) -> None:
    if len(payload) > max_frame_size:
        raise FrameTooLarge(
            f"payload of {len(payload)} bytes exceeds {max_frame_size}"
        )
    sink.write(_frame_bytes(frame_type, payload))


def write_dump_file(
    sink: BinaryIO,
    header: DumpFileHeader,
    rows: Iterable[Sequence[Value]],
    max_frame_size: int = DEFAULT_MAX_FRAME_SIZE,
) -> int:
    """Write a complete dump file; returns the record count written."""
    sink.write(MAGIC)
    write_frame(sink, FRAME_HEADER, encode_header(header), max_frame_size)
    count = 0
    for ordinal, row in enumerate(rows, start=1):
        if len(row) != header.column_count:
            raise ColumnCountMismatch(ordinal, header.column_count, len(row))
        write_frame(sink, FRAME_RECORD, encode_record(row), max_frame_size)
        count += 1
    write_frame(sink, FRAME_END, _U64.pack(count), max_frame_size)
    sink.flush()
    return count


def _read_exact(source: BinaryIO, n: int) -> bytes | None:
    """Read exactly n bytes; b'' at clean EOF maps to None, short read raises."""
    data = source.read(n)
    if not data:
        return None
    if len(data) < n:
        raise MissingEndFrame("file truncated mid-frame")
    return data


def read_strict(
    source: BinaryIO,
    max_frame_size: int = DEFAULT_MAX_FRAME_SIZE,
) -> tuple[DumpFileHeader, list[Row]]:
    """All-or-nothing read: any malformed byte fails the whole file."""
    magic = source.read(len(MAGIC))
    if magic != MAGIC:
        raise BadMagic(f"expected {MAGIC!r} preamble, got {magic[:8]!r}")
    offset = len(MAGIC)
    header: DumpFileHeader | None = None
    rows: list[Row] = []

    while True:
        frame_offset = offset
        sync = _read_exact(source, 4)
        if sync is None:
            raise MissingEndFrame("file ended before the end frame")
        if sync != SYNC:
            raise CorruptFrame(frame_offset, f"bad sync marker {sync!r}")
        head = _read_exact(source, 5)
        if head is None:
            raise MissingEndFrame("file truncated mid-frame")
        frame_type = head[0]
        (payload_len,) = _U32.unpack_from(head, 1)
        if frame_type not in _FRAME_TYPES:
            raise CorruptFrame(frame_offset, f"unknown frame type 0x{frame_type:02X}")
        if payload_len > max_frame_size:
            raise CorruptFrame(
                frame_offset, f"frame length {payload_len} exceeds limit"
            )
        body = _read_exact(source, payload_len + 4)
        if body is None or len(body) < payload_len + 4:
            raise MissingEndFrame("file truncated mid-frame")
        payload, crc_bytes = body[:payload_len], body[payload_len:]
        (stored_crc,) = _U32.unpack(crc_bytes)
        if stored_crc != zlib.crc32(payload, zlib.crc32(head)):
            raise CorruptFrame(frame_offset, "CRC mismatch")
        offset = frame_offset + 4 + 5 + payload_len + 4

        if frame_type == FRAME_HEADER:
            if header is not None:
                raise CorruptFrame(frame_offset, "duplicate header frame")
            try:
                header = decode_header(payload)
            except MalformedRecord as exc:
                raise CorruptFrame(frame_offset, str(exc))
        elif frame_type == FRAME_RECORD:
            if header is None:
                raise CorruptFrame(frame_offset, "record frame before header")
            try:
                row = decode_record(payload)
            except MalformedRecord as exc:
                raise CorruptFrame(frame_offset, str(exc))
            if len(row) != header.column_count:
                raise CorruptFrame(
                    frame_offset,
                    f"record has {len(row)} fields, header declares "
                    f"{header.column_count}",
                )
            rows.append(row)
        else:  # FRAME_END
            if header is None:
                raise CorruptFrame(frame_offset, "end frame before header")
            if payload_len != 8:
                raise CorruptFrame(frame_offset, "malformed end payload")
            (declared,) = _U64.unpack(payload)
            if declared != len(rows):
                raise CountMismatch(
                    f"end frame declares {declared} records, file holds {len(rows)}"
                )
            if source.read(1):
                raise CorruptFrame(offset, "data after end frame")
            return header, rows


def _try_frame(
    data: bytes, start: int, max_frame_size: int
) -> tuple[int, object, int] | str:
    """Validate a candidate frame at a sync marker.

    Returns (frame_type, decoded_value, total_length) on acceptance, or
    a rejection reason: 'bounds', 'type', 'crc', or 'payload'.
    """
    if start + 9 > len(data):
        return "bounds"
    frame_type = data[start + 4]
    if frame_type not in _FRAME_TYPES:
        return "type"
    (payload_len,) = _U32.unpack_from(data, start + 5)
    if payload_len > max_frame_size:
        return "bounds"
    end = start + 9 + payload_len + 4
    if end > len(data):
        return "bounds"
    (stored_crc,) = _U32.unpack_from(data, start + 9 + payload_len)
    calculated = zlib.crc32(data[start + 4:start + 9 + payload_len])
    if stored_crc != calculated:
        return "crc"
    payload = data[start + 9:start + 9 + payload_len]
    try:
        if frame_type == FRAME_HEADER:
            value: object = decode_header(payload)
        elif frame_type == FRAME_RECORD:
            value = decode_record(payload)
        else:
            if payload_len != 8:
                return "payload"
            value = _U64.unpack(payload)[0]
    except MalformedRecord:
        return "payload"
    return frame_type, value, end - start


def read_salvage(
    source: BinaryIO,
    max_frame_size: int = DEFAULT_MAX_FRAME_SIZE,
) -> tuple[DumpFileHeader | None, list[Row], SalvageReport]:
    """Best-effort read of arbitrary bytes; never raises on corruption.

    Scans for sync markers; a candidate frame is accepted only if its
    length is in bounds, its CRC verifies, and its payload parses.  On
    rejection the scan resumes one byte past the candidate's sync.
    """
    data = source.read()
    pos = 0
    skipped = 0
    if data[:len(MAGIC)] == MAGIC:
        pos = len(MAGIC)

    header: DumpFileHeader | None = None
    rows: list[Row] = []
    end_found = False
    expected: int | None = None
    crc_rejections = 0

    while True:
        idx = data.find(SYNC, pos)
        if idx < 0:
            skipped += len(data) - pos
            break
        skipped += idx - pos
        outcome = _try_frame(data, idx, max_frame_size)
        if isinstance(outcome, str):
            if outcome == "crc":
                crc_rejections += 1
            skipped += 1
            pos = idx + 1
            continue
        frame_type, value, total = outcome
        if frame_type == FRAME_HEADER:
            if header is None:
                header = value  # first header wins
        elif frame_type == FRAME_RECORD:
            rows.append(value)
        else:
            if not end_found:
                end_found = True
                expected = value
        pos = idx + total

    report = SalvageReport(
        records_recovered=len(rows),
        bytes_skipped=skipped,
        header_found=header is not None,
        end_frame_found=end_found,
        expected_records=expected,
        crc_rejections=crc_rejections,
    )
    return header, rows, report
