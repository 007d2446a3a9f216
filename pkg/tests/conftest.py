"""Shared fixtures: the currency-rate golden table and helpers.

The golden dataset is 13 currency conversion rows inserted with float64
source literals into a 32-bit float column; the expected dumped values
are the float32-widened doubles, frozen here as exact literals, plus
dates text-cast to the 24-character `YYYY-MM-DD HH:MM:SS.NNNN` form.
"""

from __future__ import annotations

import datetime
from collections import Counter
from pathlib import Path

import pytest

from tabledump import (
    ChunkPolicy,
    ColumnSchema,
    MemoryDatabase,
    TableSchema,
    TableSpec,
    dump_table,
    row_key,
)

CROSS_RATE_SCHEMA = TableSchema(
    name="cross_rate",
    columns=(
        ColumnSchema("from_currency", "text"),
        ColumnSchema("to_currency", "text"),
        ColumnSchema("conv_rate", "float32"),
        ColumnSchema("update_date", "date"),
    ),
    primary_key=("from_currency", "to_currency"),
)

CROSS_RATE_SELECT = (
    "select from_currency, to_currency, conv_rate, "
    "cast(update_date as char(24)) from cross_rate"
)
CROSS_RATE_INSERT = (
    "insert into cross_rate (from_currency, to_currency, conv_rate, "
    "update_date) values (?, ?, ?, ?)"
)
CROSS_RATE_SPEC = TableSpec("cross_rate", CROSS_RATE_SELECT, CROSS_RATE_INSERT)

CROSS_RATE_PLAN_TEXT = (
    "# currency conversion table\n"
    f"table: cross_rate\n"
    f"select: {CROSS_RATE_SELECT}\n"
    f"insert: {CROSS_RATE_INSERT}\n"
)

_DATE = datetime.date(1993, 11, 22)

# (from, to, rate literal as inserted) in insertion order.
CROSS_RATE_SOURCE = [
    ("Dollar", "CdnDlr", 1.3273),
    ("Dollar", "FFranc", 5.9193),
    ("Dollar", "D-Mark", 1.7038),
    ("Dollar", "Lira", 1680.0),
    ("Dollar", "Yen", 108.43),
    ("Dollar", "Guilder", 1.9115),
    ("Dollar", "SFranc", 1.4945),
    ("Dollar", "Pound", 0.67774),
    ("Pound", "FFranc", 8.734),
    ("Pound", "Yen", 159.99),
    ("Yen", "Pound", 0.00625),
    ("CdnDlr", "Dollar", 0.75341),
    ("CdnDlr", "FFranc", 4.4597),
]

# The same rows as they must appear in the dump: 32-bit floats widened
# to binary64.
_WIDENED = [
    1.327299952507019,
    5.9193000793457031,
    1.7037999629974365,
    1680.0,
    108.43000030517578,
    1.9114999771118164,
    1.4945000410079956,
    0.67773997783660889,
    8.7340002059936523,
    159.99000549316406,
    0.0062500000931322575,
    0.7534099817276001,
    4.4597001075744629,
]

DATE_TEXT = "1993-11-22 00:00:00.0000"

CROSS_RATE_EXPECTED = [
    (src[0], src[1], widened, DATE_TEXT)
    for src, widened in zip(CROSS_RATE_SOURCE, _WIDENED)
]


def multiset(rows) -> Counter:
    return Counter(row_key(r) for r in rows)


def make_cross_rate_db() -> MemoryDatabase:
    """Fresh database with the golden table populated via inserts."""
    db = MemoryDatabase([CROSS_RATE_SCHEMA])
    conn = db.connect()
    for from_cur, to_cur, rate in CROSS_RATE_SOURCE:
        conn.insert(CROSS_RATE_INSERT, (from_cur, to_cur, rate, _DATE))
    conn.commit()
    conn.close()
    return db


def empty_cross_rate_db() -> MemoryDatabase:
    return MemoryDatabase([CROSS_RATE_SCHEMA])


@pytest.fixture
def cross_rate_db() -> MemoryDatabase:
    return make_cross_rate_db()


@pytest.fixture
def golden_dump_file(cross_rate_db, tmp_path) -> Path:
    """`cross_rate.1.dump` holding the 13 golden records."""
    conn = cross_rate_db.connect()
    report = dump_table(conn, CROSS_RATE_SPEC, ChunkPolicy(500_000), tmp_path)
    conn.close()
    (path, count) = report.files[0]
    assert count == 13
    return path
