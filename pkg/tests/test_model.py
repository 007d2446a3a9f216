"""Value semantics, plan types, and plan-file parsing."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tabledump import (
    ChunkPolicy,
    CommitPolicy,
    DumpPlan,
    TableSpec,
    parse_plan,
    render_plan,
    row_equal,
    row_key,
    value_equal,
)
from tabledump.errors import MalformedPlan
from tabledump.model import count_placeholders


class TestValueEquality:
    def test_floats_compare_by_bit_pattern(self):
        assert value_equal(1.5, 1.5)
        assert not value_equal(0.0, -0.0)
        assert value_equal(float("nan"), float("nan"))

    def test_int_and_float_are_distinct(self):
        assert not value_equal(1, 1.0)
        assert not value_equal(0, None)

    def test_text_bytes_distinct(self):
        assert not value_equal("a", b"a")
        assert value_equal(b"a", b"a")

    def test_row_equal(self):
        assert row_equal((1, "x", None), (1, "x", None))
        assert not row_equal((1,), (1, 2))
        assert not row_equal((1.0,), (1,))

    def test_row_key_hashable_and_distinguishing(self):
        assert row_key((1,)) != row_key((1.0,))
        assert row_key((float("nan"),)) == row_key((float("nan"),))
        assert row_key((0.0,)) != row_key((-0.0,))
        {row_key((None, b"x", "x", 1, 1.0)): True}

    @given(st.floats(allow_nan=True, allow_infinity=True))
    def test_value_equal_reflexive_on_floats(self, x):
        assert value_equal(x, x)
        if not math.isnan(x):
            assert x == x


class TestSpecTypes:
    def test_table_name_must_be_filename_safe(self):
        with pytest.raises(ValueError):
            TableSpec("", "select 1", "insert into t values (?)")
        with pytest.raises(ValueError):
            TableSpec("a/b", "select 1", "insert into t values (?)")

    def test_plan_rejects_duplicate_names(self):
        spec = TableSpec("t1", "select a from t1", "insert into t1 (a) values (?)")
        with pytest.raises(ValueError):
            DumpPlan((spec, spec))

    def test_chunk_policy_bounds(self):
        assert ChunkPolicy().records_per_file == 500_000
        with pytest.raises(ValueError):
            ChunkPolicy(0)

    def test_commit_policy_parse(self):
        assert CommitPolicy.parse("record") == CommitPolicy.per_record()
        assert CommitPolicy.parse("batch:10").batch_size == 10
        assert CommitPolicy.parse("file").batch_size is None
        assert CommitPolicy.per_record() == CommitPolicy.per_batch(1)
        for bad in ("batch:0", "batch:x", "never", "batch:"):
            with pytest.raises(ValueError):
                CommitPolicy.parse(bad)

    def test_commit_policy_str_roundtrip(self):
        for text in ("record", "batch:7", "file"):
            assert str(CommitPolicy.parse(text)) == text


GOLDEN_ENTRY = (
    "table: cross_rate\n"
    "select: select from_currency, to_currency, conv_rate, "
    "cast(update_date as char(24)) from cross_rate\n"
    "insert: insert into cross_rate (from_currency, to_currency, conv_rate, "
    "update_date) values (?, ?, ?, ?)\n"
)


class TestParsePlan:
    def test_single_entry(self):
        plan = parse_plan(GOLDEN_ENTRY)
        assert len(plan) == 1
        spec = plan.tables[0]
        assert spec.table_name == "cross_rate"
        assert spec.select_sql.startswith("select from_currency")
        assert spec.insert_sql.endswith("values (?, ?, ?, ?)")

    def test_empty_file_rejected(self):
        with pytest.raises(MalformedPlan):
            parse_plan("")
        with pytest.raises(MalformedPlan):
            parse_plan("\n\n# only a comment\n")

    def test_duplicate_table_rejected(self):
        text = (
            "table: t1\nselect: select a from t1\ninsert: insert into t1 (a) values (?)\n"
            "\n"
            "table: t1\nselect: select a from t1\ninsert: insert into t1 (a) values (?)\n"
        )
        with pytest.raises(MalformedPlan, match="duplicate"):
            parse_plan(text)

    def test_missing_key_reports_line(self):
        text = "table: t1\nselect: select a from t1\n\ntable: t2\n"
        with pytest.raises(MalformedPlan) as info:
            parse_plan(text)
        assert info.value.line == 3

    def test_wrong_order_rejected(self):
        text = "select: select a from t1\ntable: t1\ninsert: insert into t1 (a) values (?)\n"
        with pytest.raises(MalformedPlan, match="expected 'table: '"):
            parse_plan(text)

    def test_empty_value_rejected(self):
        with pytest.raises(MalformedPlan, match="empty value"):
            parse_plan("table: \nselect: s\ninsert: i\n")

    def test_comments_and_blank_lines_ignored(self):
        text = "# heading\n\n" + GOLDEN_ENTRY + "\n# trailing\n"
        assert len(parse_plan(text)) == 1

    def test_multiple_entries_preserve_order(self):
        entries = "\n".join(
            f"table: t{i}\nselect: select a from t{i}\n"
            f"insert: insert into t{i} (a) values (?)\n"
            for i in range(5)
        )
        plan = parse_plan(entries)
        assert [s.table_name for s in plan] == [f"t{i}" for i in range(5)]


_name = st.from_regex(r"[A-Za-z][A-Za-z0-9_]{0,15}", fullmatch=True)
# Values must survive the parser's per-line strip, hence the anchor char.
_sql = st.text(
    alphabet=st.characters(blacklist_characters="\n\r", blacklist_categories=("Cs",)),
    max_size=60,
).map(lambda s: ("q" + s).strip())


@st.composite
def plans(draw):
    n = draw(st.integers(min_value=1, max_value=5))
    names = draw(
        st.lists(_name, min_size=n, max_size=n, unique=True)
    )
    return DumpPlan(
        tuple(
            TableSpec(name, draw(_sql), draw(_sql)) for name in names
        )
    )


class TestPlanRoundtrip:
    @given(plans())
    def test_parse_inverts_render(self, plan):
        assert parse_plan(render_plan(plan)) == plan

    def test_render_rejects_newlines(self):
        spec = TableSpec("t1", "select\na", "insert into t1 values (?)")
        with pytest.raises(ValueError):
            render_plan(DumpPlan((spec,)))


class TestPlaceholderCounting:
    def test_counts_bare_question_marks(self):
        assert count_placeholders("insert into t values (?, ?, ?)") == 3
        assert count_placeholders("select 1") == 0

    def test_ignores_quoted_literals(self):
        assert count_placeholders("insert into t values ('?', ?)") == 1
        assert count_placeholders("insert into t values ('it''s ?', ?, ?)") == 2
