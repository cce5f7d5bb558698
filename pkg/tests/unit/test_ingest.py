"""Tests for transaction parsing, weekly windows and auxiliary series"""

import json
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

import numpy as np
import pytest

from ledgertopo.ingest import (
    SeriesKind,
    TimeSeries,
    WeekCalendar,
    default_anchor,
    format_transactions,
    parse_anchor,
    parse_transactions,
    partition_weeks,
    read_price_series,
    read_trends_series,
    weekly_values,
    write_windows,
)
from ledgertopo.utils.exceptions import (
    InputValidationError,
    ParseFailure,
    WindowError,
)
from tests.helpers.factories import ANCHOR, record

HEADER = "timestamp,sender,receiver,amount\n"


def csv_bytes(*lines: str) -> bytes:
    return (HEADER + "".join(line + "\n" for line in lines)).encode("utf-8")


class TestParseTransactions:
    """Parsing of the transaction CSV"""

    def test_single_record(self) -> None:
        """Test that a valid line becomes one record"""
        report = parse_transactions(csv_bytes("2020-01-06T00:00:00Z,A,B,5.0"))
        assert report.errors == []
        assert len(report.records) == 1
        r = report.records[0]
        assert r.timestamp == datetime(2020, 1, 6, tzinfo=timezone.utc)
        assert (r.sender, r.receiver, r.amount) == ("A", "B", 5.0)

    def test_offset_is_normalized_to_utc(self) -> None:
        """Test that a +02:00 timestamp is stored as its UTC instant"""
        report = parse_transactions(csv_bytes("2020-01-06T02:00:00+02:00,A,B,1"))
        assert report.records[0].timestamp == datetime(2020, 1, 6, tzinfo=timezone.utc)

    @pytest.mark.parametrize(
        "line,reason",
        [
            ("2020-01-06T00:00:00Z,A,A,5.0", "self_transfer"),
            ("2020-01-06T00:00:00Z,A,B,-1", "non_positive_amount"),
            ("2020-01-06T00:00:00Z,A,B,0", "non_positive_amount"),
            ("2020-01-06 00:00:00,A,B,5.0", "bad_timestamp"),
            ("not-a-dateZ,A,B,5.0", "bad_timestamp"),
            ("2020-01-06T00:00:00Z,A,B,abc", "bad_amount"),
            ("2020-01-06T00:00:00Z,A,B,nan", "bad_amount"),
            ("2020-01-06T00:00:00Z,A,B,inf", "bad_amount"),
            ("2020-01-06T00:00:00Z,A,B", "field_count"),
            ("2020-01-06T00:00:00Z,,B,5.0", "missing_wallet"),
        ],
    )
    def test_bad_line_is_skipped(self, line: str, reason: str) -> None:
        """Test that a malformed line is reported with its reason and line number"""
        report = parse_transactions(csv_bytes("2020-01-06T00:00:00Z,C,D,1.0", line))
        assert len(report.records) == 1
        assert len(report.errors) == 1
        assert report.errors[0].reason == reason
        assert report.errors[0].line_number == 3
        assert report.skipped == {reason: 1}

    def test_strict_mode_raises(self) -> None:
        """Test that strict mode turns record errors into ParseFailure"""
        data = csv_bytes(
            "2020-01-06T00:00:00Z,A,A,5.0",
            "2020-01-06T00:00:00Z,A,B,5.0",
            "2020-01-06T00:00:00Z,A,B,-2",
        )
        with pytest.raises(ParseFailure) as info:
            parse_transactions(data, strict=True)
        assert [e.line_number for e in info.value.errors] == [2, 4]

    def test_undecodable_line_is_skipped(self) -> None:
        """Test that invalid UTF-8 on one line only rejects that line"""
        data = (
            csv_bytes("2020-01-06T00:00:00Z,A,B,1.0")
            + b"2020-01-06T00:00:00Z,\xff\xfe,B,2.0\n"
            + "2020-01-07T00:00:00Z,Zo\u00eb,B,3.0\n".encode("utf-8")
        )
        report = parse_transactions(data)
        assert [r.amount for r in report.records] == [1.0, 3.0]
        assert report.records[1].sender == "Zo\u00eb"
        assert [(e.line_number, e.reason) for e in report.errors] == [
            (3, "bad_encoding")
        ]
        with pytest.raises(ParseFailure) as info:
            parse_transactions(data, strict=True)
        assert info.value.errors[0].reason == "bad_encoding"

    def test_undecodable_header(self) -> None:
        with pytest.raises(InputValidationError):
            parse_transactions(b"\xfftimestamp,sender,receiver,amount\n")

    def test_records_are_sorted_stably(self) -> None:
        """Test timestamp order with ties kept in line order"""
        report = parse_transactions(
            csv_bytes(
                "2020-01-08T00:00:00Z,A,B,1",
                "2020-01-06T00:00:00Z,C,D,2",
                "2020-01-06T00:00:00Z,E,F,3",
            )
        )
        assert [r.amount for r in report.records] == [2.0, 3.0, 1.0]

    def test_wrong_header(self) -> None:
        """Test that an unexpected header is rejected"""
        with pytest.raises(InputValidationError):
            parse_transactions(b"time,from,to,value\n2020-01-06T00:00:00Z,A,B,1\n")

    def test_empty_stream(self) -> None:
        """Test that an empty stream yields an empty report"""
        report = parse_transactions(b"")
        assert report.records == [] and report.errors == []

    def test_format_and_parse_round_trip(self) -> None:
        """Test that serialized records parse back to the same records"""
        rng = np.random.default_rng(3)
        records = sorted(
            (
                record(
                    float(rng.integers(0, 40 * 86400)) / 86400,
                    f"w{rng.integers(0, 9)}",
                    f"x{rng.integers(0, 9)}",
                    float(rng.uniform(0.001, 1e6)),
                )
                for _ in range(50)
            ),
            key=lambda r: r.timestamp,
        )
        parsed = parse_transactions(format_transactions(records).encode("utf-8"))
        assert parsed.errors == []
        assert sorted(parsed.records, key=repr) == sorted(records, key=repr)


class TestWeeks:
    """Week calendar and partitioning"""

    def test_partition_example(self) -> None:
        """Test that days 0, 3 and 8 fall into two windows of 2 and 1 records"""
        records = [
            record(0, "A", "B", 1),
            record(3, "B", "C", 1),
            record(8, "C", "D", 1),
        ]
        windows = partition_weeks(records, ANCHOR)
        assert [len(w.records) for w in windows] == [2, 1]
        assert windows[1].start == ANCHOR + timedelta(weeks=1)

    def test_week_boundary_belongs_to_next_week(self) -> None:
        """Test that windows are half-open"""
        windows = partition_weeks([record(7, "A", "B", 1)], ANCHOR)
        assert len(windows) == 2
        assert windows[0].records == ()
        assert len(windows[1].records) == 1

    def test_empty_input(self) -> None:
        """Test that no records give no windows"""
        assert partition_weeks([], ANCHOR) == []

    def test_record_before_anchor(self) -> None:
        """Test that a record before the anchor is an error"""
        with pytest.raises(WindowError):
            partition_weeks([record(-1, "A", "B", 1)], ANCHOR)

    def test_partition_covers_every_record_once(self) -> None:
        """Test that windows partition the input and bound their records"""
        rng = np.random.default_rng(11)
        records = sorted(
            (record(float(d), "A", "B", 1.0) for d in rng.uniform(0, 90, size=200)),
            key=lambda r: r.timestamp,
        )
        windows = partition_weeks(records, ANCHOR)
        flattened = [r for w in windows for r in w.records]
        assert flattened == records
        for w in windows:
            assert all(w.start <= r.timestamp < w.end for r in w.records)
            assert w.end - w.start == timedelta(weeks=1)

    def test_default_anchor_is_previous_monday(self) -> None:
        """Test that the default anchor is Monday 00:00 UTC before the first record"""
        earliest = datetime(2020, 1, 8, 15, 0, tzinfo=timezone.utc)
        anchor = default_anchor([record(0, "A", "B", 1, anchor=earliest)])
        assert anchor == datetime(2020, 1, 6, tzinfo=timezone.utc)

    def test_parse_anchor_requires_offset(self) -> None:
        """Test that an anchor without UTC offset is rejected"""
        assert parse_anchor("2020-01-06T00:00:00Z") == ANCHOR
        with pytest.raises(InputValidationError):
            parse_anchor("2020-01-06T00:00:00")

    def test_calendar(self) -> None:
        """Test week ordinals and end dates"""
        calendar = WeekCalendar(ANCHOR)
        assert calendar.week_of(ANCHOR + timedelta(days=13)) == 1
        assert calendar.week_of_date(date(2020, 1, 5)) == -1
        assert calendar.week_end_date(0) == date(2020, 1, 12)
        with pytest.raises(InputValidationError):
            WeekCalendar(datetime(2020, 1, 6))

    def test_write_windows(self, tmp_path: Path) -> None:
        """Test week files and the manifest"""
        records = [record(0, "A", "B", 2.5), record(9, "B", "A", 1)]
        windows = partition_weeks(records, ANCHOR)
        manifest = write_windows(windows, tmp_path, {"self_transfer": 2})
        data = json.loads(manifest.read_text())
        assert data["anchor"] == "2020-01-06T00:00:00Z"
        assert [w["records"] for w in data["weeks"]] == [1, 1]
        assert data["skipped"] == {"self_transfer": 2}
        week0 = parse_transactions((tmp_path / "week_0000.csv").read_bytes())
        assert week0.records == list(windows[0].records)


class TestSeries:
    """Price, issuance and search-frequency series"""

    def test_dates_must_increase(self) -> None:
        """Test that out-of-order points are rejected"""
        with pytest.raises(InputValidationError):
            TimeSeries(
                SeriesKind.PRICE, ((date(2020, 1, 2), 1.0), (date(2020, 1, 1), 2.0))
            )

    def test_weekly_values_last_point_wins(self) -> None:
        """Test that the last point of a week is its value and early points drop"""
        series = TimeSeries(
            SeriesKind.PRICE,
            (
                (date(2020, 1, 1), 9.0),
                (date(2020, 1, 6), 1.0),
                (date(2020, 1, 12), 2.0),
                (date(2020, 1, 13), 3.0),
            ),
        )
        assert weekly_values(series, WeekCalendar(ANCHOR)) == {0: 2.0, 1: 3.0}

    def test_read_price_series(self, tmp_path: Path) -> None:
        """Test reading a price CSV and rejecting duplicate dates"""
        path = tmp_path / "price.csv"
        path.write_text("date,price\n2020-01-12,5.0\n2020-01-19,5.5\n")
        series = read_price_series(path)
        assert series.points == ((date(2020, 1, 12), 5.0), (date(2020, 1, 19), 5.5))

        path.write_text("date,price\n2020-01-12,5.0\n2020-01-12,5.5\n")
        with pytest.raises(InputValidationError):
            read_price_series(path)

    def test_read_trends_series(self, tmp_path: Path) -> None:
        """Test one series per search term"""
        path = tmp_path / "trends.csv"
        path.write_text(
            "date,term,frequency\n"
            "2020-01-06,democrats,40\n2020-01-06,republicans,35\n"
            "2020-01-13,democrats,42\n2020-01-13,republicans,33\n"
        )
        series = read_trends_series(path)
        assert sorted(series) == ["democrats", "republicans"]
        assert [v for _, v in series["democrats"].points] == [40.0, 42.0]

    def test_missing_column(self, tmp_path: Path) -> None:
        """Test that a CSV without the expected columns is rejected"""
        path = tmp_path / "price.csv"
        path.write_text("day,value\n2020-01-12,5.0\n")
        with pytest.raises(InputValidationError):
            read_price_series(path)
