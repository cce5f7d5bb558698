"""Parse ledger transactions and auxiliary series, and cut weekly windows.

Transactions arrive as UTF-8 CSV ``timestamp,sender,receiver,amount`` with
RFC 3339 timestamps. Bad lines never abort a lenient parse: they become
:class:`RecordError` entries in the :class:`ParseReport`. Strict mode turns
any record error into a :class:`ParseFailure`.
"""

import csv
import io
import json
import re
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from enum import Enum
from pathlib import Path
from typing import BinaryIO, Optional, Union

import numpy as np
import pandas as pd

from ledgertopo.config import (
    ISSUANCE_HEADER,
    MANIFEST_FILE,
    PRICE_HEADER,
    TRANSACTION_HEADER,
    TRENDS_HEADER,
)
from ledgertopo.utils.exceptions import (
    InputValidationError,
    ParseFailure,
    RecordError,
    WindowError,
)
from ledgertopo.utils.logging import get_logger

logger = get_logger(__name__)

WEEK = timedelta(days=7)
_OFFSET = re.compile(r"(Z|z|[+-]\d{2}:\d{2})$")


@dataclass(frozen=True)
class TransactionRecord:
    """One ledger transfer."""

    timestamp: datetime
    sender: str
    receiver: str
    amount: float


@dataclass(frozen=True)
class WeekWindow:
    """Transactions of the half-open week ``[start, end)``."""

    index: int
    start: datetime
    end: datetime
    records: tuple[TransactionRecord, ...] = ()


class SeriesKind(Enum):
    PRICE = "price"
    ISSUANCE = "issuance"
    SEARCH_FREQUENCY = "search-frequency"


@dataclass(frozen=True)
class TimeSeries:
    """Dated observations with strictly increasing dates."""

    kind: SeriesKind
    points: tuple[tuple[date, float], ...]
    term: Optional[str] = None

    def __post_init__(self) -> None:
        for (prev, _), (cur, _) in zip(self.points, self.points[1:]):
            if cur <= prev:
                raise InputValidationError(
                    f"{self.kind.value} series dates must be strictly increasing "
                    f"({prev} then {cur})",
                    field="date",
                    value=cur,
                    expected_type="strictly increasing dates",
                )


@dataclass(frozen=True)
class CsvFormat:
    """Format descriptor for a delimited transaction stream."""

    delimiter: str = ","
    encoding: str = "utf-8"
    header: tuple[str, ...] = TRANSACTION_HEADER


@dataclass
class ParseReport:
    """Records parsed from one stream plus the lines that were skipped."""

    records: list[TransactionRecord] = field(default_factory=list)
    errors: list[RecordError] = field(default_factory=list)

    @property
    def skipped(self) -> dict[str, int]:
        """Skipped line count per reason, e.g. ``{"self_transfer": 3}``."""
        return dict(sorted(Counter(e.reason for e in self.errors).items()))


def _record_error(line: int, reason: str, text: str) -> RecordError:
    return RecordError(f"line {line}: {text}", line_number=line, reason=reason)


def _decode_lines(raw: bytes, encoding: str) -> tuple[str, list[RecordError]]:
    """Decode ``raw`` one physical line at a time.

    A line that is not valid ``encoding`` becomes an empty line plus a
    ``bad_encoding`` error, so later line numbers stay aligned. ``encoding``
    must be ASCII-compatible.
    """
    parts: list[str] = []
    errors: list[RecordError] = []
    for number, chunk in enumerate(raw.splitlines(keepends=True), start=1):
        try:
            parts.append(chunk.decode(encoding))
        except UnicodeDecodeError as e:
            if number == 1:
                raise InputValidationError(
                    f"Header is not valid {encoding}",
                    field="header",
                    value=repr(chunk),
                ) from e
            text = f"not valid {encoding} at byte {e.start}"
            errors.append(_record_error(number, "bad_encoding", text))
            parts.append("\n")
    return "".join(parts), errors


def parse_transactions(
    stream: Union[BinaryIO, bytes],
    fmt: CsvFormat = CsvFormat(),
    strict: bool = False,
) -> ParseReport:
    """Parse a transaction CSV stream into timestamp-ordered records.

    Args:
        stream: Binary stream (or raw bytes) holding the CSV text
        fmt: Delimiter, encoding and expected header
        strict: Escalate any record error to :class:`ParseFailure`

    Returns:
        A report holding the valid records, sorted by timestamp (stable for
        equal timestamps), and one :class:`RecordError` per rejected line

    Raises:
        InputValidationError: If the header does not match ``fmt.header`` or
            cannot be decoded
        ParseFailure: In strict mode, if any line was rejected
    """
    raw = stream if isinstance(stream, bytes) else stream.read()
    decoded, errors = _decode_lines(raw, fmt.encoding)
    reader = csv.reader(io.StringIO(decoded, newline=""), delimiter=fmt.delimiter)

    header = next(reader, None)
    if header is None:
        return ParseReport()
    if tuple(h.strip() for h in header) != fmt.header:
        raise InputValidationError(
            f"Unexpected header {header}",
            field="header",
            value=",".join(header),
            expected_type=",".join(fmt.header),
        )

    lines: list[int] = []
    stamps: list[str] = []
    senders: list[str] = []
    receivers: list[str] = []
    amounts: list[str] = []

    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(fmt.header):
            errors.append(
                _record_error(line, "field_count", f"expected 4 fields, got {len(row)}")
            )
            continue
        stamp, sender, receiver, amount = (cell.strip() for cell in row)
        if not sender or not receiver:
            errors.append(_record_error(line, "missing_wallet", "empty wallet id"))
            continue
        if sender == receiver:
            errors.append(
                _record_error(line, "self_transfer", f"self-transfer by {sender}")
            )
            continue
        if not _OFFSET.search(stamp):
            errors.append(
                _record_error(line, "bad_timestamp", f"no UTC offset in {stamp!r}")
            )
            continue
        lines.append(line)
        stamps.append(stamp)
        senders.append(sender)
        receivers.append(receiver)
        amounts.append(amount)

    parsed_ts = pd.to_datetime(
        pd.Series(stamps, dtype=object), utc=True, errors="coerce", format="ISO8601"
    )
    parsed_amount = pd.to_numeric(pd.Series(amounts, dtype=object), errors="coerce")

    candidates: list[tuple[datetime, int, TransactionRecord]] = []
    for i, line in enumerate(lines):
        ts = parsed_ts.iloc[i]
        amount = float(parsed_amount.iloc[i])
        if pd.isna(ts):
            errors.append(
                _record_error(line, "bad_timestamp", f"unparseable {stamps[i]!r}")
            )
            continue
        if not np.isfinite(amount):
            errors.append(_record_error(line, "bad_amount", f"bad {amounts[i]!r}"))
            continue
        if amount <= 0:
            errors.append(
                _record_error(line, "non_positive_amount", f"amount {amounts[i]}")
            )
            continue
        instant = ts.to_pydatetime().astimezone(timezone.utc)
        record = TransactionRecord(instant, senders[i], receivers[i], amount)
        candidates.append((instant, line, record))

    errors.sort(key=lambda e: e.line_number)
    if errors:
        logger.warning(
            f"Skipped {len(errors)} malformed transaction line(s)",
            extra={"skipped": dict(Counter(e.reason for e in errors))},
        )
        if strict:
            raise ParseFailure(errors)

    candidates.sort(key=lambda item: (item[0], item[1]))
    return ParseReport(records=[c[2] for c in candidates], errors=errors)


def read_transactions(
    path: Path, fmt: CsvFormat = CsvFormat(), strict: bool = False
) -> ParseReport:
    """Parse a transaction CSV file."""
    with open(path, "rb") as f:
        report = parse_transactions(f, fmt, strict=strict)
    logger.info(f"Parsed {len(report.records)} transactions from {path}")
    return report


def format_instant(instant: datetime) -> str:
    """RFC 3339 text for a UTC instant, with a ``Z`` suffix."""
    return instant.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def format_transactions(records: Iterable[TransactionRecord]) -> str:
    """Serialize records to the CSV format read by :func:`parse_transactions`."""
    out = io.StringIO(newline="")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TRANSACTION_HEADER)
    for r in records:
        writer.writerow(
            [format_instant(r.timestamp), r.sender, r.receiver, repr(r.amount)]
        )
    return out.getvalue()


def default_anchor(records: Sequence[TransactionRecord]) -> datetime:
    """First Monday 00:00 UTC at or before the earliest record."""
    if not records:
        raise WindowError("Cannot derive a week anchor from an empty record list")
    earliest = min(r.timestamp for r in records).astimezone(timezone.utc)
    day = earliest.date() - timedelta(days=earliest.weekday())
    return datetime(day.year, day.month, day.day, tzinfo=timezone.utc)


def parse_anchor(text: str) -> datetime:
    """Parse an RFC 3339 anchor instant."""
    if not _OFFSET.search(text.strip()):
        raise InputValidationError(
            f"Anchor {text!r} has no UTC offset",
            field="anchor",
            value=text,
            expected_type="RFC 3339 instant, e.g. 2020-01-06T00:00:00Z",
        )
    stamp = pd.Timestamp(text.strip())
    return stamp.to_pydatetime().astimezone(timezone.utc)


class WeekCalendar:
    """Maps instants and dates to 0-based week ordinals from an anchor."""

    def __init__(self, anchor: datetime):
        if anchor.tzinfo is None:
            raise InputValidationError(
                "Week anchor must be timezone-aware",
                field="anchor",
                value=anchor,
                expected_type="UTC instant",
            )
        self.anchor = anchor.astimezone(timezone.utc)

    def week_of(self, instant: datetime) -> int:
        return int((instant - self.anchor) // WEEK)

    def week_of_date(self, day: date) -> int:
        midnight = datetime(day.year, day.month, day.day, tzinfo=timezone.utc)
        return self.week_of(midnight)

    def week_start(self, week: int) -> datetime:
        return self.anchor + week * WEEK

    def week_end_date(self, week: int) -> date:
        """Calendar date of the last day of ``week``."""
        return (self.week_start(week + 1) - timedelta(days=1)).date()


def partition_weeks(
    records: Sequence[TransactionRecord], anchor: Optional[datetime] = None
) -> list[WeekWindow]:
    """Split records into consecutive 7-day windows starting at ``anchor``.

    Args:
        records: Timestamp-sorted records
        anchor: Start of week 0; defaults to :func:`default_anchor`

    Returns:
        Windows 0..n-1 where n covers the last record; empty windows are kept

    Raises:
        WindowError: If a record lies before the anchor
    """
    if not records:
        return []
    calendar = WeekCalendar(anchor or default_anchor(records))

    buckets: dict[int, list[TransactionRecord]] = {}
    for record in records:
        week = calendar.week_of(record.timestamp)
        if week < 0:
            raise WindowError(
                f"Record at {format_instant(record.timestamp)} precedes anchor "
                f"{format_instant(calendar.anchor)}",
                suggestions=["Pass an earlier --anchor or omit it"],
            )
        buckets.setdefault(week, []).append(record)

    count = max(buckets) + 1
    return [
        WeekWindow(
            index=t,
            start=calendar.week_start(t),
            end=calendar.week_start(t + 1),
            records=tuple(buckets.get(t, ())),
        )
        for t in range(count)
    ]


def write_windows(
    windows: Sequence[WeekWindow], out_dir: Path, skipped: dict[str, int]
) -> Path:
    """Write one CSV per week plus a JSON manifest; return the manifest path."""
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for window in windows:
        name = f"week_{window.index:04d}.csv"
        text = format_transactions(window.records)
        (out_dir / name).write_text(text, encoding="utf-8")
        entries.append(
            {
                "week": window.index,
                "start": format_instant(window.start),
                "end": format_instant(window.end),
                "records": len(window.records),
                "file": name,
            }
        )
    manifest = {
        "anchor": format_instant(windows[0].start) if windows else None,
        "weeks": entries,
        "skipped": skipped,
    }
    path = out_dir / MANIFEST_FILE
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def _read_frame(path: Path, header: tuple[str, ...]) -> pd.DataFrame:
    frame = pd.read_csv(path, dtype={"term": str} if "term" in header else None)
    missing = [c for c in header if c not in frame.columns]
    if missing:
        raise InputValidationError(
            f"{path} lacks column(s) {', '.join(missing)}",
            field="header",
            value=",".join(frame.columns),
            expected_type=",".join(header),
        )
    frame["date"] = pd.to_datetime(frame["date"], errors="raise").dt.date
    return frame


def _series_from(
    frame: pd.DataFrame, column: str, kind: SeriesKind, term: Optional[str] = None
) -> TimeSeries:
    frame = frame.sort_values("date", kind="stable")
    dupes = frame["date"][frame["date"].duplicated()]
    if not dupes.empty:
        raise InputValidationError(
            f"Duplicate {kind.value} date {dupes.iloc[0]}",
            field="date",
            value=dupes.iloc[0],
            expected_type="unique dates",
        )
    values = frame[column].astype(float)
    if not np.isfinite(values.to_numpy()).all():
        raise InputValidationError(
            f"Non-finite value in {kind.value} series",
            field=column,
            expected_type="finite float",
        )
    points = tuple(zip(frame["date"].tolist(), values.tolist()))
    return TimeSeries(kind=kind, points=points, term=term)


def read_price_series(path: Path) -> TimeSeries:
    """Weekly end-of-week prices from ``date,price``."""
    return _series_from(_read_frame(path, PRICE_HEADER), "price", SeriesKind.PRICE)


def read_issuance_series(path: Path) -> TimeSeries:
    """Daily issuance from ``date,issuance_usd``."""
    frame = _read_frame(path, ISSUANCE_HEADER)
    return _series_from(frame, "issuance_usd", SeriesKind.ISSUANCE)


def read_trends_series(path: Path) -> dict[str, TimeSeries]:
    """Weekly search frequencies from ``date,term,frequency``, one series per term."""
    frame = _read_frame(path, TRENDS_HEADER)
    return {
        str(term): _series_from(group, "frequency", SeriesKind.SEARCH_FREQUENCY, term)
        for term, group in frame.groupby("term", sort=True)
    }


def weekly_values(series: TimeSeries, calendar: WeekCalendar) -> dict[int, float]:
    """Value per week ordinal; the last point of a week wins.

    Points dated before the anchor are dropped.
    """
    values: dict[int, float] = {}
    for day, value in series.points:
        week = calendar.week_of_date(day)
        if week >= 0:
            values[week] = value
    return values
