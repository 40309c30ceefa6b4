"""Flight-plan transit records: parsing, validation, canonical dump, grouping."""
from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from datetime import date, datetime
from typing import IO, Iterable, Mapping, NamedTuple

from .errors import ConfigError

REQUIRED_FIELDS = ("date", "entry_point", "exit_point", "entry_time")
OPTIONAL_FIELDS = ("aircraft_type", "flight_code", "origin", "destination")
CANONICAL_COLUMNS = (
    "date",
    "entry_time",
    "entry_point",
    "exit_point",
    "aircraft_type",
    "flight_code",
    "origin",
    "destination",
)


@dataclass(frozen=True, slots=True)
class FlightRecord:
    registration_date: date
    entry_point: str
    exit_point: str
    entry_time: datetime
    aircraft_type: str = ""
    flight_code: str = ""
    origin: str = ""
    destination: str = ""


class RouteKey(NamedTuple):
    entry_point: str
    exit_point: str

    def __str__(self) -> str:
        return f"{self.entry_point}-{self.exit_point}"

    @classmethod
    def parse(cls, text: str) -> "RouteKey":
        """Parse ``"ENTRY-EXIT"`` (or ``ENTRY:EXIT``)."""
        for sep in (":", "-"):
            if sep in text:
                a, b = text.split(sep, 1)
                if a.strip() and b.strip():
                    return cls(a.strip(), b.strip())
        raise ConfigError(f"route must look like ENTRY-EXIT, got {text!r}")


@dataclass
class ParseReport:
    accepted: int = 0
    rejected: int = 0
    rejections: list[tuple[int, str]] = field(default_factory=list)
    warnings: list[tuple[int, str]] = field(default_factory=list)

    def reject(self, line_no: int, reason: str) -> None:
        self.rejected += 1
        self.rejections.append((line_no, reason))

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "rejected": self.rejected,
            "rejections": [{"line": n, "reason": r} for n, r in self.rejections],
            "warnings": [{"line": n, "message": m} for n, m in self.warnings],
        }


@dataclass(frozen=True)
class Schema:
    """Maps record fields to input columns.

    A column is given either by header name or by zero-based index. Fields
    absent from ``columns`` are looked up under their own name.
    """

    columns: Mapping[str, str | int] = field(default_factory=dict)
    delimiter: str | None = None  # None: sniff ',' vs ';' from the header

    def resolve(self, header: list[str]) -> dict[str, int]:
        names = {h.strip(): i for i, h in enumerate(header)}
        out: dict[str, int] = {}
        for fname in REQUIRED_FIELDS + OPTIONAL_FIELDS:
            col = self.columns.get(fname, fname)
            if isinstance(col, int):
                if not 0 <= col < len(header):
                    if fname in REQUIRED_FIELDS:
                        raise ConfigError(f"column index {col} for {fname!r} out of range")
                    continue
                out[fname] = col
            elif col in names:
                out[fname] = names[col]
            elif fname in REQUIRED_FIELDS:
                raise ConfigError(
                    f"required column {col!r} (field {fname!r}) not in header {header}"
                )
        return out


def route_key(record: FlightRecord) -> RouteKey:
    return RouteKey(record.entry_point, record.exit_point)


def _sniff_delimiter(header_line: str) -> str:
    return ";" if header_line.count(";") > header_line.count(",") else ","


def _parse_time(text: str, reg_date: date) -> datetime:
    text = text.strip()
    if len(text) <= 5 and ":" in text:
        hh, mm = text.split(":")
        return datetime.combine(reg_date, datetime.min.time()).replace(
            hour=int(hh), minute=int(mm)
        )
    ts = datetime.fromisoformat(text).replace(second=0, microsecond=0, tzinfo=None)
    if ts.date() != reg_date:
        raise ValueError("entry_time date mismatch")
    return ts


def _parse_row(row: list[str], cols: dict[str, int]) -> FlightRecord:
    def get(name: str) -> str:
        i = cols.get(name)
        if i is None or i >= len(row):
            return ""
        return row[i].strip()

    for name in ("entry_point", "exit_point", "date", "entry_time"):
        if not get(name):
            raise ValueError(f"missing {name}")
    try:
        reg = date.fromisoformat(get("date"))
    except ValueError:
        raise ValueError(f"bad date {get('date')!r}") from None
    try:
        ts = _parse_time(get("entry_time"), reg)
    except ValueError as exc:
        if "mismatch" in str(exc):
            raise
        raise ValueError(f"bad entry_time {get('entry_time')!r}") from None
    return FlightRecord(
        registration_date=reg,
        entry_point=get("entry_point"),
        exit_point=get("exit_point"),
        entry_time=ts,
        aircraft_type=get("aircraft_type"),
        flight_code=get("flight_code"),
        origin=get("origin"),
        destination=get("destination"),
    )


def parse_records(
    source: str | os.PathLike | IO[str], schema: Schema | None = None
) -> tuple[list[FlightRecord], ParseReport]:
    """Parse delimited text with a header row into records sorted by entry time.

    Malformed lines are rejected with a reason and parsing continues. A path
    that cannot be read raises ``OSError``; a schema that does not fit the
    header raises ``ConfigError``.
    """
    schema = schema or Schema()
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8", newline="") as fh:
            text = fh.read()
    else:
        text = source.read()
    lines = text.splitlines()
    report = ParseReport()
    if not lines:
        return [], report
    delim = schema.delimiter or _sniff_delimiter(lines[0])
    header = next(csv.reader([lines[0]], delimiter=delim))
    cols = schema.resolve(header)

    records = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            report.reject(line_no, "empty line")
            continue
        row = next(csv.reader([line], delimiter=delim))
        try:
            rec = _parse_row(row, cols)
        except ValueError as exc:
            report.reject(line_no, str(exc))
            continue
        if rec.entry_point == rec.exit_point:
            report.warnings.append((line_no, f"entry_point equals exit_point ({rec.entry_point})"))
        records.append(rec)
        report.accepted += 1
    records.sort(key=lambda r: r.entry_time)
    return records, report


def format_row(rec: FlightRecord) -> list[str]:
    return [
        rec.registration_date.isoformat(),
        rec.entry_time.strftime("%H:%M"),
        rec.entry_point,
        rec.exit_point,
        rec.aircraft_type,
        rec.flight_code,
        rec.origin,
        rec.destination,
    ]


def write_canonical(records: Iterable[FlightRecord], out: IO[str]) -> None:
    """Write records in the fixed canonical column order (default-schema input)."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CANONICAL_COLUMNS)
    for rec in records:
        w.writerow(format_row(rec))


def canonical_csv(records: Iterable[FlightRecord]) -> str:
    buf = io.StringIO()
    write_canonical(records, buf)
    return buf.getvalue()


def group_by_route(records: Iterable[FlightRecord]) -> dict[RouteKey, list[FlightRecord]]:
    groups: dict[RouteKey, list[FlightRecord]] = {}
    for rec in records:
        groups.setdefault(route_key(rec), []).append(rec)
    return groups
