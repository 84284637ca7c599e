"""Raw meter CSV parsing and assembly into canonical per-account series.

Input format: UTF-8 CSV with header ``account_id,timestamp,energy_kwh``,
timestamps ISO-8601 at minute resolution without a zone offset, ``.`` as
the decimal separator.
"""

from __future__ import annotations

import csv
import io
import logging
from collections import Counter, defaultdict
from datetime import datetime, timedelta
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import (
    BadTimestamp,
    EmptyAccount,
    IrregularInterval,
    MissingHeader,
    NegativeEnergy,
    NonNumericEnergy,
)
from .series import VALID_INTERVALS, QualityFlag, RawReading, ReadingSeries

logger = logging.getLogger(__name__)

HEADER = ("account_id", "timestamp", "energy_kwh")


def _open_text(source) -> IO[str]:
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline="")
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, io.RawIOBase) or isinstance(source, io.BufferedIOBase):
        return io.TextIOWrapper(source, encoding="utf-8", newline="")
    return source  # already a text stream


def _parse_timestamp(text: str, line: int) -> datetime:
    try:
        ts = datetime.fromisoformat(text)
    except ValueError:
        raise BadTimestamp(line, f"cannot parse timestamp {text!r}") from None
    if ts.tzinfo is not None:
        raise BadTimestamp(line, f"timestamp {text!r} carries a zone offset")
    if ts.second or ts.microsecond:
        raise BadTimestamp(line, f"timestamp {text!r} has sub-minute components")
    return ts


def parse_csv(source) -> list[RawReading]:
    """Parse a raw meter CSV into readings, in file order.

    ``source`` may be a path, bytes, or an open (text or binary) stream.
    The first malformed row aborts the parse; the raised error carries the
    1-based line number.
    """
    stream = _open_text(source)
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise MissingHeader("input is empty; expected header "
                            + ",".join(HEADER)) from None
    if tuple(h.strip() for h in header) != HEADER:
        raise MissingHeader(f"expected header {','.join(HEADER)}, got {','.join(header)!r}")

    readings: list[RawReading] = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) < 2 or not row[1].strip():
            raise BadTimestamp(line, "missing timestamp field")
        if len(row) < 3 or not row[2].strip():
            raise NonNumericEnergy(line, "missing energy field")
        account_id = row[0].strip()
        ts = _parse_timestamp(row[1].strip(), line)
        try:
            energy = float(row[2])
        except ValueError:
            raise NonNumericEnergy(line, f"cannot parse energy {row[2]!r}") from None
        if not np.isfinite(energy):
            raise NonNumericEnergy(line, f"non-finite energy {row[2]!r}")
        if energy < 0:
            raise NegativeEnergy(line, f"negative energy {energy}")
        readings.append(RawReading(account_id, ts, energy))
    return readings


def _modal_gap_minutes(times: Sequence[datetime]) -> int | None:
    if len(times) < 2:
        return None
    gaps = Counter()
    minute = timedelta(minutes=1)
    for a, b in zip(times, times[1:]):
        gaps[(b - a) // minute] += 1
    # deterministic: most frequent gap, ties to the smaller one
    best = max(gaps.items(), key=lambda kv: (kv[1], -kv[0]))
    return int(best[0])


def assemble_series(
    readings: Iterable[RawReading],
    default_interval: int = 60,
) -> list[ReadingSeries]:
    """Group readings per account into gapless series on the inferred grid.

    The interval is the modal gap between consecutive timestamps and must be
    15 or 60 minutes; an account with a single reading falls back to
    ``default_interval``. Absent slots are materialized with flag MISSING and
    value 0. Duplicate timestamps keep the last occurrence (a warning is
    logged). Output is sorted by account id.
    """
    by_account: dict[str, dict[datetime, float]] = defaultdict(dict)
    dup_counts: Counter = Counter()
    total = 0
    for r in readings:
        total += 1
        slots = by_account[r.account_id]
        if r.timestamp in slots:
            dup_counts[r.account_id] += 1
        slots[r.timestamp] = r.energy_kwh
    if total == 0:
        raise EmptyAccount("no readings to assemble")
    for account_id, dups in sorted(dup_counts.items()):
        logger.warning("account %s: %d duplicate timestamps, kept last occurrence",
                       account_id, dups)

    out: list[ReadingSeries] = []
    for account_id in sorted(by_account):
        slots = by_account[account_id]
        times = sorted(slots)
        interval = _modal_gap_minutes(times)
        if interval is None:
            interval = default_interval
        if interval not in VALID_INTERVALS:
            raise IrregularInterval(account_id, f"modal gap {interval} min not in {VALID_INTERVALS}")
        start = times[0]
        span_minutes = (times[-1] - start) // timedelta(minutes=1)
        n_slots = span_minutes // interval + 1
        values = np.zeros(n_slots, dtype=np.float64)
        flags = np.full(n_slots, QualityFlag.MISSING, dtype=np.uint8)
        for ts in times:
            offset = (ts - start) // timedelta(minutes=1)
            q, r = divmod(offset, interval)
            if r != 0:
                raise IrregularInterval(
                    account_id, f"{ts.isoformat()} off the {interval}-minute grid")
            values[q] = slots[ts]
            flags[q] = QualityFlag.OBSERVED
        out.append(ReadingSeries(account_id, interval, start, values, flags))
    return out
