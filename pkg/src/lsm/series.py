"""Core domain types: per-slot quality flags and uniformly spaced reading series.

A :class:`ReadingSeries` is one account's meter readings on a fixed 15- or
60-minute grid. Slot ``i`` is labeled ``start + i * interval``; holes are
explicit slots flagged ``MISSING`` (value 0), never implicit, so every
downstream pass can index by position.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from enum import IntEnum

import numpy as np


class QualityFlag(IntEnum):
    """Per-slot data quality. Numeric order doubles as severity order."""

    OBSERVED = 0
    INTERPOLATED = 1
    YEAR_AVERAGED = 2
    ESTIMATED = 3
    MISSING = 4


_FLAG_TEXT = {
    QualityFlag.OBSERVED: "Observed",
    QualityFlag.INTERPOLATED: "Interpolated",
    QualityFlag.YEAR_AVERAGED: "YearAveraged",
    QualityFlag.ESTIMATED: "Estimated",
    QualityFlag.MISSING: "Missing",
}
_TEXT_FLAG = {text: flag for flag, text in _FLAG_TEXT.items()}

VALID_INTERVALS = (15, 60)


def flag_name(flag: int) -> str:
    return _FLAG_TEXT[QualityFlag(flag)]


def flag_from_name(name: str) -> QualityFlag:
    try:
        return _TEXT_FLAG[name]
    except KeyError:
        raise ValueError(f"unknown quality flag {name!r}") from None


@dataclass(frozen=True)
class RawReading:
    """One meter row: energy (kWh) consumed in the interval ending at ``timestamp``."""

    account_id: str
    timestamp: datetime
    energy_kwh: float


@dataclass(eq=False)
class ReadingSeries:
    """Uniformly spaced kWh readings for one account, with per-slot flags."""

    account_id: str
    interval_minutes: int
    start: datetime
    values: np.ndarray
    flags: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.flags = np.asarray(self.flags, dtype=np.uint8)
        if self.values.shape != self.flags.shape or self.values.ndim != 1:
            raise ValueError("values and flags must be 1-D and equal length")
        if self.interval_minutes not in VALID_INTERVALS:
            raise ValueError(f"interval must be one of {VALID_INTERVALS}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, ReadingSeries):
            return NotImplemented
        return (
            self.account_id == other.account_id
            and self.interval_minutes == other.interval_minutes
            and self.start == other.start
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.flags, other.flags)
        )

    @property
    def n_slots(self) -> int:
        return len(self.values)

    @property
    def step(self) -> timedelta:
        return timedelta(minutes=self.interval_minutes)

    @property
    def end(self) -> datetime:
        """Timestamp of the last slot."""
        return self.start + (self.n_slots - 1) * self.step

    def slot_time(self, i: int) -> datetime:
        if not 0 <= i < self.n_slots:
            raise IndexError(f"slot {i} out of range [0, {self.n_slots})")
        return self.start + i * self.step

    def slot_index(self, ts: datetime) -> int:
        """Slot holding ``ts``; raises if off-grid or out of range."""
        delta = ts - self.start
        minutes = delta // timedelta(minutes=1)
        q, r = divmod(minutes, self.interval_minutes)
        if r != 0 or not 0 <= q < self.n_slots:
            raise ValueError(f"{ts.isoformat()} is not a slot of this series")
        return int(q)

    def timestamps(self) -> list[datetime]:
        return [self.start + i * self.step for i in range(self.n_slots)]

    def copy(self) -> "ReadingSeries":
        return replace(self, values=self.values.copy(), flags=self.flags.copy())
