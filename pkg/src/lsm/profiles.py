"""Average 24-hour load profiles from cleansed interval data.

A profile is built per account by picking the calendar days a filter
matches, averaging them slot-wise, and dividing by the profile's own peak so
accounts of different magnitude become comparable shapes.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (AllZeroProfile, EmptyDays, LengthMismatch, NoMatchingDays,
                     WrongInterval)
from .series import QualityFlag, ReadingSeries
from .store import MeterStore

logger = logging.getLogger(__name__)

WEEKDAYS = "weekdays"
WEEKENDS = "weekends"
ALL_DAYS = "alldays"

_DAY_KIND_SETS = {
    WEEKDAYS: frozenset(range(5)),
    WEEKENDS: frozenset((5, 6)),
    ALL_DAYS: frozenset(range(7)),
}

NORM_TOL = 1e-12


@dataclass
class CalendarFilter:
    """Which calendar days feed an average profile.

    ``day_kind`` is one of the strings "weekdays", "weekends", "alldays", or
    an explicit collection of weekday numbers (Monday=0). ``years`` of None
    means every year in the data.
    """

    months: frozenset[int]
    day_kind: object = ALL_DAYS
    years: frozenset[int] | None = None
    label: str = ""

    def __post_init__(self):
        self.months = frozenset(int(m) for m in self.months)
        if not self.months or not self.months <= frozenset(range(1, 13)):
            raise ValueError("months must be a non-empty subset of 1..12")
        if self.years is not None:
            self.years = frozenset(int(y) for y in self.years)
        if not self.label:
            raise ValueError("filter label must be non-empty")
        self.weekday_set()  # validate day_kind eagerly

    def weekday_set(self) -> frozenset[int]:
        kind = self.day_kind
        if isinstance(kind, str):
            try:
                return _DAY_KIND_SETS[kind.lower()]
            except KeyError:
                raise ValueError(f"unknown day kind {kind!r}") from None
        days = frozenset(int(d) for d in kind)
        if not days or not days <= frozenset(range(7)):
            raise ValueError("weekday set must be a non-empty subset of 0..6")
        return days

    def matches(self, d: date) -> bool:
        if d.month not in self.months:
            return False
        if self.years is not None and d.year not in self.years:
            return False
        return d.weekday() in self.weekday_set()


@dataclass(eq=False)
class DailyProfile:
    """One account's average day.

    ``norm_max`` is the pre-normalization peak (the divisor); it is 0.0
    until the profile has been normalized.
    """

    account_id: str
    filter_label: str
    values: np.ndarray
    day_count: int
    normalized: bool = False
    norm_max: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.size == 0:
            raise ValueError("profile values must be a non-empty 1-d vector")
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise ValueError("profile values must be finite and non-negative")
        if self.day_count < 1:
            raise ValueError("day_count must be at least 1")
        if self.normalized:
            if self.norm_max <= 0:
                raise ValueError("normalized profile needs norm_max > 0")
            if abs(float(self.values.max()) - 1.0) > NORM_TOL:
                raise ValueError("normalized profile must peak at 1")

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DailyProfile):
            return NotImplemented
        return (self.account_id == other.account_id
                and self.filter_label == other.filter_label
                and self.day_count == other.day_count
                and self.normalized == other.normalized
                and self.norm_max == other.norm_max
                and np.array_equal(self.values, other.values))

    def copy(self) -> "DailyProfile":
        return DailyProfile(self.account_id, self.filter_label,
                            self.values.copy(), self.day_count,
                            self.normalized, self.norm_max)


@dataclass
class ProfileSet:
    """Profiles for one filter, one per account, sorted by account id.

    ``filter`` is None when the set was loaded from CSV; the shared
    filter_label string remains the binding to the filter that built it.
    """

    filter: CalendarFilter | None
    profiles: list[DailyProfile] = field(default_factory=list)
    skipped: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.profiles:
            first = self.profiles[0]
            for p in self.profiles:
                if p.n != first.n:
                    raise LengthMismatch("profiles differ in slot count")
                if p.filter_label != first.filter_label:
                    raise ValueError("profiles differ in filter label")
                if p.normalized != first.normalized:
                    raise ValueError("profiles mix normalized states")

    @property
    def N(self) -> int:
        return len(self.profiles)

    @property
    def n_slots(self) -> int:
        if not self.profiles:
            raise ValueError("empty profile set has no slot count")
        return self.profiles[0].n

    def account_ids(self) -> list[str]:
        return [p.account_id for p in self.profiles]

    def matrix(self) -> np.ndarray:
        """(N, n) array of profile values, row order == account_ids()."""
        return np.stack([p.values for p in self.profiles])

    def by_account(self) -> dict[str, DailyProfile]:
        return {p.account_id: p for p in self.profiles}


def aggregate_hourly(series: ReadingSeries) -> ReadingSeries:
    """Sum quarter-hour readings into clock-hour readings.

    The grid is padded with Missing at both ends so output hours align to
    the clock; an hour's flag is the most severe flag among its four
    quarter-hours.
    """
    if series.interval_minutes != 15:
        raise WrongInterval(
            f"hourly aggregation expects 15-minute data, got "
            f"{series.interval_minutes}-minute")
    head = series.start.minute // 15
    tail = (-(head + series.n_slots)) % 4
    values = np.concatenate((np.zeros(head), series.values, np.zeros(tail)))
    flags = np.concatenate((
        np.full(head, QualityFlag.MISSING, dtype=np.uint8),
        series.flags,
        np.full(tail, QualityFlag.MISSING, dtype=np.uint8),
    ))
    return ReadingSeries(
        account_id=series.account_id,
        interval_minutes=60,
        start=series.start.replace(minute=0),
        values=values.reshape(-1, 4).sum(axis=1),
        flags=flags.reshape(-1, 4).max(axis=1),
    )


def select_days(series: ReadingSeries, filter: CalendarFilter) -> list[np.ndarray]:
    """One vector per complete calendar day the filter matches.

    A day is complete when all its slots are present (midnight to midnight);
    partial edge days and days containing any Missing slot are excluded.
    """
    spd = 24 * 60 // series.interval_minutes  # slots per day
    minute0 = series.start.hour * 60 + series.start.minute
    first = 0 if minute0 == 0 else (24 * 60 - minute0) // series.interval_minutes
    days: list[np.ndarray] = []
    for s in range(first, series.n_slots - spd + 1, spd):
        day = series.slot_time(s).date()
        if not filter.matches(day):
            continue
        if np.any(series.flags[s:s + spd] == QualityFlag.MISSING):
            continue
        days.append(series.values[s:s + spd].copy())
    if not days:
        raise NoMatchingDays(
            f"account {series.account_id!r}: no complete day matches "
            f"filter {filter.label!r}")
    return days


def average_profile(
    days: Sequence[np.ndarray],
    account_id: str = "",
    filter_label: str = "",
) -> DailyProfile:
    """Slot-wise mean across day-vectors, unnormalized."""
    if len(days) == 0:
        raise EmptyDays("no day-vectors to average")
    stack = np.stack([np.asarray(d, dtype=np.float64) for d in days])
    return DailyProfile(account_id, filter_label, stack.mean(axis=0), len(days))


def normalize_profile(profile: DailyProfile) -> DailyProfile:
    """Divide by the profile's own peak; no-op on an already-normalized one."""
    if profile.normalized:
        return profile.copy()
    peak = float(profile.values.max())
    if peak <= 0.0:
        raise AllZeroProfile(
            f"account {profile.account_id!r}: cannot normalize an all-zero profile")
    return DailyProfile(profile.account_id, profile.filter_label,
                        profile.values / peak, profile.day_count,
                        normalized=True, norm_max=peak)


def build_profiles(
    store: MeterStore,
    filter: CalendarFilter,
    normalize: bool = True,
    aggregate: bool = True,
) -> ProfileSet:
    """Profile every kept account in the store under one filter.

    Quarter-hour series are summed to hourly first unless ``aggregate`` is
    false. Accounts with no matching complete day or an all-zero average are
    skipped and recorded in the result's ``skipped`` map.
    """
    profiles: list[DailyProfile] = []
    skipped: dict[str, str] = {}
    for account_id in store.kept_accounts():
        series = store.load(account_id)
        if aggregate and series.interval_minutes == 15:
            series = aggregate_hourly(series)
        try:
            days = select_days(series, filter)
            profile = average_profile(days, account_id, filter.label)
            if normalize:
                profile = normalize_profile(profile)
        except (NoMatchingDays, AllZeroProfile) as exc:
            skipped[account_id] = str(exc)
            logger.info("skipping account %s: %s", account_id, exc)
            continue
        profiles.append(profile)
    return ProfileSet(filter=filter, profiles=profiles, skipped=skipped)


def profiles_to_csv(pset: ProfileSet, path: str | Path) -> None:
    """Write one row per profile: account_id,filter_label,day_count,norm_max,v00,..."""
    if pset.N == 0:
        raise ValueError("refusing to write an empty profile set")
    n = pset.n_slots
    header = ["account_id", "filter_label", "day_count", "norm_max"]
    header += [f"v{j:02d}" for j in range(n)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for p in pset.profiles:
            row = [p.account_id, p.filter_label, p.day_count, repr(p.norm_max)]
            row += [repr(float(v)) for v in p.values]
            w.writerow(row)


def profiles_from_csv(path: str | Path) -> ProfileSet:
    """Inverse of profiles_to_csv. The filter itself is not recoverable, so
    the returned set has filter None; normalized state is inferred from
    norm_max (0.0 marks an unnormalized profile)."""
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header is None or header[:4] != ["account_id", "filter_label",
                                            "day_count", "norm_max"]:
            raise ValueError(f"{path}: not a profile CSV")
        n = len(header) - 4
        profiles = []
        for row in r:
            if len(row) != 4 + n:
                raise ValueError(f"{path}: row for {row[0]!r} has wrong width")
            norm_max = float(row[3])
            profiles.append(DailyProfile(
                account_id=row[0],
                filter_label=row[1],
                values=np.array([float(x) for x in row[4:]]),
                day_count=int(row[2]),
                normalized=norm_max > 0.0,
                norm_max=norm_max,
            ))
    return ProfileSet(filter=None, profiles=profiles)
