"""Data cleansing: gap filling, estimated-read detection, account screening.

The per-account procedure, in order:

1. detect runs of consecutively repeated values (utility-substituted
   estimates) and resolve them: short runs are re-filled by linear
   interpolation, long runs are excised and offered to the cross-year fill;
2. detect remaining gaps; fill short ones linearly, long ones from the same
   calendar span of other years;
3. assess the account: drop it when too little of the data is genuinely
   observed or when unfillable holes remain.

Estimation detection runs before gap filling so that excised runs become
ordinary gaps and reuse the gap machinery. All operations are pure: they
return new series and never mutate their inputs.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import BoundaryMissing, GapTooLong, NoSiblingCoverage
from .series import QualityFlag, ReadingSeries
from .store import STATUS_CLEANSED, STATUS_DROPPED, MeterStore

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Gap:
    """A maximal run of Missing slots."""

    account_id: str
    start_slot: int
    length_slots: int

    @property
    def end_slot(self) -> int:
        """One past the last missing slot."""
        return self.start_slot + self.length_slots


@dataclass(frozen=True)
class EstimatedRun:
    """A maximal run of identical consecutive observed values."""

    account_id: str
    start_slot: int
    length_slots: int
    value: float

    @property
    def end_slot(self) -> int:
        return self.start_slot + self.length_slots


@dataclass
class CleanseConfig:
    short_gap_max_hours: float = 6.0
    est_run_threshold_slots: int = 12
    est_long_max_hours: float = 24.0
    drop_quality_frac: float = 0.20
    zero_run_exempt: bool = True

    def __post_init__(self):
        if min(self.short_gap_max_hours, self.est_run_threshold_slots,
               self.est_long_max_hours) <= 0:
            raise ValueError("all cleansing thresholds must be positive")
        if not 0.0 <= self.drop_quality_frac <= 1.0:
            raise ValueError("drop_quality_frac must lie in [0, 1]")

    def short_gap_max_slots(self, interval_minutes: int) -> int:
        return int(self.short_gap_max_hours * 60 // interval_minutes)


@dataclass
class AccountAssessment:
    account_id: str
    keep: bool
    reason: str
    non_observed_frac: float
    missing_slots: int


@dataclass
class AccountCleanseStats:
    """Post-cleansing slot counts for one account.

    ``estimated_excised`` counts slots excised from long estimated runs (they
    end up YearAveraged or Missing, so it overlaps the other counters); it is
    cumulative across pipeline runs. The other counters are read off the
    final flags.
    """

    interpolated: int = 0
    year_averaged: int = 0
    estimated_excised: int = 0
    missing_remaining: int = 0
    dropped: bool = False
    reason: str = ""


@dataclass
class CleanseReport:
    accounts: dict[str, AccountCleanseStats] = field(default_factory=dict)

    def dropped_accounts(self) -> list[str]:
        return sorted(a for a, s in self.accounts.items() if s.dropped)

    def to_dict(self) -> dict:
        return {a: asdict(s) for a, s in sorted(self.accounts.items())}

    @classmethod
    def from_dict(cls, data: dict) -> "CleanseReport":
        return cls({a: AccountCleanseStats(**s) for a, s in data.items()})


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """(start, length) of each maximal run of True in a boolean mask."""
    edges = np.flatnonzero(np.diff(np.concatenate(([0], mask.astype(np.int8), [0]))))
    return [(int(s), int(e - s)) for s, e in zip(edges[0::2], edges[1::2])]


def detect_gaps(series: ReadingSeries) -> list[Gap]:
    """All maximal Missing runs, sorted by start slot."""
    return [Gap(series.account_id, s, n)
            for s, n in _runs(series.flags == QualityFlag.MISSING)]


def fill_gap_linear(
    series: ReadingSeries,
    gap: Gap,
    max_slots: int | None = None,
) -> ReadingSeries:
    """Fill a gap with the straight line between its boundary neighbors.

    Both neighbors must exist and be non-Missing. Filled slots are flagged
    INTERPOLATED; everything else is returned unchanged.
    """
    if max_slots is not None and gap.length_slots > max_slots:
        raise GapTooLong(f"gap of {gap.length_slots} slots exceeds limit {max_slots}")
    left, right = gap.start_slot - 1, gap.end_slot
    if left < 0 or right >= series.n_slots:
        raise BoundaryMissing("gap touches the series edge")
    if (series.flags[left] == QualityFlag.MISSING
            or series.flags[right] == QualityFlag.MISSING):
        raise BoundaryMissing("gap neighbor is itself Missing")
    out = series.copy()
    v_left, v_right = series.values[left], series.values[right]
    t = np.arange(1, gap.length_slots + 1, dtype=np.float64) / (gap.length_slots + 1)
    out.values[gap.start_slot:gap.end_slot] = v_left + (v_right - v_left) * t
    out.flags[gap.start_slot:gap.end_slot] = QualityFlag.INTERPOLATED
    return out


def fill_gap_cross_year(
    series: ReadingSeries,
    gap: Gap,
    siblings: Sequence[ReadingSeries],
) -> ReadingSeries:
    """Fill a gap with the mean of other years' values at the same calendar slots.

    A sibling contributes where it has an OBSERVED slot at the same
    (month, day, time-of-day) in a different year; the series itself may be
    passed as its own sibling when it spans multiple years. Slots with no
    coverage stay Missing; if nothing could be filled, NoSiblingCoverage is
    raised.
    """
    out = series.copy()
    filled = 0
    for slot in range(gap.start_slot, gap.end_slot):
        ts = series.slot_time(slot)
        donors: list[float] = []
        for sib in siblings:
            for year in range(sib.start.year, sib.end.year + 1):
                if year == ts.year:
                    continue
                try:
                    ts_sib = ts.replace(year=year)
                except ValueError:  # Feb 29 without a leap-year sibling
                    continue
                try:
                    j = sib.slot_index(ts_sib)
                except ValueError:
                    continue
                if sib.flags[j] == QualityFlag.OBSERVED:
                    donors.append(float(sib.values[j]))
        if donors:
            out.values[slot] = sum(donors) / len(donors)
            out.flags[slot] = QualityFlag.YEAR_AVERAGED
            filled += 1
    if filled == 0:
        raise NoSiblingCoverage(
            f"account {series.account_id!r}: no sibling year covers the gap "
            f"at slot {gap.start_slot}")
    return out


def detect_estimated_runs(
    series: ReadingSeries,
    config: CleanseConfig,
) -> list[EstimatedRun]:
    """Maximal runs of identical consecutive OBSERVED values at or above the
    repetition threshold. Runs of exact zeros are exempt when configured
    (closed businesses legitimately read 0 repeatedly).

    Only Observed slots count: values written by earlier fills are not
    utility estimates, and skipping them keeps the pipeline idempotent.
    """
    n = series.n_slots
    if n == 0:
        return []
    v = series.values
    observed = series.flags == QualityFlag.OBSERVED
    breaks = (v[1:] != v[:-1]) | (observed[1:] != observed[:-1])
    starts = np.concatenate(([0], np.flatnonzero(breaks) + 1, [n]))
    runs = []
    for start, end in zip(starts[:-1], starts[1:]):
        length = int(end - start)
        if not observed[start] or length < config.est_run_threshold_slots:
            continue
        value = float(v[start])
        if config.zero_run_exempt and value == 0.0:
            continue
        runs.append(EstimatedRun(series.account_id, int(start), length, value))
    return runs


def resolve_estimated_runs(
    series: ReadingSeries,
    runs: Sequence[EstimatedRun],
    config: CleanseConfig,
    siblings: Sequence[ReadingSeries] = (),
) -> ReadingSeries:
    """Replace estimated runs: short ones by linear interpolation, long ones
    by excision followed by a cross-year fill attempt.

    All runs are excised before any filling so adjacent runs never
    interpolate against each other's fabricated values. Slots that no fill
    could recover stay Missing; nothing is raised on degradation.
    """
    if not runs:
        return series.copy()
    out = series.copy()
    excised = np.zeros(series.n_slots, dtype=bool)
    for run in runs:
        out.values[run.start_slot:run.end_slot] = 0.0
        out.flags[run.start_slot:run.end_slot] = QualityFlag.MISSING
        excised[run.start_slot:run.end_slot] = True

    long_max_slots = int(config.est_long_max_hours * 60 // series.interval_minutes)
    for run in runs:
        if run.length_slots > long_max_slots:
            continue
        gap = Gap(series.account_id, run.start_slot, run.length_slots)
        try:
            out = fill_gap_linear(out, gap)
        except BoundaryMissing:
            pass  # degrade to the cross-year attempt below

    for gap in detect_gaps(out):
        if not excised[gap.start_slot:gap.end_slot].any():
            continue  # pre-existing gap, not ours to fill here
        try:
            out = fill_gap_cross_year(out, gap, siblings)
        except NoSiblingCoverage:
            pass
    return out


def assess_account(series: ReadingSeries, config: CleanseConfig) -> AccountAssessment:
    """Keep/drop decision after cleansing.

    Drop when the fraction of slots not flagged OBSERVED strictly exceeds
    ``drop_quality_frac``, or when any Missing slots remain.
    """
    n = series.n_slots
    non_observed = int(np.count_nonzero(series.flags != QualityFlag.OBSERVED))
    missing = int(np.count_nonzero(series.flags == QualityFlag.MISSING))
    frac = non_observed / n if n else 0.0
    if frac > config.drop_quality_frac:
        return AccountAssessment(series.account_id, False,
                                 f"non-observed fraction {frac:.3f} exceeds "
                                 f"{config.drop_quality_frac}", frac, missing)
    if missing > 0:
        return AccountAssessment(series.account_id, False,
                                 f"{missing} Missing slots remain", frac, missing)
    return AccountAssessment(series.account_id, True, "", frac, missing)


def cleanse_series(
    series: ReadingSeries,
    config: CleanseConfig,
) -> tuple[ReadingSeries, AccountAssessment, int]:
    """Run the full per-account procedure; returns (series, assessment,
    newly excised slot count). The series is its own cross-year sibling."""
    runs = detect_estimated_runs(series, config)
    excised = sum(r.length_slots for r in runs
                  if r.length_slots > int(config.est_long_max_hours * 60
                                          // series.interval_minutes))
    out = resolve_estimated_runs(series, runs, config, siblings=(series,))

    short_max = config.short_gap_max_slots(out.interval_minutes)
    for gap in detect_gaps(out):
        if gap.length_slots <= short_max:
            try:
                out = fill_gap_linear(out, gap)
            except BoundaryMissing:
                pass
    for gap in detect_gaps(out):
        try:
            out = fill_gap_cross_year(out, gap, siblings=(out,))
        except NoSiblingCoverage:
            pass

    return out, assess_account(out, config), excised


def cleanse_pipeline(
    store: MeterStore,
    config: CleanseConfig | None = None,
    threads: int = 1,
) -> CleanseReport:
    """Cleanse every account in the store, write the results back, and
    persist a report to ``<root>/cleanse_report.json``.

    Idempotent: a second run with the same config changes neither the
    series nor the report.
    """
    config = config or CleanseConfig()
    accounts = store.accounts()

    def work(account_id: str):
        return cleanse_series(store.load(account_id), config)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, accounts))
    else:
        results = [work(a) for a in accounts]

    report = CleanseReport()
    for account_id, (cleansed, assessment, excised_new) in zip(accounts, results):
        prior = store.entry(account_id).get("estimated_excised", 0)
        excised_total = prior + excised_new
        status = STATUS_CLEANSED if assessment.keep else STATUS_DROPPED
        store.save(cleansed, status=status, estimated_excised=excised_total)
        flags = cleansed.flags
        report.accounts[account_id] = AccountCleanseStats(
            interpolated=int(np.count_nonzero(flags == QualityFlag.INTERPOLATED)),
            year_averaged=int(np.count_nonzero(flags == QualityFlag.YEAR_AVERAGED)),
            estimated_excised=excised_total,
            missing_remaining=int(np.count_nonzero(flags == QualityFlag.MISSING)),
            dropped=not assessment.keep,
            reason=assessment.reason,
        )
        if not assessment.keep:
            logger.info("dropping account %s: %s", account_id, assessment.reason)

    report_path = Path(store.root) / "cleanse_report.json"
    report_path.write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return report
