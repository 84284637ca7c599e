"""Synthetic meter data with planted cluster structure and injected defects.

Accounts draw a base 24-hour shape, a random amplitude, and multiplicative
log-normal noise, then lose spans to injected gaps and constant
estimated-style runs. Everything derives from the seed in ``SynthSpec``, so
one spec maps to exactly one dataset, byte for byte.
"""

from __future__ import annotations

import calendar
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .errors import InvalidSpec
from .series import VALID_INTERVALS

HEADER = "account_id,timestamp,energy_kwh"

SHORT_GAP = "short_gap"
LONG_GAP = "long_gap"
ESTIMATED_RUN = "estimated_run"


@dataclass
class ShapeSpec:
    values: np.ndarray  # base 24-hour shape, one value per hour
    share: float
    amplitude: tuple[float, float] = (1.0, 10.0)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (24,):
            raise InvalidSpec("shape vectors must have 24 hourly values")
        if np.any(self.values < 0) or float(self.values.max()) <= 0:
            raise InvalidSpec("shape values must be non-negative with a positive peak")
        lo, hi = self.amplitude
        if not 0 < lo <= hi:
            raise InvalidSpec("amplitude range must satisfy 0 < lo <= hi")


@dataclass
class SynthSpec:
    account_count: int
    shapes: list[ShapeSpec]
    noise_sigma: float = 0.0
    years: int = 1
    start_year: int = 2008
    months: tuple[int, ...] | None = None  # contiguous subset; None = all 12
    interval_minutes: int = 60
    short_gap_rate: float = 0.0  # per account-month
    long_gap_rate: float = 0.0
    est_run_rate: float = 0.0
    short_gap_hours: float = 2.0
    long_gap_hours: float = 72.0
    est_run_slots: int = 12
    seed: int = 0
    assignment: dict[str, int] | None = None  # explicit account -> shape index

    def __post_init__(self):
        if self.account_count < 1:
            raise InvalidSpec("account_count must be at least 1")
        if not self.shapes:
            raise InvalidSpec("at least one shape is required")
        if self.assignment is None:
            total = sum(s.share for s in self.shapes)
            if abs(total - 1.0) > 1e-9:
                raise InvalidSpec(f"shape shares must sum to 1, got {total}")
        for rate in (self.short_gap_rate, self.long_gap_rate, self.est_run_rate):
            if not 0.0 <= rate <= 1.0:
                raise InvalidSpec("defect rates must lie in [0, 1]")
        if self.noise_sigma < 0:
            raise InvalidSpec("noise_sigma must be non-negative")
        if self.years < 1:
            raise InvalidSpec("years must be at least 1")
        if self.interval_minutes not in VALID_INTERVALS:
            raise InvalidSpec(f"interval must be one of {VALID_INTERVALS}")
        if self.months is not None:
            m = tuple(int(x) for x in self.months)
            if not m or any(x not in range(1, 13) for x in m):
                raise InvalidSpec("months must be a non-empty subset of 1..12")
            if list(m) != list(range(m[0], m[0] + len(m))):
                raise InvalidSpec("months must be contiguous and ascending")
            if self.years > 1:
                raise InvalidSpec("restricted months require years == 1; "
                                  "multi-year data must cover whole years")
            self.months = m
        if self.assignment is not None:
            bad = {s for s in self.assignment.values()
                   if s not in range(len(self.shapes))}
            if bad:
                raise InvalidSpec(f"assignment references unknown shapes {sorted(bad)}")
            if len(self.assignment) != self.account_count:
                raise InvalidSpec("assignment must cover exactly account_count accounts")

    def month_span(self) -> list[tuple[int, int]]:
        """(year, month) blocks in chronological order."""
        if self.months is not None:
            return [(self.start_year, m) for m in self.months]
        return [(self.start_year + y, m)
                for y in range(self.years) for m in range(1, 13)]


@dataclass(frozen=True)
class DefectRecord:
    kind: str
    account_id: str
    start_slot: int
    length_slots: int


@dataclass
class GroundTruth:
    clusters: dict[str, int]
    defects: list[DefectRecord] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "clusters": dict(sorted(self.clusters.items())),
            "defects": [{"kind": d.kind, "account_id": d.account_id,
                         "start_slot": d.start_slot,
                         "length_slots": d.length_slots}
                        for d in self.defects],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GroundTruth":
        return cls(
            clusters={a: int(c) for a, c in data["clusters"].items()},
            defects=[DefectRecord(d["kind"], d["account_id"],
                                  int(d["start_slot"]), int(d["length_slots"]))
                     for d in data["defects"]],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "GroundTruth":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def archetype(open_hour: int, duration_hours: int, n: int = 24) -> np.ndarray:
    """A business-day load shape: low drifting baseline, high open block.

    The open block and the baseline are both slightly tilted so no two
    slots tie exactly; flat stretches would read as estimated runs.
    """
    v = np.full(n, 0.15) + np.linspace(0.0, 0.02, n)
    for i in range(duration_hours):
        v[(open_hour + i) % n] = 1.0 - 0.015 * i
    return v


# nine well-separated open-hour archetypes; the (16, 8) entry mirrors the
# evening-business example used throughout the reports
STANDARD_SHAPES: tuple[tuple[int, int], ...] = (
    (8, 8), (16, 8), (0, 24), (6, 12), (9, 10),
    (12, 6), (18, 10), (22, 4), (7, 14),
)


def standard_shapes(count: int) -> list[ShapeSpec]:
    """Up to nine canned archetypes with equal shares."""
    if not 1 <= count <= len(STANDARD_SHAPES):
        raise InvalidSpec(f"count must be in 1..{len(STANDARD_SHAPES)}")
    share = 1.0 / count
    return [ShapeSpec(archetype(o, d), share) for o, d in STANDARD_SHAPES[:count]]


def _allocate(count: int, shares: list[float]) -> list[int]:
    """Largest-remainder apportionment of count accounts to shares."""
    raw = [count * s for s in shares]
    base = [math.floor(r) for r in raw]
    remainder = count - sum(base)
    order = sorted(range(len(shares)), key=lambda j: (-(raw[j] - base[j]), j))
    for j in order[:remainder]:
        base[j] += 1
    return base


def _place_span(rng, length, n_lo, n_hi, taken) -> int | None:
    """A start slot in [n_lo, n_hi) keeping >= 1 slot clear of every taken
    span, or None when 30 draws all collide."""
    if n_hi - n_lo < length:
        return None
    for _ in range(30):
        s = int(rng.integers(n_lo, n_hi - length + 1))
        if all(s + length < t0 or t0 + tl < s for t0, tl in taken):
            return s
    return None


def generate_dataset(spec: SynthSpec) -> tuple[str, GroundTruth]:
    """Render the ingest CSV text and its ground truth."""
    n_shapes = len(spec.shapes)
    width = max(4, len(str(spec.account_count - 1)))
    ids = [f"a{i:0{width}d}" for i in range(spec.account_count)]

    if spec.assignment is not None:
        clusters = {a: spec.assignment[a] for a in ids}
    else:
        counts = _allocate(spec.account_count, [s.share for s in spec.shapes])
        clusters = {}
        i = 0
        for shape_idx, c in enumerate(counts):
            for _ in range(c):
                clusters[ids[i]] = shape_idx
                i += 1

    blocks = spec.month_span()
    spd = 24 * 60 // spec.interval_minutes
    block_slots = [calendar.monthrange(y, m)[1] * spd for y, m in blocks]
    block_starts = np.concatenate(([0], np.cumsum(block_slots)))
    total_slots = int(block_starts[-1])
    start = datetime(blocks[0][0], blocks[0][1], 1)
    step = timedelta(minutes=spec.interval_minutes)
    stamps = [(start + slot * step).isoformat(timespec="minutes")
              for slot in range(total_slots)]

    per_slot = np.asarray([s.values for s in spec.shapes])
    if spec.interval_minutes == 15:
        per_slot = np.repeat(per_slot, 4, axis=1) / 4.0

    truth = GroundTruth(clusters=clusters)
    lines = [HEADER]
    for i, account_id in enumerate(ids):
        rng = np.random.default_rng([spec.seed, i])
        shape = spec.shapes[clusters[account_id]]
        amp = float(rng.uniform(*shape.amplitude))
        day_shape = per_slot[clusters[account_id]] * amp
        values = np.tile(day_shape, total_slots // spd)
        if spec.noise_sigma > 0:
            values = values * rng.lognormal(0.0, spec.noise_sigma, size=total_slots)

        drop = np.zeros(total_slots, dtype=bool)
        taken: list[tuple[int, int]] = []
        short_len = max(1, int(spec.short_gap_hours * 60 // spec.interval_minutes))
        long_len = max(1, int(spec.long_gap_hours * 60 // spec.interval_minutes))
        for b0, b_len in zip(block_starts[:-1], block_slots):
            lo = max(int(b0), 1)
            hi = min(int(b0) + b_len, total_slots - 1)
            for kind, rate, length in ((SHORT_GAP, spec.short_gap_rate, short_len),
                                       (LONG_GAP, spec.long_gap_rate, long_len),
                                       (ESTIMATED_RUN, spec.est_run_rate,
                                        spec.est_run_slots)):
                if rng.random() >= rate:
                    continue
                s = _place_span(rng, length, lo, hi, taken)
                if s is None:
                    continue
                taken.append((s, length))
                truth.defects.append(DefectRecord(kind, account_id, s, length))
                if kind == ESTIMATED_RUN:
                    values[s:s + length] = values[s]
                else:
                    drop[s:s + length] = True

        for slot in range(total_slots):
            if not drop[slot]:
                lines.append(f"{account_id},{stamps[slot]},{float(values[slot])!r}")

    truth.defects.sort(key=lambda d: (d.account_id, d.start_slot))
    return "\n".join(lines) + "\n", truth


def write_dataset(
    spec: SynthSpec,
    csv_path: str | Path,
    truth_path: str | Path | None = None,
) -> GroundTruth:
    """Write the CSV and ground_truth.json; returns the truth."""
    csv_path = Path(csv_path)
    text, truth = generate_dataset(spec)
    csv_path.write_text(text, encoding="utf-8")
    if truth_path is None:
        truth_path = csv_path.parent / "ground_truth.json"
    truth.save(truth_path)
    return truth
