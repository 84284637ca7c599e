#!/usr/bin/env python3
"""What happens to one battered account inside the cleansing stage.

Builds a two-year hourly series by hand, wrecks it three ways (a short gap,
a long gap, a constant estimated run), then walks the repair steps and
prints the flag accounting after each one.
"""

from datetime import datetime, timedelta

import numpy as np

from lsm import (
    CleanseConfig,
    QualityFlag,
    ReadingSeries,
    assess_account,
    cleanse_series,
    detect_estimated_runs,
    detect_gaps,
)

FLAG_NAMES = {QualityFlag.OBSERVED: "Observed",
              QualityFlag.INTERPOLATED: "Interpolated",
              QualityFlag.YEAR_AVERAGED: "YearAveraged",
              QualityFlag.ESTIMATED: "Estimated",
              QualityFlag.MISSING: "Missing"}


def tally(series):
    counts = {}
    for f in series.flags:
        counts[FLAG_NAMES[QualityFlag(f)]] = counts.get(FLAG_NAMES[QualityFlag(f)], 0) + 1
    return "  ".join(f"{name}={n}" for name, n in sorted(counts.items()))


start = datetime(2008, 1, 1)
n = (366 + 365) * 24
stamps = [start + timedelta(hours=i) for i in range(n)]
values = np.array([2.0 + ts.hour * 0.3 + ts.month * 0.05 for ts in stamps])
flags = np.full(n, QualityFlag.OBSERVED, dtype=np.uint8)

series = ReadingSeries(account_id="shop-17", interval_minutes=60,
                       start=start, values=values, flags=flags)

# wreck it: 3 missing hours in March 2009
short = series.slot_index(datetime(2009, 3, 10, 9))
series.values[short:short + 3] = 0.0
series.flags[short:short + 3] = QualityFlag.MISSING

# a 3-day outage in July 2009
long_gap = series.slot_index(datetime(2009, 7, 20, 0))
series.values[long_gap:long_gap + 72] = 0.0
series.flags[long_gap:long_gap + 72] = QualityFlag.MISSING

# a 30-hour run of the same number: the meter was being estimated
run = series.slot_index(datetime(2009, 9, 5, 0))
series.values[run:run + 30] = series.values[run]

print("before:", tally(series))
print(f"  gaps found: {[(g.start_slot, g.length_slots) for g in detect_gaps(series)]}")
runs = detect_estimated_runs(series, CleanseConfig())
print(f"  estimated runs found: {[(r.start_slot, r.length_slots, round(r.value, 2)) for r in runs]}")

cleansed, assessment, excised = cleanse_series(series, CleanseConfig())

print("after: ", tally(cleansed))
print(f"  excised {excised} estimated slots")
print(f"  short gap now: "
      f"{[FLAG_NAMES[QualityFlag(f)] for f in cleansed.flags[short:short + 3]]}")
print(f"  long gap refilled from 2008 (first 3 slots): "
      f"{[round(float(v), 3) for v in cleansed.values[long_gap:long_gap + 3]]}"
      f" vs 2008 donors "
      f"{[round(float(series.values[series.slot_index(datetime(2008, 7, 20, h))]), 3) for h in range(3)]}")
print(f"keep? {assessment.keep}  "
      f"(non-observed fraction {assessment.non_observed_frac:.3%})")

# run it again: cleansing is idempotent, nothing changes
again, assessment2, excised2 = cleanse_series(cleansed, CleanseConfig())
print(f"second pass is a no-op: {again == cleansed}, "
      f"newly excised: {excised2}")
