#!/usr/bin/env python3
"""Cross-period drift: which accounts changed peer group between June and
September?

Plants the same businesses in both periods, migrates a handful to a new
schedule in September, and lets compare_periods find them.
"""

import numpy as np

from lsm import (
    ALL_DAYS,
    CalendarFilter,
    KMeansConfig,
    ProfileSet,
    SynthSpec,
    assemble_series,
    average_profile,
    compare_periods,
    generate_dataset,
    kmeans,
    normalize_profile,
    parse_csv,
    select_days,
    standard_shapes,
)

ids = [f"b{i:04d}" for i in range(90)]
june_groups = {b: (0 if i < 40 else 1 if i < 65 else 2)
               for i, b in enumerate(ids)}
september_groups = dict(june_groups)
movers = ids[:6]  # six businesses switch to evening hours after the summer
for b in movers:
    september_groups[b] = 1


def cluster_period(month, groups, seed):
    spec = SynthSpec(account_count=90, shapes=standard_shapes(3),
                     noise_sigma=0.04, months=(month,), start_year=2009,
                     seed=seed,
                     assignment={f"a{i:04d}": groups[ids[i]] for i in range(90)})
    text, _ = generate_dataset(spec)
    # synth names accounts a0000..; rename to the shared business ids
    for i, b in enumerate(ids):
        text = text.replace(f"a{i:04d},", f"{b},")
    filt = CalendarFilter(months={month}, day_kind=ALL_DAYS, label=f"m{month:02d}")
    profs = [normalize_profile(average_profile(select_days(s, filt),
                                               s.account_id, filt.label))
             for s in assemble_series(parse_csv(text.encode()))]
    pset = ProfileSet(filter=filt, profiles=profs)
    return kmeans(pset, KMeansConfig(k=3, seed=0))


june = cluster_period(6, june_groups, seed=21)
september = cluster_period(9, september_groups, seed=22)

drift = compare_periods(june, september)
print(f"{drift.common} accounts appear in both periods")
print(f"cluster matching June -> September: {drift.matching}")
print(f"{drift.relocated} accounts relocated (planted: {len(movers)})\n")

print("flows:")
for flow in drift.flows:
    moved = "" if drift.matching.get(flow.a_cluster) == flow.b_cluster \
        else "   <- moved"
    print(f"  {flow.count:3d}  cluster {flow.a_cluster} -> {flow.b_cluster}{moved}")

sizes = np.array([[drift.size_a[c], drift.size_b[drift.matching[c]]]
                  for c in sorted(drift.matching)])
print("\nmatched cluster sizes (June -> September):")
for c, (a, b) in zip(sorted(drift.matching), sizes):
    print(f"  cluster {c}: {a} -> {b}")
