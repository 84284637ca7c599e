"""Reporting on clusterings: mean profiles, peer deviations, open/close-hour
labels, cross-period drift, SVG plots, and the run summary."""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass
from math import comb
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .cluster import Clustering
from .errors import AllZeroProfile, NoCommonAccounts, UnassignedAccount
from .profiles import ProfileSet

logger = logging.getLogger(__name__)


@dataclass
class ClusterReport:
    cluster: int
    members: list[str]
    mean_profile: np.ndarray
    member_share: float
    label: str = ""

    @property
    def size(self) -> int:
        return len(self.members)


class Direction(enum.Enum):
    ABOVE = "above"
    BELOW = "below"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Deviation:
    account_id: str
    slot: int
    direction: Direction
    magnitude: float  # signed z-score in cluster slot standard deviations


@dataclass(frozen=True)
class Flow:
    a_cluster: int
    b_cluster: int
    count: int


@dataclass
class DriftReport:
    common: int
    relocated: int
    matching: dict[int, int]  # A cluster -> matched B cluster
    flows: list[Flow]
    size_a: dict[int, int]
    size_b: dict[int, int]


@dataclass(frozen=True)
class OpenClose:
    start_slot: int
    duration_slots: int
    label: str


def cluster_means(profiles: ProfileSet, clustering: Clustering) -> list[ClusterReport]:
    """Per-cluster member lists and slot-wise mean profiles; labels left empty."""
    by_account = profiles.by_account()
    members: dict[int, list[str]] = {c: [] for c in range(clustering.k)}
    for p in profiles.profiles:
        if p.account_id not in clustering.assignments:
            raise UnassignedAccount(f"no cluster assigned to {p.account_id!r}")
        members[clustering.assignments[p.account_id]].append(p.account_id)
    total = profiles.N
    reports = []
    for c in range(clustering.k):
        ids = sorted(members[c])
        stack = np.stack([by_account[a].values for a in ids])
        reports.append(ClusterReport(
            cluster=c,
            members=ids,
            mean_profile=stack.mean(axis=0),
            member_share=len(ids) / total,
        ))
    return reports


def deviation_scan(
    profiles: ProfileSet,
    clustering: Clustering,
    z_threshold: float = 2.0,
) -> list[Deviation]:
    """Members straying from their cluster's mean at any slot.

    A deviation is emitted where |value - slot mean| strictly exceeds
    z_threshold population standard deviations of the cluster at that slot.
    Zero-variance slots emit nothing, so singleton clusters are silent.
    """
    by_account = profiles.by_account()
    out: list[Deviation] = []
    for rep in cluster_means(profiles, clustering):
        stack = np.stack([by_account[a].values for a in rep.members])
        mean = stack.mean(axis=0)
        std = stack.std(axis=0)  # population form
        safe_std = np.where(std > 0, std, 1.0)
        for row, account_id in enumerate(rep.members):
            diff = stack[row] - mean
            z = diff / safe_std
            hits = np.flatnonzero((std > 0) & (np.abs(diff) > z_threshold * std))
            for slot in hits:
                out.append(Deviation(
                    account_id=account_id,
                    slot=int(slot),
                    direction=Direction.BELOW if diff[slot] < 0 else Direction.ABOVE,
                    magnitude=float(z[slot]),
                ))
    out.sort(key=lambda d: (d.account_id, d.slot))
    return out


def infer_open_close(mean_profile: Sequence[float], level: float = 0.5) -> OpenClose:
    """Longest circular run of slots at or above level * peak.

    Ties break to the earliest start. The label is rendered in hours
    regardless of slot resolution: "open at 16 for 8 hours".
    """
    v = np.asarray(mean_profile, dtype=np.float64)
    n = v.size
    peak = float(v.max())
    if peak <= 0.0:
        raise AllZeroProfile("cannot infer open hours from an all-zero profile")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie strictly between 0 and 1")
    mask = v >= level * peak
    if mask.all():
        start, length = 0, n
    else:
        doubled = np.concatenate((mask, mask))
        start, length = 0, 0
        run_start = None
        for i in range(2 * n):
            if doubled[i] and run_start is None:
                run_start = i
            elif not doubled[i] and run_start is not None:
                if run_start < n and i - run_start > length:
                    start, length = run_start, min(i - run_start, n)
                run_start = None
        if run_start is not None and run_start < n:  # run reaching the end
            if 2 * n - run_start > length:
                start, length = run_start, min(2 * n - run_start, n)
    hours_per_slot = 24.0 / n
    label = (f"open at {start * hours_per_slot:g} "
             f"for {length * hours_per_slot:g} hours")
    return OpenClose(start_slot=start, duration_slots=length, label=label)


def adjusted_rand_index(
    assignments_a: dict[str, int],
    assignments_b: dict[str, int],
) -> float:
    """Chance-corrected agreement between two partitions, computed over the
    accounts the two assignment maps share. 1.0 means identical partitions
    up to relabeling."""
    common = sorted(set(assignments_a) & set(assignments_b))
    if not common:
        raise NoCommonAccounts("the two assignments share no accounts")
    table: dict[tuple[int, int], int] = {}
    rows: dict[int, int] = {}
    cols: dict[int, int] = {}
    for account in common:
        a, b = assignments_a[account], assignments_b[account]
        table[(a, b)] = table.get((a, b), 0) + 1
        rows[a] = rows.get(a, 0) + 1
        cols[b] = cols.get(b, 0) + 1
    n = len(common)
    sum_cells = sum(comb(c, 2) for c in table.values())
    sum_rows = sum(comb(c, 2) for c in rows.values())
    sum_cols = sum(comb(c, 2) for c in cols.values())
    expected = sum_rows * sum_cols / comb(n, 2) if n > 1 else 0.0
    maximum = (sum_rows + sum_cols) / 2.0
    if maximum == expected:  # both partitions trivial; agreement is total
        return 1.0
    return (sum_cells - expected) / (maximum - expected)


def compare_periods(
    clustering_a: Clustering,
    clustering_b: Clustering,
    profiles_a: ProfileSet | None = None,
    profiles_b: ProfileSet | None = None,
) -> DriftReport:
    """Match B's clusters to A's and count accounts that moved.

    Matching minimizes total Euclidean distance between centroid pairs
    (optimal one-to-one assignment); with unequal k the surplus clusters
    stay unmatched. An account common to both periods is relocated when its
    B cluster is not the match of its A cluster.

    Stored centroids drive the matching; pass the profile sets to recompute
    cluster means from scratch instead (equivalent for converged runs).
    """
    common = sorted(set(clustering_a.assignments) & set(clustering_b.assignments))
    if not common:
        raise NoCommonAccounts("the two clusterings share no accounts")

    def mean_matrix(clustering, profiles):
        if profiles is None:
            return clustering.centroids
        return np.stack([r.mean_profile for r in cluster_means(profiles, clustering)])

    ca = mean_matrix(clustering_a, profiles_a)
    cb = mean_matrix(clustering_b, profiles_b)
    cost = np.sqrt(((ca[:, None, :] - cb[None, :, :]) ** 2).sum(axis=2))
    rows, cols = linear_sum_assignment(cost)
    matching = {int(r): int(c) for r, c in zip(rows, cols)}

    flow_counts: dict[tuple[int, int], int] = {}
    relocated = 0
    for account in common:
        a = clustering_a.assignments[account]
        b = clustering_b.assignments[account]
        flow_counts[(a, b)] = flow_counts.get((a, b), 0) + 1
        if matching.get(a) != b:
            relocated += 1

    def sizes(clustering: Clustering) -> dict[int, int]:
        out = {c: 0 for c in range(clustering.k)}
        for c in clustering.assignments.values():
            out[c] += 1
        return out

    return DriftReport(
        common=len(common),
        relocated=relocated,
        matching=matching,
        flows=[Flow(a, b, n) for (a, b), n in sorted(flow_counts.items())],
        size_a=sizes(clustering_a),
        size_b=sizes(clustering_b),
    )


def _svg_points(values: np.ndarray, x0, y0, w, h, y_max) -> str:
    n = values.size
    pts = []
    for k, v in enumerate(values):
        x = x0 + (k * 24.0 / n) / 24.0 * w
        y = y0 + h - (float(v) / y_max) * h
        pts.append(f"{x:.2f},{y:.2f}")
    return " ".join(pts)


def emit_cluster_plot(
    profiles: ProfileSet,
    clustering: Clustering,
    cluster: int,
    path: str | Path,
    level: float = 0.5,
) -> Path:
    """Write one SVG: every member profile as a light polyline, the cluster
    mean as a heavy one, axes as plain lines. Returns the path written."""
    reports = cluster_means(profiles, clustering)
    if not 0 <= cluster < len(reports):
        raise ValueError(f"no cluster {cluster} in a k={clustering.k} clustering")
    rep = reports[cluster]
    by_account = profiles.by_account()
    label = infer_open_close(rep.mean_profile, level=level).label
    filter_label = profiles.profiles[0].filter_label

    width, height = 640, 400
    ml, mr, mt, mb = 50, 15, 40, 35
    w, h = width - ml - mr, height - mt - mb
    y_max = max(1.0, float(max(np.max(by_account[a].values) for a in rep.members)))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f"<title>cluster {cluster} ({filter_label}): {label}</title>",
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{ml}" y="22" font-family="sans-serif" font-size="14">'
        f"cluster {cluster} &#183; {filter_label} &#183; {label} &#183; "
        f"{rep.size} accounts</text>",
    ]
    for account_id in rep.members:
        pts = _svg_points(by_account[account_id].values, ml, mt, w, h, y_max)
        parts.append(f'<polyline points="{pts}" fill="none" '
                     f'stroke="#9ecae1" stroke-width="1"/>')
    mean_pts = _svg_points(rep.mean_profile, ml, mt, w, h, y_max)
    parts.append(f'<polyline points="{mean_pts}" fill="none" '
                 f'stroke="#08519c" stroke-width="2.5"/>')
    # axes
    parts.append(f'<line x1="{ml}" y1="{mt + h}" x2="{ml + w}" y2="{mt + h}" '
                 f'stroke="black" stroke-width="1"/>')
    parts.append(f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + h}" '
                 f'stroke="black" stroke-width="1"/>')
    for hour in (0, 6, 12, 18, 24):
        x = ml + hour / 24.0 * w
        parts.append(f'<line x1="{x:.2f}" y1="{mt + h}" x2="{x:.2f}" '
                     f'y2="{mt + h + 4}" stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{x:.2f}" y="{mt + h + 18}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{hour}</text>')
    for frac in (0.0, 0.5, 1.0):
        y = mt + h - frac * h
        parts.append(f'<text x="{ml - 6}" y="{y + 4:.2f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">'
                     f"{frac * y_max:g}</text>")
    parts.append("</svg>")

    out = Path(path)
    out.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return out


def summary_dict(
    reports: Sequence[ClusterReport],
    deviations: Sequence[Deviation] = (),
    drift: DriftReport | None = None,
) -> dict:
    """JSON-native summary of a reporting run."""
    if not reports:
        raise ValueError("summary needs at least one cluster report")
    total = sum(r.size for r in reports)
    clusters = [{
        "cluster": r.cluster,
        "size": r.size,
        "share": r.member_share,
        "share_pct": f"{r.member_share:.0%}",
        "label": r.label,
        "members": list(r.members),
    } for r in reports]
    dev_accounts = sorted({d.account_id for d in deviations})
    out: dict = {
        "total_accounts": total,
        "clusters": clusters,
        "deviations": {
            "count": len(deviations),
            "accounts": dev_accounts,
        },
    }
    if drift is not None:
        out["drift"] = {
            "common": drift.common,
            "relocated": drift.relocated,
            "matching": {str(a): b for a, b in sorted(drift.matching.items())},
            "flows": [{"a": f.a_cluster, "b": f.b_cluster, "count": f.count}
                      for f in drift.flows],
        }
    return out


def summary_text(summary: dict) -> str:
    lines = [f"{summary['total_accounts']} accounts in "
             f"{len(summary['clusters'])} clusters"]
    for c in summary["clusters"]:
        label = f" [{c['label']}]" if c["label"] else ""
        lines.append(f"  cluster {c['cluster']}: {c['size']} accounts "
                     f"({c['share_pct']}){label}")
    dev = summary["deviations"]
    if dev["count"]:
        lines.append(f"{dev['count']} deviations across "
                     f"{len(dev['accounts'])} flagged accounts")
    else:
        lines.append("zero flagged accounts")
    if "drift" in summary:
        d = summary["drift"]
        lines.append(f"drift: {d['relocated']} of {d['common']} common "
                     f"accounts relocated")
    return "\n".join(lines) + "\n"


def emit_summary(
    reports: Sequence[ClusterReport],
    deviations: Sequence[Deviation] = (),
    drift: DriftReport | None = None,
    json_path: str | Path | None = None,
    text_path: str | Path | None = None,
) -> dict:
    """Write the JSON summary (and a text digest; to stdout when no text
    path is given). Returns the summary structure."""
    summary = summary_dict(reports, deviations, drift)
    if json_path is not None:
        Path(json_path).write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    text = summary_text(summary)
    if text_path is not None:
        Path(text_path).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return summary
