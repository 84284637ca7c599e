"""Dissimilarity measures between load profiles.

Four measures over equal-length profile vectors a and b:

    d_dos = sum_k (a_k - b_k)^2          difference of squares
    d_E   = sqrt(d_dos)                  Euclidean
    d_rms = d_E / n                      root-mean-square variant
    d_nm  = sqrt(sum_k (a_k/max(a) - b_k/max(b))^2) / n

d_rms divides by n, not sqrt(n); the unconventional form is kept on
purpose, as is d_nm's division outside the square root.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import LengthMismatch, ZeroMaximum
from .profiles import ProfileSet


class Measure(enum.Enum):
    DIFF_OF_SQUARES = "dos"
    EUCLIDEAN = "euclidean"
    ROOT_MEAN_SQUARE = "rms"
    NORMALIZED_MAX = "normmax"

    def __str__(self) -> str:
        return self.value


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1:
        raise LengthMismatch("distance arguments must be 1-d vectors")
    if a.shape != b.shape:
        raise LengthMismatch(f"length mismatch: {a.size} vs {b.size}")
    return a, b


def d_dos(a, b) -> float:
    """Sum of squared per-slot differences."""
    a, b = _pair(a, b)
    return float(np.sum((a - b) ** 2))


def d_e(a, b) -> float:
    """Euclidean distance, sqrt of d_dos."""
    return math.sqrt(d_dos(a, b))


def d_rms(a, b) -> float:
    """Euclidean distance divided by the slot count."""
    a, b = _pair(a, b)
    return math.sqrt(float(np.sum((a - b) ** 2))) / a.size


def d_nm(a, b) -> float:
    """Euclidean distance of the peak-normalized vectors, divided by the
    slot count. Both vectors must have a positive maximum."""
    a, b = _pair(a, b)
    a_max, b_max = float(a.max()), float(b.max())
    if a_max <= 0.0 or b_max <= 0.0:
        raise ZeroMaximum("d_nm needs both vectors to have a positive maximum")
    return math.sqrt(float(np.sum((a / a_max - b / b_max) ** 2))) / a.size


MEASURE_FUNCTIONS: dict[Measure, Callable[[Sequence[float], Sequence[float]], float]] = {
    Measure.DIFF_OF_SQUARES: d_dos,
    Measure.EUCLIDEAN: d_e,
    Measure.ROOT_MEAN_SQUARE: d_rms,
    Measure.NORMALIZED_MAX: d_nm,
}


@dataclass
class DistanceMatrix:
    measure: Measure
    account_ids: tuple[str, ...]
    entries: np.ndarray

    def __post_init__(self):
        self.account_ids = tuple(self.account_ids)
        self.entries = np.asarray(self.entries, dtype=np.float64)
        n = len(self.account_ids)
        if self.entries.shape != (n, n):
            raise ValueError("entries must be square and match the id list")
        if np.any(self.entries < 0):
            raise ValueError("distances must be non-negative")
        if np.any(np.diagonal(self.entries) != 0.0):
            raise ValueError("diagonal must be zero")
        if not np.array_equal(self.entries, self.entries.T):
            raise ValueError("matrix must be symmetric")

    def lookup(self, a: str, b: str) -> float:
        i = self.account_ids.index(a)
        j = self.account_ids.index(b)
        return float(self.entries[i, j])


def pairwise_matrix(profiles: ProfileSet, measure: Measure) -> DistanceMatrix:
    """Distance between every unordered pair of profiles.

    Each pair is computed once (row order, i < j) and mirrored, so the
    result is exactly symmetric with a zero diagonal.
    """
    ids = tuple(profiles.account_ids())
    x = profiles.matrix()
    n_vec = x.shape[1] if x.ndim == 2 else 0

    if measure is Measure.NORMALIZED_MAX:
        maxima = x.max(axis=1)
        bad = np.flatnonzero(maxima <= 0.0)
        if bad.size:
            i = int(bad[0])
            j = 1 if i == 0 else 0  # first i<j pair touching the bad profile
            lo, hi = min(i, j), max(i, j)
            raise ZeroMaximum(
                f"pair ({ids[lo]!r}, {ids[hi]!r}): profile {ids[i]!r} has no "
                f"positive maximum")
        x = x / maxima[:, None]

    out = np.zeros((len(ids), len(ids)), dtype=np.float64)
    for i in range(len(ids) - 1):
        sq = np.sum((x[i + 1:] - x[i]) ** 2, axis=1)
        if measure is Measure.DIFF_OF_SQUARES:
            row = sq
        elif measure is Measure.EUCLIDEAN:
            row = np.sqrt(sq)
        else:  # rms and normmax share the /n outer form
            row = np.sqrt(sq) / n_vec
        out[i, i + 1:] = row
        out[i + 1:, i] = row
    return DistanceMatrix(measure, ids, out)


def matrix_to_csv(matrix: DistanceMatrix, path: str | Path) -> None:
    """Square CSV with account ids as both header row and first column."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["measure:" + matrix.measure.value, *matrix.account_ids])
        for account_id, row in zip(matrix.account_ids, matrix.entries):
            w.writerow([account_id, *(repr(float(v)) for v in row)])


def matrix_from_csv(path: str | Path) -> DistanceMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if not header or not header[0].startswith("measure:"):
            raise ValueError(f"{path}: not a distance matrix CSV")
        measure = Measure(header[0].removeprefix("measure:"))
        ids = tuple(header[1:])
        rows = []
        for row in r:
            if len(row) != len(ids) + 1:
                raise ValueError(f"{path}: ragged row {row[0]!r}")
            rows.append([float(v) for v in row[1:]])
    if len(rows) != len(ids):
        raise ValueError(f"{path}: expected {len(ids)} rows, found {len(rows)}")
    return DistanceMatrix(measure, ids, np.array(rows))
