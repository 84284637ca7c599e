"""Seeded, deterministic k-means over profile sets.

Assignment uses squared Euclidean distance (argmin is the same under d_E),
ties break to the lower cluster index, and empty clusters are reseeded with
the point farthest from its current centroid. Restarts differ only in their
derived RNG stream; the lowest objective wins, earliest restart on ties.

Profiles are ordered by account id before any random draw, so the result is
invariant under permutation of the input rows.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import EmptyProfileSet, KGreaterThanN, UnassignedAccount
from .metrics import d_dos
from .profiles import ProfileSet

logger = logging.getLogger(__name__)


class Init(enum.Enum):
    KPP = "kpp"
    RANDOM_PARTITION = "random-partition"

    def __str__(self) -> str:
        return self.value


@dataclass
class KMeansConfig:
    k: int
    seed: int = 0
    max_iter: int = 300
    tol: float = 1e-6
    init: Init = Init.KPP
    restarts: int = 10

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.max_iter < 1 or self.restarts < 1:
            raise ValueError("max_iter and restarts must be at least 1")
        if self.tol < 0:
            raise ValueError("tol must be non-negative")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")


@dataclass(eq=False)
class Clustering:
    k: int
    assignments: dict[str, int]
    centroids: np.ndarray
    objective: float
    iterations: int
    seed: int
    objective_trace: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.centroids = np.asarray(self.centroids, dtype=np.float64)
        if self.centroids.shape[0] != self.k:
            raise ValueError("centroid count must equal k")
        used = set(self.assignments.values())
        if not used <= set(range(self.k)):
            raise ValueError("assignment indices out of range")
        if used != set(range(self.k)):
            raise ValueError("every cluster must have at least one member")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Clustering):
            return NotImplemented
        return (self.k == other.k
                and self.assignments == other.assignments
                and self.objective == other.objective
                and self.iterations == other.iterations
                and self.seed == other.seed
                and self.objective_trace == other.objective_trace
                and np.array_equal(self.centroids, other.centroids))

    def members(self, cluster: int) -> list[str]:
        return sorted(a for a, c in self.assignments.items() if c == cluster)

    def groups(self) -> frozenset[frozenset[str]]:
        """The partition as a label-free set of account groups."""
        out: dict[int, set[str]] = {}
        for account, c in self.assignments.items():
            out.setdefault(c, set()).add(account)
        return frozenset(frozenset(g) for g in out.values())


def _sq_dists(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    """(N, k) squared Euclidean distances, computed the direct way so
    argmin ties are exact."""
    return ((x[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)


def _cost(x: np.ndarray, labels: np.ndarray, c: np.ndarray) -> float:
    return float(((x - c[labels]) ** 2).sum())


def _repair_empty(x, labels, c) -> bool:
    """Reseed each empty cluster with the point farthest from its assigned
    centroid, skipping points that are their cluster's sole member. Mutates
    labels and c in place; returns whether anything changed."""
    k = c.shape[0]
    counts = np.bincount(labels, minlength=k)
    repaired = False
    while True:
        empties = np.flatnonzero(counts == 0)
        if empties.size == 0:
            return repaired
        target = int(empties[0])
        d_own = ((x - c[labels]) ** 2).sum(axis=1)
        d_own[counts[labels] <= 1] = -1.0  # moving a sole member just shifts the hole
        point = int(np.argmax(d_own))
        counts[labels[point]] -= 1
        labels[point] = target
        counts[target] = 1
        c[target] = x[point]
        repaired = True


def _kpp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = rng.integers(n)
    d2 = ((x - x[chosen[0]]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = float(d2.sum())
        if total > 0.0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            # remaining points duplicate the chosen ones; any unchosen index works
            unchosen = np.setdiff1d(np.arange(n), chosen[:j])
            idx = int(unchosen[rng.integers(unchosen.size)]) if unchosen.size \
                else int(rng.integers(n))
        chosen[j] = idx
        d2 = np.minimum(d2, ((x - x[idx]) ** 2).sum(axis=1))
    return x[chosen].copy()


def _partition_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    labels = rng.permutation(x.shape[0]) % k  # balanced, so no cluster empty
    return np.stack([x[labels == j].mean(axis=0) for j in range(k)])


def _lloyd(
    x: np.ndarray,
    c0: np.ndarray,
    max_iter: int,
    tol: float,
) -> tuple[np.ndarray, np.ndarray, float, int, list[float]]:
    """One k-means run from explicit starting centroids.

    Returns (labels, centroids, objective, iterations, per-iteration
    objective trace). Stops on label stability or when the relative
    objective improvement falls below tol; either way the returned labels
    are argmin against the returned centroids.
    """
    c = np.array(c0, dtype=np.float64)
    prev_labels: np.ndarray | None = None
    prev_obj = float("inf")
    trace: list[float] = []
    labels = np.zeros(x.shape[0], dtype=np.int64)
    obj = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        labels = _sq_dists(x, c).argmin(axis=1)
        repaired = _repair_empty(x, labels, c)
        if (not repaired and prev_labels is not None
                and np.array_equal(labels, prev_labels)):
            obj = _cost(x, labels, c)  # c already equals the member means
            trace.append(obj)
            break
        for j in range(c.shape[0]):
            c[j] = x[labels == j].mean(axis=0)
        obj = _cost(x, labels, c)
        trace.append(obj)
        if np.isfinite(prev_obj) and prev_obj - obj <= tol * prev_obj:
            # tol stop: one final assignment so labels are argmin against c
            labels = _sq_dists(x, c).argmin(axis=1)
            _repair_empty(x, labels, c)
            obj = _cost(x, labels, c)
            break
        prev_labels = labels
        prev_obj = obj
    return labels, c, obj, it, trace


_INITIALIZERS = {
    Init.KPP: _kpp_init,
    Init.RANDOM_PARTITION: _partition_init,
}


def _sorted_matrix(profiles: ProfileSet) -> tuple[list[str], np.ndarray]:
    ids = profiles.account_ids()
    order = sorted(range(len(ids)), key=ids.__getitem__)
    return [ids[i] for i in order], profiles.matrix()[order]


def kmeans(profiles: ProfileSet, config: KMeansConfig) -> Clustering:
    """Best of ``config.restarts`` seeded Lloyd runs."""
    if profiles.N == 0:
        raise EmptyProfileSet("cannot cluster an empty profile set")
    if config.k > profiles.N:
        raise KGreaterThanN(f"k={config.k} exceeds the {profiles.N} profiles")
    if not profiles.profiles[0].normalized:
        logger.warning("clustering unnormalized profiles; magnitudes will "
                       "dominate shapes")
    ids, x = _sorted_matrix(profiles)
    init = _INITIALIZERS[config.init]
    best = None
    for r in range(config.restarts):
        rng = np.random.default_rng([config.seed, r])
        c0 = init(x, config.k, rng)
        run = _lloyd(x, c0, config.max_iter, config.tol)
        if best is None or run[2] < best[2]:
            best = run
    labels, centroids, objective, iterations, trace = best
    return Clustering(
        k=config.k,
        assignments={a: int(l) for a, l in zip(ids, labels)},
        centroids=centroids,
        objective=objective,
        iterations=iterations,
        seed=config.seed,
        objective_trace=trace,
    )


def objective(profiles: ProfileSet, clustering: Clustering) -> float:
    """Recompute the within-cluster sum of squares from scratch."""
    total = 0.0
    for p in profiles.profiles:
        if p.account_id not in clustering.assignments:
            raise UnassignedAccount(f"no cluster assigned to {p.account_id!r}")
        total += d_dos(p.values, clustering.centroids[clustering.assignments[p.account_id]])
    return total


@dataclass(frozen=True)
class SweepPoint:
    k: int
    objective: float


def sweep_k(
    profiles: ProfileSet,
    k_range: Iterable[int],
    config: KMeansConfig | None = None,
) -> list[SweepPoint]:
    """Best objective per k, ascending in k.

    Besides the usual restarts, each k seeds one extra run from the previous
    k's solution plus its farthest point, which makes the reported
    objectives non-increasing in k.
    """
    base = config or KMeansConfig(k=1)
    _, x = _sorted_matrix(profiles)
    points: list[SweepPoint] = []
    prev_centroids: np.ndarray | None = None
    for k in sorted(set(int(k) for k in k_range)):
        result = kmeans(profiles, KMeansConfig(
            k=k, seed=base.seed, max_iter=base.max_iter, tol=base.tol,
            init=base.init, restarts=base.restarts))
        best_c, best_obj = result.centroids, result.objective
        if prev_centroids is not None:
            # grow the previous solution to k centroids farthest-first; its
            # starting cost cannot exceed the previous best objective
            warm = prev_centroids
            while warm.shape[0] < k:
                d_near = _sq_dists(x, warm).min(axis=1)
                warm = np.vstack([warm, x[int(np.argmax(d_near))]])
            _, w_c, w_obj, _, _ = _lloyd(x, warm, base.max_iter, base.tol)
            if w_obj < best_obj:
                best_c, best_obj = w_c, w_obj
        points.append(SweepPoint(k, best_obj))
        prev_centroids = best_c
    return points


def clustering_to_dict(clustering: Clustering) -> dict:
    return {
        "k": clustering.k,
        "seed": clustering.seed,
        "objective": clustering.objective,
        "iterations": clustering.iterations,
        "objective_trace": list(clustering.objective_trace),
        "centroids": [[float(v) for v in row] for row in clustering.centroids],
        "assignments": dict(sorted(clustering.assignments.items())),
    }


def clustering_from_dict(data: dict) -> Clustering:
    return Clustering(
        k=int(data["k"]),
        assignments={a: int(c) for a, c in data["assignments"].items()},
        centroids=np.array(data["centroids"], dtype=np.float64),
        objective=float(data["objective"]),
        iterations=int(data["iterations"]),
        seed=int(data["seed"]),
        objective_trace=[float(v) for v in data.get("objective_trace", [])],
    )


def save_clustering(clustering: Clustering, path: str | Path) -> None:
    text = json.dumps(clustering_to_dict(clustering), indent=2, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_clustering(path: str | Path) -> Clustering:
    return clustering_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
