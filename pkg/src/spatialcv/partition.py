"""Repeated k-fold assignments: random, or spatial via k-means on coordinates."""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ._seeding import rng_for

RANDOM = "random"
SPATIAL = "spatial_kmeans"
STRATEGIES = (RANDOM, SPATIAL)

_ALIASES = {"random": RANDOM, "non-spatial": RANDOM, "nonspatial": RANDOM,
            "spatial": SPATIAL, "spatial_kmeans": SPATIAL, "kmeans": SPATIAL}


def strategy_name(name: str) -> str:
    try:
        return _ALIASES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown partition strategy {name!r}") from None


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class PartitionSpec:
    k: int = 5
    repetitions: int = 1
    strategy: str = RANDOM
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "strategy", strategy_name(self.strategy))
        if self.k < 2:
            raise PartitionError("k must be at least 2")
        if self.repetitions < 1:
            raise PartitionError("repetitions must be at least 1")


@dataclass(frozen=True)
class FoldAssignment:
    """``folds[r, i]`` is the fold of row ``i`` in repetition ``r``.

    For spatial partitions ``centroids[r, f]`` is the mean coordinate of fold f.
    """

    folds: np.ndarray
    k: int
    strategy: str
    centroids: Optional[np.ndarray] = None

    @property
    def repetitions(self) -> int:
        return self.folds.shape[0]

    @property
    def n(self) -> int:
        return self.folds.shape[1]

    def fold_sizes(self, rep: int) -> np.ndarray:
        return np.bincount(self.folds[rep], minlength=self.k)


def random_kfold(n: int, spec: PartitionSpec) -> FoldAssignment:
    if spec.k > n:
        raise PartitionError(f"k={spec.k} exceeds the number of rows n={n}")
    folds = np.empty((spec.repetitions, n), dtype=np.int64)
    base = np.arange(n) % spec.k
    for r in range(spec.repetitions):
        perm = rng_for("random-kfold", spec.seed, r).permutation(n)
        folds[r, perm] = base
    return FoldAssignment(folds, spec.k, RANDOM)


# -- k-means -----------------------------------------------------------------

def _sqdist(points, centers):
    return ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _kmeanspp(points, k, rng):
    n = len(points)
    centers = np.empty((k, 2))
    centers[0] = points[rng.integers(n)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.uniform(0, total), side="right"))
            idx = min(idx, n - 1)
            while d2[idx] == 0:  # only reachable through rounding at the cumsum boundary
                idx = (idx + 1) % n
        centers[c] = points[idx]
        d2 = np.minimum(d2, ((points - centers[c]) ** 2).sum(axis=1))
    return centers


def _means(points, labels, k):
    counts = np.bincount(labels, minlength=k)
    sums = np.zeros((k, 2))
    np.add.at(sums, labels, points)
    with np.errstate(invalid="ignore", divide="ignore"):
        return sums / counts[:, None], counts


def _lloyd(points, centers, tol, max_iter):
    k = len(centers)
    labels = np.argmin(_sqdist(points, centers), axis=1)
    for _ in range(max_iter):
        new, counts = _means(points, labels, k)
        empty = counts == 0
        new[empty] = centers[empty]
        shift = np.sqrt(((new - centers) ** 2).sum(axis=1)).max()
        centers = new
        new_labels = np.argmin(_sqdist(points, centers), axis=1)
        stable = np.array_equal(new_labels, labels)
        labels = new_labels
        if stable or shift < tol:
            break
    return labels


def _transfer_pass(points, labels, k):
    """Single-point moves that lower the within-cluster sum of squares.

    Lloyd iterations can stall in partitions that one point transfer would
    improve (e.g. three corners of a square against one); this repairs that.
    """
    moved = False
    for _ in range(len(points) * k):
        centers, counts = _means(points, labels, k)
        d2 = _sqdist(points, np.nan_to_num(centers))
        own = labels
        cnt_own = counts[own].astype(np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            remove = np.where(cnt_own > 1, cnt_own / (cnt_own - 1) * d2[np.arange(len(points)), own], -np.inf)
        add = counts[None, :] / (counts[None, :] + 1.0) * d2
        add[counts[None, :].repeat(len(points), 0) == 0] = np.inf
        add[np.arange(len(points)), own] = np.inf
        gain = remove[:, None] - add
        i, b = np.unravel_index(np.argmax(gain), gain.shape)
        scale = max(float(d2.max()), 1e-300)
        if not gain[i, b] > 1e-12 * scale:
            break
        labels = labels.copy()
        labels[i] = b
        moved = True
    return labels, moved


def kmeans_labels(points, k, rng, max_iter=100, tol=None):
    points = np.asarray(points, dtype=np.float64)
    extent = float(np.ptp(points, axis=0).max()) if len(points) else 0.0
    if tol is None:
        tol = 1e-9 * (extent if extent > 0 else 1.0)
    centers = _kmeanspp(points, k, rng)
    labels = _lloyd(points, centers, tol, max_iter)
    for _ in range(max_iter):
        labels, moved = _transfer_pass(points, labels, k)
        if not moved:
            break
        centers, counts = _means(points, labels, k)
        labels = _lloyd(points, centers, tol, max_iter)
    return labels


def spatial_kfold(coords, spec: PartitionSpec, max_attempts: int = 10) -> FoldAssignment:
    coords = np.asarray(coords, dtype=np.float64)
    n = len(coords)
    if spec.k > n:
        raise PartitionError(f"k={spec.k} exceeds the number of rows n={n}")
    if not np.isfinite(coords).all():
        raise PartitionError("coordinates must be finite")
    n_unique = len(np.unique(coords, axis=0))
    if n_unique < spec.k:
        raise PartitionError(f"only {n_unique} distinct locations for k={spec.k} clusters "
                             f"({n - n_unique} duplicate coordinate rows)")
    folds = np.empty((spec.repetitions, n), dtype=np.int64)
    centroids = np.empty((spec.repetitions, spec.k, 2))
    for r in range(spec.repetitions):
        for attempt in range(max_attempts):
            labels = kmeans_labels(coords, spec.k, rng_for("spatial-kfold", spec.seed, r, attempt))
            if np.bincount(labels, minlength=spec.k).min() > 0:
                break
        else:
            raise PartitionError(f"repetition {r}: empty cluster after {max_attempts} attempts")
        folds[r] = labels
        centroids[r] = _means(coords, labels, spec.k)[0]
    return FoldAssignment(folds, spec.k, SPATIAL, centroids)


def make_folds(coords, spec: PartitionSpec) -> FoldAssignment:
    if spec.strategy == SPATIAL:
        return spatial_kfold(coords, spec)
    return random_kfold(len(coords), spec)


def fold_split(assign: FoldAssignment, rep: int, fold: int):
    """Row indices ``(train, test)`` for one fold of one repetition."""
    if not (0 <= rep < assign.repetitions and 0 <= fold < assign.k):
        raise IndexError(f"rep={rep}, fold={fold} out of range")
    mask = assign.folds[rep] == fold
    return np.flatnonzero(~mask), np.flatnonzero(mask)


def write_folds_csv(assign: FoldAssignment, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row_id", "repetition", "fold"])
        for r in range(assign.repetitions):
            for i, f in enumerate(assign.folds[r]):
                w.writerow([i, r, int(f)])


def write_centroids_csv(assign: FoldAssignment, path) -> None:
    if assign.centroids is None:
        raise ValueError("assignment carries no centroids")
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["repetition", "fold", "centroid_x", "centroid_y"])
        for r in range(assign.repetitions):
            for f in range(assign.k):
                cx, cy = assign.centroids[r, f]
                w.writerow([r, f, repr(float(cx)), repr(float(cy))])


def read_folds_csv(path) -> FoldAssignment:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    rid = np.array([int(r["row_id"]) for r in rows])
    rep = np.array([int(r["repetition"]) for r in rows])
    fold = np.array([int(r["fold"]) for r in rows])
    folds = np.full((rep.max() + 1, rid.max() + 1), -1, dtype=np.int64)
    folds[rep, rid] = fold
    if (folds < 0).any():
        raise ValueError(f"{path}: incomplete fold table")
    return FoldAssignment(folds, int(fold.max()) + 1, "unknown")
