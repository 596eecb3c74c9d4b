"""Random forest of unpruned Gini trees on bootstrap samples."""

from dataclasses import dataclass

import numpy as np

from ..dataset import Dataset, design_matrix
from . import _trees
from .base import RF, FittedModel, prepare, require_keys

KEYS = ("mtry", "num_trees")


def clamp_mtry(mtry: int, p: int):
    if mtry < 1:
        raise ValueError("mtry must be at least 1")
    return (p, True) if mtry > p else (int(mtry), False)


def _fit_seed(seed) -> int:
    return int(seed) & 0x7FFFFFFFFFFFFFFF


@dataclass(frozen=True)
class ForestModel(FittedModel):
    trees: tuple = ()

    @property
    def n_trees(self) -> int:
        return len(self.trees[-1]) - 1

    def _predict(self, X):
        return _trees.forest_predict(*self.trees, X)


def fit_rf(train: Dataset, setting, seed=0, bootstrap=True) -> ForestModel:
    """Grow ``num_trees`` trees.

    Tree ``t`` draws its bootstrap sample and per-node feature orders from a
    stream keyed by ``(seed, t)``, so a forest of T trees is the first T trees
    of any larger forest with the same seed and mtry. ``bootstrap=False``
    grows every tree on the full training set.
    """
    require_keys(setting, KEYS)
    X, names, y = prepare(train)
    mtry, clamped = clamp_mtry(int(setting["mtry"]), X.shape[1])
    n_trees = int(setting["num_trees"])
    if n_trees < 1:
        raise ValueError("num_trees must be at least 1")
    trees = _trees.forest_fit(X, y, mtry, n_trees, _fit_seed(seed), bool(bootstrap))
    flags = ("mtry_clamped",) if clamped else ()
    return ForestModel(RF, train.schema, names, dict(setting), flags=flags, trees=trees)


def score_settings(train: Dataset, test: Dataset, settings, seed=0):
    """Predictions on ``test`` for many settings sharing one seed.

    Settings with the same effective mtry are served by a single forest,
    read off after each requested tree count.
    """
    X, names, y = prepare(train)
    Q = np.ascontiguousarray(design_matrix(test, names))
    groups = {}
    for i, s in enumerate(settings):
        require_keys(s, KEYS)
        mtry, _ = clamp_mtry(int(s["mtry"]), X.shape[1])
        groups.setdefault(mtry, []).append((int(s["num_trees"]), i))
    out = [None] * len(settings)
    for mtry, members in sorted(groups.items()):
        checkpoints = np.array(sorted({t for t, _ in members}), dtype=np.int64)
        path = _trees.forest_vote_path(X, y, Q, mtry, _fit_seed(seed), checkpoints)
        row = {int(t): c for c, t in enumerate(checkpoints)}
        for t, i in members:
            out[i] = path[row[t]].copy()
    return out
