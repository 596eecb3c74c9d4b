"""Gradient boosting of least-squares regression trees on the binomial deviance."""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ..dataset import Dataset, design_matrix
from . import _trees
from .base import BRT, FittedModel, prepare, require_keys

KEYS = ("n_tree", "shrinkage", "interaction_depth")
MIN_NODE = 10


def _check(setting):
    require_keys(setting, KEYS)
    if int(setting["n_tree"]) < 1:
        raise ValueError("n_tree must be at least 1")
    if not float(setting["shrinkage"]) > 0:
        raise ValueError("shrinkage must be positive")
    if int(setting["interaction_depth"]) < 1:
        raise ValueError("interaction_depth must be at least 1")
    return int(setting["n_tree"]), float(setting["shrinkage"]), int(setting["interaction_depth"])


@dataclass(frozen=True)
class BoostModel(FittedModel):
    f0: float = 0.0
    trees: tuple = ()
    deviance: np.ndarray = None

    def _predict(self, X):
        return expit(self.decision(X))

    def decision(self, X):
        return _trees.boost_predict(self.f0, float(self.setting["shrinkage"]), *self.trees,
                                    np.ascontiguousarray(X, dtype=np.float64))


def fit_brt(train: Dataset, setting, seed=0, min_node=MIN_NODE, track_deviance=False) -> BoostModel:
    """Stage-wise boosting; every stage is deterministic, so ``seed`` is unused.

    Each stage grows a tree of depth at most ``interaction_depth`` whose
    leaves keep at least ``min_node`` rows, fitted by least squares to
    ``y - p``; leaves then take one Newton step ``sum(g) / sum(p(1-p))``.
    """
    n_tree, shrinkage, depth = _check(setting)
    X, names, y = prepare(train)
    train.check_both_classes()
    f0, _, feat, thr, left, right, value, offsets, dev = _trees.boost_fit(
        X, y, n_tree, shrinkage, depth, int(min_node), np.empty((0, X.shape[1])), True,
        bool(track_deviance))
    return BoostModel(BRT, train.schema, names, dict(setting), f0=float(f0),
                      trees=(feat, thr, left, right, value, offsets),
                      deviance=dev if track_deviance else None)


def score_settings(train: Dataset, test: Dataset, settings, seed=0, min_node=MIN_NODE):
    """Test-set probabilities for many settings, scoring while boosting.

    The running test-set scores accumulate in the same order as
    :meth:`BoostModel.decision`, so results equal fit-then-predict exactly.
    """
    X, names, y = prepare(train)
    train.check_both_classes()
    Q = np.ascontiguousarray(design_matrix(test, names))
    out = []
    for s in settings:
        n_tree, shrinkage, depth = _check(s)
        fe = _trees.boost_fit(X, y, n_tree, shrinkage, depth, int(min_node), Q, False, False)[1]
        out.append(expit(fe))
    return out
