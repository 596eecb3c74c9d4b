"""Shared learner plumbing: kinds, default settings and the fitted-model interface."""

import math
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from ..dataset import Dataset, DataError, FeatureSchema, design_matrix, one_hot

GLM = "GLM"
WKNN = "WKNN"
RF = "RF"
BRT = "BRT"
SVM = "SVM"
KINDS = (GLM, WKNN, RF, BRT, SVM)


def learner_kind(name: str) -> str:
    key = str(name).strip().upper()
    if key not in KINDS:
        raise ValueError(f"unknown learner {name!r}; expected one of {', '.join(KINDS)}")
    return key


def default_setting(kind: str, p: int = None) -> Dict[str, object]:
    """Untuned hyperparameters. ``p`` (design columns) is needed for RF only."""
    kind = learner_kind(kind)
    if kind == GLM:
        return {}
    if kind == WKNN:
        return {"k": 7, "distance": 2, "kernel": "optimal"}
    if kind == RF:
        if p is None:
            raise ValueError("the RF default mtry depends on the number of design columns")
        return {"mtry": max(1, int(math.isqrt(int(p)))), "num_trees": 500}
    if kind == BRT:
        return {"n_tree": 100, "shrinkage": 0.1, "interaction_depth": 1}
    return {"C": 1.0, "sigma": 1.0}


def require_keys(setting, keys):
    missing = [k for k in keys if k not in setting]
    extra = [k for k in setting if k not in keys]
    if missing or extra:
        raise ValueError(f"setting {setting!r}: missing {missing}, unexpected {extra}")


def prepare(train: Dataset, need_features: bool = True):
    """Design matrix, column labels and 0/1 labels of a training set."""
    if train.n < 1:
        raise DataError("no training rows")
    X, names = one_hot(train)
    if need_features and X.shape[1] == 0:
        raise DataError("this learner needs at least one design column")
    return np.ascontiguousarray(X), tuple(names), np.asarray(train.labels, dtype=np.int64)


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X):
        sd = X.std(axis=0)
        return cls(X.mean(axis=0), np.where(sd > 0, sd, 1.0))

    def __call__(self, X):
        return (X - self.mean) / self.scale


@dataclass(frozen=True)
class FittedModel:
    """A trained classifier bound to the schema and design columns it saw.

    ``flags`` carries non-fatal conditions met during fitting (for example
    ``"quasi_separation"`` or ``"max_iter"``).
    """

    kind: str
    schema: FeatureSchema
    columns: Tuple[str, ...]
    setting: Dict[str, object]
    flags: Tuple[str, ...] = field(default=(), kw_only=True)

    def predict(self, ds: Dataset) -> np.ndarray:
        if ds.schema != self.schema:
            raise DataError("rows to score do not match the training schema")
        return self.predict_matrix(design_matrix(ds, self.columns))

    def predict_matrix(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.columns):
            raise DataError(f"expected {len(self.columns)} design columns, got shape {X.shape}")
        return self._predict(X)

    def _predict(self, X) -> np.ndarray:
        raise NotImplementedError
