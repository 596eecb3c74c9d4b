"""Weighted k-nearest neighbours with kernel weights on normalised distances."""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..dataset import Dataset, DataError, design_matrix
from .base import WKNN, FittedModel, Standardizer, prepare, require_keys

KERNELS = ("rectangular", "triangular", "epanechnikov", "biweight", "triweight",
           "cos", "inv", "gaussian", "optimal")
KEYS = ("k", "distance", "kernel")


def kernel_weights(name: str, d) -> np.ndarray:
    """Weight of a neighbour at normalised distance ``d`` (0 <= d <= 1)."""
    d = np.abs(np.asarray(d, dtype=np.float64))
    if name == "rectangular":
        return np.ones_like(d)
    if name == "triangular":
        return 1.0 - d
    if name == "epanechnikov":
        return 0.75 * (1.0 - d * d)
    if name == "biweight":
        return (15.0 / 16.0) * (1.0 - d * d) ** 2
    if name == "triweight":
        return (35.0 / 32.0) * (1.0 - d * d) ** 3
    if name == "cos":
        return (math.pi / 4.0) * np.cos(math.pi * d / 2.0)
    if name == "inv":
        return 1.0 / (d + 1e-12)
    if name == "gaussian":
        return np.exp(-0.5 * d * d)
    raise ValueError(f"unknown kernel {name!r}")


def optimal_weights(k: int, p: int) -> np.ndarray:
    """Rank weights of the optimal kernel for neighbours 1..k in dimension p, clipped at 0."""
    p = max(int(p), 1)
    i = np.arange(1, k + 1, dtype=np.float64)
    e = 1.0 + 2.0 / p
    w = (1.0 + p / 2.0 - p / (2.0 * k ** (2.0 / p)) * (i ** e - (i - 1.0) ** e)) / k
    return np.maximum(w, 0.0)


def minkowski(Q, T, order: float) -> np.ndarray:
    """Pairwise Minkowski distances between rows of ``Q`` and ``T``.

    Differences are scaled by their per-pair maximum before powering, so large
    orders do not overflow.
    """
    diff = np.abs(Q[:, None, :] - T[None, :, :])
    if diff.shape[2] == 0:
        return np.zeros(diff.shape[:2])
    top = diff.max(axis=2)
    safe = np.where(top > 0, top, 1.0)
    if order == 1:
        return diff.sum(axis=2)
    if order == 2:
        return np.sqrt((diff * diff).sum(axis=2))
    return top * ((diff / safe[:, :, None]) ** order).sum(axis=2) ** (1.0 / order)


def clamp_k(k: int, n_train: int):
    if n_train < 2:
        raise DataError("weighted k-NN needs at least two training rows")
    if k < 1:
        raise ValueError("k must be at least 1")
    return (n_train - 1, True) if k > n_train - 1 else (int(k), False)


def _vote(D, order, y, k, kernel, p):
    """Probabilities from sorted distances; returns ``(prob, fell_back)``."""
    idx = order[:, :k + 1]
    d = np.take_along_axis(D, idx, axis=1)
    dk1 = d[:, k:k + 1]
    with np.errstate(invalid="ignore", divide="ignore"):
        dhat = np.where(dk1 > 0, d[:, :k] / dk1, 0.0)
    if kernel == "optimal":
        w = np.broadcast_to(optimal_weights(k, p), dhat.shape).copy()
    else:
        w = kernel_weights(kernel, dhat)
    yk = y[idx[:, :k]]
    sw = w.sum(axis=1)
    dead = ~(sw > 0)
    if dead.any():
        w[dead] = 1.0
        sw[dead] = k
    return (w * yk).sum(axis=1) / sw, bool(dead.any())


@dataclass(frozen=True)
class WknnModel(FittedModel):
    scaler: Standardizer = None
    Z: np.ndarray = None
    y: np.ndarray = None
    k: int = 7

    def _predict(self, X):
        Q = self.scaler(X)
        D = minkowski(Q, self.Z, self.setting["distance"])
        order = np.argsort(D, axis=1, kind="stable")
        prob, fell_back = _vote(D, order, self.y, self.k, self.setting["kernel"], self.Z.shape[1])
        if fell_back:
            warnings.warn("all kernel weights were zero for some queries; used equal weights",
                          stacklevel=3)
        return prob


def _check(setting):
    require_keys(setting, KEYS)
    if setting["kernel"] not in KERNELS:
        raise ValueError(f"unknown kernel {setting['kernel']!r}")
    if setting["distance"] <= 0:
        raise ValueError("Minkowski order must be positive")


def fit_wknn(train: Dataset, setting) -> WknnModel:
    _check(setting)
    X, names, y = prepare(train)
    k, clamped = clamp_k(int(setting["k"]), train.n)
    scaler = Standardizer.fit(X)
    flags = ("k_clamped",) if clamped else ()
    return WknnModel(WKNN, train.schema, names, dict(setting), flags=flags,
                     scaler=scaler, Z=scaler(X), y=y.astype(np.float64), k=k)


def score_settings(train: Dataset, test: Dataset, settings, seed=0):
    """Predictions on ``test`` for many settings, sharing distance computations.

    Equal to ``fit_wknn(train, s).predict(test)`` for every setting.
    """
    X, names, y = prepare(train)
    scaler = Standardizer.fit(X)
    Z = scaler(X)
    Q = scaler(design_matrix(test, names))
    yf = y.astype(np.float64)
    cache = {}
    out = []
    for s in settings:
        _check(s)
        key = s["distance"]
        if key not in cache:
            D = minkowski(Q, Z, key)
            cache[key] = (D, np.argsort(D, axis=1, kind="stable"))
        D, order = cache[key]
        k, _ = clamp_k(int(s["k"]), train.n)
        out.append(_vote(D, order, yf, k, s["kernel"], Z.shape[1])[0])
    return out
