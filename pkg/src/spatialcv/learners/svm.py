"""Soft-margin support vector classifier with a Gaussian (RBF) kernel."""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from ..dataset import Dataset, design_matrix
from ._smo import smo
from .base import SVM, FittedModel, Standardizer, prepare, require_keys

KEYS = ("C", "sigma")
EPS = 1e-3
PASSES = 10


def _check(setting):
    require_keys(setting, KEYS)
    C, sigma = float(setting["C"]), float(setting["sigma"])
    if not (C > 0 and sigma > 0):
        raise ValueError("C and sigma must be positive")
    return C, sigma


def rbf(sqdist, sigma):
    """``exp(-sigma * ||x - x'||^2)`` from squared distances."""
    return np.exp(-sigma * sqdist)


@dataclass(frozen=True)
class SvmModel(FittedModel):
    scaler: Standardizer = None
    Z: np.ndarray = None
    coef: np.ndarray = None
    rho: float = 0.0
    alpha: np.ndarray = None
    iterations: int = 0

    def _predict(self, X):
        """Decision values ``sum_i alpha_i y_i k(x_i, x) - rho`` (not probabilities)."""
        return rbf(cdist(self.scaler(X), self.Z, "sqeuclidean"), self.setting["sigma"]) @ self.coef - self.rho


def _solve(K, ypm, C, n):
    return smo(K, ypm, C, EPS, PASSES * n)


def fit_svm(train: Dataset, setting) -> SvmModel:
    """Fit by SMO on the standardised design.

    The solver stops at KKT violation below ``1e-3`` or after ``10 n``
    pair updates; in the latter case the model carries the ``max_iter`` flag.
    """
    C, sigma = _check(setting)
    X, names, y = prepare(train)
    train.check_both_classes()
    scaler = Standardizer.fit(X)
    Z = scaler(X)
    ypm = np.where(y == 1, 1.0, -1.0)
    K = rbf(cdist(Z, Z, "sqeuclidean"), sigma)
    alpha, rho, iterations, converged = _solve(K, ypm, C, len(y))
    flags = () if converged else ("max_iter",)
    return SvmModel(SVM, train.schema, names, dict(setting), flags=flags, scaler=scaler, Z=Z,
                    coef=alpha * ypm, rho=float(rho), alpha=alpha, iterations=int(iterations))


def score_settings(train: Dataset, test: Dataset, settings, seed=0):
    """Decision values on ``test`` for many settings, reusing squared distances."""
    X, names, y = prepare(train)
    train.check_both_classes()
    scaler = Standardizer.fit(X)
    Z = scaler(X)
    D = cdist(Z, Z, "sqeuclidean")
    Dq = cdist(scaler(design_matrix(test, names)), Z, "sqeuclidean")
    ypm = np.where(y == 1, 1.0, -1.0)
    out = []
    for s in settings:
        C, sigma = _check(s)
        alpha, rho, _, _ = _solve(rbf(D, sigma), ypm, C, len(y))
        out.append(rbf(Dq, s["sigma"]) @ (alpha * ypm) - rho)
    return out
