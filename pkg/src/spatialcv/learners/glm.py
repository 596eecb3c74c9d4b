"""Logistic regression by iteratively reweighted least squares."""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ..dataset import Dataset
from .base import GLM, FittedModel, Standardizer, prepare

MAX_ITER = 25
TOL = 1e-8
RIDGE = 1e-8
SEPARATION_COEF = 15.0


def binomial_deviance(y, eta) -> float:
    """-2 log-likelihood of 0/1 labels under logits ``eta``."""
    y = np.asarray(y, dtype=np.float64)
    return float(2.0 * np.sum(np.logaddexp(0.0, eta) - y * eta))


@dataclass(frozen=True)
class GlmModel(FittedModel):
    intercept: float = 0.0
    coef: np.ndarray = None
    std_coef: np.ndarray = None
    iterations: int = 0
    converged: bool = True

    def _predict(self, X):
        return expit(self.intercept + X @ self.coef)

    def linear_predictor(self, X):
        return self.intercept + np.asarray(X, dtype=np.float64) @ self.coef


def irls(Z, y, max_iter=MAX_ITER, tol=TOL, ridge=RIDGE):
    """Fit ``logit P(y=1) = b0 + Z b`` and return ``(beta, iterations, converged)``.

    The stopping rule compares successive deviances relative to the current
    one, ``|D - D_old| / (|D| + 0.1) < tol``. The ridge term only guards the
    normal equations against rank deficiency.
    """
    n, p = Z.shape
    A = np.hstack([np.ones((n, 1)), Z])
    yf = y.astype(np.float64)
    ybar = min(max(yf.mean(), 1e-10), 1 - 1e-10)
    beta = np.zeros(p + 1)
    beta[0] = np.log(ybar / (1 - ybar))
    eta = A @ beta
    dev_old = binomial_deviance(yf, eta)
    eye = ridge * np.eye(p + 1)
    for it in range(1, max_iter + 1):
        mu = expit(eta)
        w = mu * (1.0 - mu)
        lhs = A.T @ (A * w[:, None]) + eye
        rhs = A.T @ (w * eta + (yf - mu))
        beta = np.linalg.solve(lhs, rhs)
        eta = A @ beta
        dev = binomial_deviance(yf, eta)
        if abs(dev - dev_old) / (abs(dev) + 0.1) < tol:
            return beta, it, True
        dev_old = dev
    return beta, max_iter, False


def fit_glm(train: Dataset) -> GlmModel:
    X, names, y = prepare(train, need_features=False)
    train.check_both_classes()
    scaler = Standardizer.fit(X)
    beta, iterations, converged = irls(scaler(X), y)
    coef = beta[1:] / scaler.scale
    intercept = float(beta[0] - coef @ scaler.mean)
    flags = ()
    if not converged and np.any(np.abs(beta[1:]) > SEPARATION_COEF):
        flags = ("quasi_separation",)
    return GlmModel(GLM, train.schema, names, {}, flags=flags, intercept=intercept, coef=coef,
                    std_coef=beta[1:], iterations=iterations, converged=converged)
