"""Synthetic spatially autocorrelated binary classification data.

Predictors are draws of a zero-mean Gaussian random field with exponential
covariance ``sill * exp(-d / range) + nugget * [d == 0]`` sampled at uniformly
scattered points; the label is Bernoulli with logit equal to the sum of the
informative fields plus an intercept.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.linalg import cholesky
from scipy.spatial.distance import cdist
from scipy.special import expit

from ._seeding import rng_for
from .dataset import Dataset, DataError, FeatureSchema

MAX_FIELD_POINTS = 3000


@dataclass(frozen=True)
class FieldSpec:
    n: int = 600
    extent: Tuple[float, float] = (1.0, 1.0)
    range: float = 0.3
    sill: float = 0.8
    nugget: float = 0.0
    n_informative: int = 3
    n_noise: int = 2
    intercept: float = -1.1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "extent", tuple(float(e) for e in self.extent))
        if not self.range > 0:
            raise ValueError("range must be positive")
        if self.sill < 0 or self.nugget < 0:
            raise ValueError("sill and nugget must be non-negative")
        if self.n < 10:
            raise ValueError("n must be at least 10")
        if self.n_informative < 0 or self.n_noise < 0 or self.n_informative + self.n_noise < 1:
            raise ValueError("need at least one predictor")
        if min(self.extent) <= 0:
            raise ValueError("extent must be positive")


def sample_coordinates(spec: FieldSpec) -> np.ndarray:
    rng = rng_for("coords", spec.seed)
    return rng.uniform(0.0, 1.0, size=(spec.n, 2)) * np.asarray(spec.extent)


def exponential_covariance(coords, range_, sill, nugget) -> np.ndarray:
    d = cdist(coords, coords)
    cov = sill * np.exp(-d / range_)
    if nugget:
        cov += nugget * (d == 0.0)
    return cov


def _factor(cov: np.ndarray) -> np.ndarray:
    jitter = 1e-10
    eye = np.eye(len(cov))
    for _ in range(6):
        try:
            return cholesky(cov + jitter * eye, lower=True)
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise np.linalg.LinAlgError(f"covariance factorization failed with jitter up to {jitter / 10:g}")


def gaussian_random_field(coords, range_, sill, nugget, seed, size=None) -> np.ndarray:
    """Draw field values at ``coords``; ``size`` independent fields if given.

    Returns shape ``(n,)`` or ``(n, size)``.
    """
    coords = np.asarray(coords, dtype=np.float64)
    if len(coords) > MAX_FIELD_POINTS:
        raise ValueError(f"dense field simulation is limited to {MAX_FIELD_POINTS} points")
    chol = _factor(exponential_covariance(coords, range_, sill, nugget))
    z = rng_for("field", seed).standard_normal((len(coords), 1 if size is None else size))
    out = chol @ z
    return out[:, 0] if size is None else out


def make_classification(spec: FieldSpec) -> Dataset:
    coords = sample_coordinates(spec)
    k = spec.n_informative
    if k:
        informative = gaussian_random_field(coords, spec.range, spec.sill, spec.nugget, spec.seed, size=k)
    else:
        informative = np.empty((spec.n, 0))
    eta = spec.intercept + informative.sum(axis=1)
    labels = (rng_for("labels", spec.seed).uniform(size=spec.n) < expit(eta)).astype(np.int8)
    if labels.min() == labels.max():
        raise DataError(f"generated labels are all {labels[0]}; adjust the intercept "
                        f"(currently {spec.intercept})")
    noise = rng_for("noise", spec.seed).standard_normal((spec.n, spec.n_noise))
    names = [f"field{j + 1}" for j in range(k)] + [f"noise{j + 1}" for j in range(spec.n_noise)]
    return Dataset(FeatureSchema.numeric(names), np.hstack([informative, noise]), coords, labels)
