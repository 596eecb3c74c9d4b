"""AUROC and repetition-level aggregation."""

import math
import warnings
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
from scipy.stats import rankdata


@dataclass(frozen=True)
class FoldScore:
    auroc: Optional[float]
    n_pos: int
    n_neg: int

    @property
    def missing(self) -> bool:
        return self.auroc is None


def auroc(scores, labels) -> FoldScore:
    """Mann-Whitney estimate of the area under the ROC curve.

    Ties between a positive and a negative count one half. Uses midranks, so
    the cost is one sort. Returns a score with ``auroc=None`` when only one
    class is present.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise ValueError(f"scores and labels differ in length ({s.size} vs {y.size})")
    if s.size < 1:
        raise ValueError("need at least one prediction")
    if np.isnan(s).any():
        raise ValueError("scores contain NaN")
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = int(s.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        return FoldScore(None, n_pos, n_neg)
    ranks = rankdata(s, method="average")
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return FoldScore(float(u / (n_pos * n_neg)), n_pos, n_neg)


def auroc_value(scores, labels) -> float:
    """Like :func:`auroc` but returns NaN for single-class input."""
    fs = auroc(scores, labels)
    return math.nan if fs.auroc is None else fs.auroc


@dataclass(frozen=True)
class Aggregate:
    rep_means: Dict[int, float]
    overall: float
    n_missing_folds: int
    excluded_reps: Tuple[int, ...]


def aggregate(fold_scores: Iterable[Tuple[int, Optional[float]]]) -> Aggregate:
    """Mean over folds within each repetition, then mean over repetitions.

    ``fold_scores`` yields ``(repetition, auroc_or_None)`` pairs.
    """
    by_rep = defaultdict(list)
    n_missing = 0
    n_total = 0
    for rep, value in fold_scores:
        n_total += 1
        if value is None or (isinstance(value, float) and math.isnan(value)):
            n_missing += 1
            by_rep.setdefault(rep, [])
            continue
        by_rep[rep].append(float(value))
    if n_total == 0:
        raise ValueError("no fold scores to aggregate")
    rep_means, excluded = {}, []
    for rep in sorted(by_rep):
        values = by_rep[rep]
        if values:
            rep_means[rep] = float(np.mean(values))
        else:
            excluded.append(rep)
    if excluded:
        warnings.warn(f"repetitions {excluded} have no scorable fold and are excluded", stacklevel=2)
    overall = float(np.mean(list(rep_means.values()))) if rep_means else math.nan
    return Aggregate(rep_means, overall, n_missing, tuple(excluded))
