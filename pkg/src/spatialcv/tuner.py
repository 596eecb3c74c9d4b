"""Random-search tuning scored by inner k-fold cross-validation."""

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import learners
from ._seeding import derive_seed, rng_for
from .dataset import Dataset, DataError
from .learners.base import prepare
from .metrics import auroc
from .partition import PartitionSpec, fold_split, make_folds, strategy_name

INT = "int"
REAL = "real"
LOG2 = "log2"
CATEGORICAL = "categorical"


@dataclass(frozen=True)
class Param:
    name: str
    type: str
    low: float = None
    high: float = None
    levels: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.type == CATEGORICAL:
            if not self.levels:
                raise ValueError(f"{self.name}: categorical parameter needs levels")
            return
        if self.type not in (INT, REAL, LOG2):
            raise ValueError(f"{self.name}: unknown parameter type {self.type!r}")
        if not (math.isfinite(self.low) and math.isfinite(self.high) and self.low < self.high):
            raise ValueError(f"{self.name}: bounds must be finite and ordered")
        if self.type == LOG2 and self.low <= 0:
            raise ValueError(f"{self.name}: log2 bounds must be positive")

    def sample(self, rng):
        if self.type == INT:
            return int(rng.integers(int(self.low), int(self.high) + 1))
        if self.type == REAL:
            # 1 - U lies in (0, 1], which keeps the lower bound open
            return float(self.low + (self.high - self.low) * (1.0 - rng.random()))
        if self.type == LOG2:
            return float(2.0 ** rng.uniform(math.log2(self.low), math.log2(self.high)))
        return self.levels[int(rng.integers(len(self.levels)))]

    def contains(self, value) -> bool:
        if self.type == CATEGORICAL:
            return value in self.levels
        if self.type == INT and int(value) != value:
            return False
        if self.type == REAL:
            return self.low < value <= self.high
        return self.low <= value <= self.high


@dataclass(frozen=True)
class ParamSpace:
    kind: str
    params: Tuple[Param, ...]

    @property
    def names(self):
        return [p.name for p in self.params]

    def contains(self, setting) -> bool:
        return set(setting) == set(self.names) and all(p.contains(setting[p.name]) for p in self.params)


def table1_space(kind: str) -> ParamSpace:
    kind = learners.learner_kind(kind)
    if kind == learners.GLM:
        raise ValueError("GLM has no hyperparameters to tune")
    if kind == learners.BRT:
        params = (Param("n_tree", INT, 100, 10000), Param("shrinkage", REAL, 1e-4, 1.5),
                  Param("interaction_depth", INT, 1, 40))
    elif kind == learners.RF:
        params = (Param("mtry", INT, 1, 11), Param("num_trees", INT, 10, 10000))
    elif kind == learners.SVM:
        params = (Param("C", LOG2, 2.0 ** -12, 2.0 ** 15), Param("sigma", LOG2, 2.0 ** -15, 2.0 ** 6))
    else:
        params = (Param("k", INT, 10, 400), Param("distance", INT, 1, 100),
                  Param("kernel", CATEGORICAL, levels=learners.KERNELS))
    return ParamSpace(kind, params)


def sample_random(space: ParamSpace, budget: int, seed: int) -> List[Dict[str, object]]:
    """``budget`` independent draws; draw ``i`` depends only on ``(seed, i)``.

    Lists for a smaller budget are therefore prefixes of lists for a larger one.
    """
    if budget < 0:
        raise ValueError("budget must be non-negative")
    out = []
    for i in range(budget):
        rng = rng_for("trial", seed, i)
        out.append({p.name: p.sample(rng) for p in space.params})
    return out


def setting_json(setting) -> str:
    return json.dumps(setting, sort_keys=True)


@dataclass(frozen=True)
class Trial:
    setting: Dict[str, object]
    mean_auroc: float
    fold_aurocs: Tuple[Optional[float], ...]


@dataclass(frozen=True)
class TuneResult:
    best: Dict[str, object]
    trials: Tuple[Trial, ...]
    budget: int

    @property
    def best_score(self) -> float:
        return max((t.mean_auroc for t in self.trials if not math.isnan(t.mean_auroc)),
                   default=math.nan)


def _score_fold(kind, train, test, settings, seed):
    """Per-setting AUROC on one inner split; ``None`` for missing or failed fits."""
    n = len(settings)
    if test.labels.min() == test.labels.max():
        return [None] * n
    try:
        preds = learners.score_settings(kind, train, test, settings, seed)
    except (DataError, ValueError, np.linalg.LinAlgError, FloatingPointError):
        preds = []
        for s in settings:
            try:
                preds.append(learners.score_settings(kind, train, test, [s], seed)[0])
            except (DataError, ValueError, np.linalg.LinAlgError, FloatingPointError):
                preds.append(None)
    out = []
    for p in preds:
        if p is None or not np.isfinite(p).all():
            out.append(None)
        else:
            out.append(auroc(p, test.labels).auroc)
    return out


def _best_index(means: Sequence[float]) -> int:
    best, idx = -math.inf, -1
    for i, m in enumerate(means):
        if not math.isnan(m) and m > best:  # strict: the earliest trial wins ties
            best, idx = m, i
    return idx


def tune_path(kind, train: Dataset, inner_strategy: str, budgets: Sequence[int], k_inner: int = 5,
              seed: int = 0, audit: Optional[Callable[[np.ndarray], None]] = None
              ) -> Dict[int, TuneResult]:
    """Tune once with the largest budget and read off every smaller one.

    Because trial ``i`` and its inner-fold fits depend only on ``seed`` and
    ``i``, the result for budget ``b`` equals ``tune(..., budget=b, ...)``.
    ``audit`` receives the original row ids of every inner split touched.
    """
    kind = learners.learner_kind(kind)
    budgets = sorted({int(b) for b in budgets})
    if budgets and budgets[0] < 0:
        raise ValueError("budget must be non-negative")
    train.check_both_classes()
    p = prepare(train, need_features=False)[0].shape[1]
    defaults = learners.default_setting(kind, p)
    top = budgets[-1] if budgets else 0
    out = {}
    if top == 0:
        return {b: TuneResult(defaults, (), 0) for b in budgets}
    space = table1_space(kind)
    settings = sample_random(space, top, derive_seed(seed, "sample"))
    folds = make_folds(train.coords, PartitionSpec(k_inner, 1, strategy_name(inner_strategy),
                                                   derive_seed(seed, "inner")))
    per_fold = []
    for f in range(k_inner):
        tr, te = fold_split(folds, 0, f)
        sub_tr, sub_te = train.subset(tr), train.subset(te)
        if audit is not None:
            audit(sub_tr.row_ids)
            audit(sub_te.row_ids)
        if sub_tr.labels.min() == sub_tr.labels.max():
            per_fold.append([None] * top)
            continue
        per_fold.append(_score_fold(kind, sub_tr, sub_te, settings, derive_seed(seed, "fit", f)))
    trials = []
    for i, s in enumerate(settings):
        scores = tuple(per_fold[f][i] for f in range(k_inner))
        valid = [v for v in scores if v is not None]
        trials.append(Trial(s, float(np.mean(valid)) if valid else math.nan, scores))
    means = [t.mean_auroc for t in trials]
    for b in budgets:
        if b == 0:
            out[b] = TuneResult(defaults, (), 0)
            continue
        idx = _best_index(means[:b])
        if idx < 0:
            raise DataError(f"no {kind} trial could be scored on any inner fold; "
                            "use fewer or larger inner folds")
        out[b] = TuneResult(trials[idx].setting, tuple(trials[:b]), b)
    return out


def tune(kind, train: Dataset, inner_strategy: str, budget: int, k_inner: int = 5, seed: int = 0,
         audit=None) -> TuneResult:
    """Random search with ``budget`` trials, each scored by mean inner-fold AUROC.

    Budget 0 returns the learner's defaults without trials.
    """
    return tune_path(kind, train, inner_strategy, [budget], k_inner, seed, audit)[int(budget)]


def write_trials_csv(result: TuneResult, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "param_json", "mean_auroc", "fold_aurocs"])
        for i, t in enumerate(result.trials):
            w.writerow([i, setting_json(t.setting), repr(t.mean_auroc), json.dumps(list(t.fold_aurocs))])


def read_trials_csv(path) -> List[Trial]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [Trial(json.loads(r["param_json"]), float(r["mean_auroc"]), tuple(json.loads(r["fold_aurocs"])))
            for r in rows]


__all__ = ["Param", "ParamSpace", "Trial", "TuneResult", "table1_space", "sample_random", "tune",
           "tune_path", "write_trials_csv", "read_trials_csv", "setting_json"]
