"""Nested cross-validation over (setup, learner, budget) cells and its summaries."""

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import learners
from ._seeding import derive_seed
from .dataset import Dataset, DataError
from .metrics import aggregate, auroc
from .partition import RANDOM, SPATIAL, FoldAssignment, PartitionSpec, fold_split, make_folds, strategy_name
from .tuner import setting_json, tune_path

log = logging.getLogger(__name__)

OK = "ok"
MISSING = "missing"
FAILED = "failed"

RESULT_COLUMNS = ["setup", "learner", "budget", "repetition", "fold", "auroc", "chosen_params_json",
                  "n_test", "n_pos_test", "status", "wall_ms"]

_LABEL = {RANDOM: "non-spatial", SPATIAL: "spatial", None: "none"}


def _strategy_or_none(text: str) -> Optional[str]:
    t = text.strip().lower()
    if t in ("none", "no", "default", "defaults"):
        return None
    return strategy_name(t)


@dataclass(frozen=True)
class CvSetup:
    """Outer partitioning strategy plus inner tuning strategy (``None`` = defaults)."""

    outer: str
    tuning: Optional[str]

    def __post_init__(self):
        object.__setattr__(self, "outer", strategy_name(self.outer))
        if self.tuning is not None:
            object.__setattr__(self, "tuning", strategy_name(self.tuning))

    @property
    def name(self) -> str:
        return f"{_LABEL[self.outer]}/{_LABEL[self.tuning]}"

    @classmethod
    def parse(cls, text: str) -> "CvSetup":
        parts = text.split("/")
        if len(parts) != 2:
            raise ValueError(f"setup {text!r} is not of the form outer/tuning")
        outer = _strategy_or_none(parts[0])
        if outer is None:
            raise ValueError(f"setup {text!r}: the outer strategy cannot be 'none'")
        return cls(outer, _strategy_or_none(parts[1]))

    def __str__(self):
        return self.name


NS_NS = CvSetup(RANDOM, RANDOM)
NS_NONE = CvSetup(RANDOM, None)
S_NS = CvSetup(SPATIAL, RANDOM)
S_S = CvSetup(SPATIAL, SPATIAL)
S_NONE = CvSetup(SPATIAL, None)
PAPER_SETUPS = (NS_NS, NS_NONE, S_NS, S_S, S_NONE)


@dataclass(frozen=True)
class ExperimentConfig:
    k_outer: int = 5
    repetitions: int = 100
    budgets: Tuple[int, ...] = (0,)
    learners: Tuple[str, ...] = learners.KINDS
    setups: Tuple[CvSetup, ...] = (NS_NS, S_S)
    master_seed: int = 0
    k_inner: int = 5

    def __post_init__(self):
        object.__setattr__(self, "budgets", tuple(sorted({int(b) for b in self.budgets})))
        object.__setattr__(self, "learners", tuple(learners.learner_kind(k) for k in self.learners))
        object.__setattr__(self, "setups", tuple(s if isinstance(s, CvSetup) else CvSetup.parse(s)
                                                 for s in self.setups))
        if self.k_outer < 2 or self.k_inner < 2:
            raise ValueError("k_outer and k_inner must be at least 2")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if not self.budgets or self.budgets[0] < 0:
            raise ValueError("budgets must be a non-empty list of non-negative counts")
        if not self.learners or not self.setups:
            raise ValueError("need at least one learner and one setup")

    def cell_budgets(self, setup: CvSetup, kind: str) -> Tuple[int, ...]:
        """Budgets run for one (setup, learner); untuned cells only have budget 0."""
        if setup.tuning is None or kind == learners.GLM:
            return (0,)
        return self.budgets


@dataclass(frozen=True)
class Record:
    setup: str
    learner: str
    budget: int
    repetition: int
    fold: int
    auroc: Optional[float]
    chosen_params_json: str
    n_test: int
    n_pos_test: int
    status: str
    wall_ms: int = 0

    def sort_key(self):
        return (self.setup, self.learner, self.budget, self.repetition, self.fold)

    def row(self) -> List[str]:
        a = "" if self.auroc is None else repr(float(self.auroc))
        return [self.setup, self.learner, str(self.budget), str(self.repetition), str(self.fold), a,
                self.chosen_params_json, str(self.n_test), str(self.n_pos_test), self.status,
                str(self.wall_ms)]


@dataclass
class ExperimentResult:
    records: List[Record]
    leakage_checks: int = 0
    leakage_violations: int = 0
    config: Optional[ExperimentConfig] = None

    def cell(self, setup, learner, budget) -> List[Record]:
        setup = setup.name if isinstance(setup, CvSetup) else setup
        return [r for r in self.records if r.setup == setup and r.learner == learner and r.budget == budget]

    def cells(self) -> List[Tuple[str, str, int]]:
        return sorted({(r.setup, r.learner, r.budget) for r in self.records})

    def overall(self, setup, learner, budget) -> float:
        rows = self.cell(setup, learner, budget)
        if not rows:
            raise KeyError(f"no records for {setup}, {learner}, budget {budget}")
        return aggregate((r.repetition, r.auroc) for r in rows).overall


class LeakageError(AssertionError):
    pass


@dataclass
class LeakageGuard:
    """Counts the inner splits handed to tuning and rejects any outer-test row."""

    forbidden: np.ndarray
    checks: int = 0
    violations: int = 0

    def __call__(self, row_ids):
        self.checks += 1
        bad = np.intersect1d(np.asarray(row_ids), self.forbidden)
        if bad.size:
            self.violations += 1
            raise LeakageError(f"tuning touched {bad.size} outer-test rows (e.g. {bad[:5].tolist()})")


# -- one unit of work ---------------------------------------------------------

def unit_seeds(master_seed: int, setup: CvSetup, kind: str, rep: int, fold: int) -> Tuple[int, int]:
    """Seeds for tuning and for the final fit of one outer fold.

    Neither depends on the budget, so all budgets of a cell are answered by
    one search. The final-fit seed ignores the tuning strategy, which makes
    a budget-0 tuned setup identical to its untuned counterpart.
    """
    tune_seed = derive_seed(master_seed, "tune", setup.outer, setup.tuning, kind, rep, fold)
    final_seed = derive_seed(master_seed, "final", setup.outer, kind, rep, fold)
    return tune_seed, final_seed


def outer_partition(ds: Dataset, strategy: str, cfg: ExperimentConfig) -> FoldAssignment:
    """Outer folds shared by every learner and setup using ``strategy``."""
    spec = PartitionSpec(cfg.k_outer, cfg.repetitions, strategy,
                         derive_seed(cfg.master_seed, "outer", strategy))
    return make_folds(ds.coords, spec)


def run_unit(ds: Dataset, assign: FoldAssignment, cfg: ExperimentConfig, setup: CvSetup, kind: str,
             rep: int, fold: int, budgets: Sequence[int]):
    """Tune (if needed), refit and score one outer fold for every budget.

    Returns ``(records, guard)``.
    """
    t_start = time.perf_counter()
    tr, te = fold_split(assign, rep, fold)
    train, test = ds.subset(tr), ds.subset(te)
    n_test, n_pos = int(test.n), int(test.labels.sum())
    guard = LeakageGuard(np.sort(test.row_ids))
    tune_seed, final_seed = unit_seeds(cfg.master_seed, setup, kind, rep, fold)
    records = []

    def record(budget, value, chosen, status, started):
        ms = int(round((time.perf_counter() - started) * 1000))
        records.append(Record(setup.name, kind, int(budget), rep, fold, value, chosen, n_test, n_pos,
                              status, ms))

    try:
        if setup.tuning is None or max(budgets) == 0:
            p = learners.base.prepare(train, need_features=False)[0].shape[1]
            chosen = {b: learners.default_setting(kind, p) for b in budgets}
        else:
            path = tune_path(kind, train, setup.tuning, budgets, cfg.k_inner, tune_seed, audit=guard)
            chosen = {b: path[b].best for b in budgets}
    except LeakageError:
        raise
    except (DataError, ValueError, np.linalg.LinAlgError) as exc:
        log.warning("%s %s rep %d fold %d: tuning failed: %s", setup.name, kind, rep, fold, exc)
        for b in budgets:
            record(b, None, "{}", FAILED, t_start)
        return records, guard
    t_tuned = time.perf_counter()
    cache = {}
    for b in budgets:
        key = setting_json(chosen[b])
        started = time.perf_counter()
        if key not in cache:
            try:
                model = learners.fit(kind, train, chosen[b], final_seed)
                score = auroc(model.predict(test), test.labels)
                cache[key] = (score.auroc, OK if score.auroc is not None else MISSING)
            except (DataError, ValueError, np.linalg.LinAlgError, FloatingPointError) as exc:
                log.warning("%s %s rep %d fold %d: final fit failed: %s", setup.name, kind, rep, fold, exc)
                cache[key] = (None, FAILED)
        value, status = cache[key]
        ms = int(round((t_tuned - t_start + time.perf_counter() - started) * 1000))
        records.append(Record(setup.name, kind, int(b), rep, fold, value, key, n_test, n_pos, status, ms))
    return records, guard


_WORKER = {}


def _init_worker(ds, partitions, cfg):
    _WORKER.update(ds=ds, partitions=partitions, cfg=cfg)


def _run_worker(unit):
    setup, kind, rep, fold, budgets = unit
    w = _WORKER
    records, guard = run_unit(w["ds"], w["partitions"][setup.outer], w["cfg"], setup, kind, rep, fold,
                              budgets)
    return records, guard.checks, guard.violations


def _units(cfg: ExperimentConfig):
    out = []
    for setup in cfg.setups:
        for kind in cfg.learners:
            budgets = cfg.cell_budgets(setup, kind)
            for rep in range(cfg.repetitions):
                for fold in range(cfg.k_outer):
                    out.append((setup, kind, rep, fold, budgets))
    return out


def run_experiment(ds: Dataset, cfg: ExperimentConfig, jobs: int = 1, progress=None) -> ExperimentResult:
    """Run every cell of ``cfg``; results do not depend on ``jobs``.

    Each (setup, learner, repetition, fold) is an independent unit whose
    seeds derive from its coordinates, and records are sorted before return.
    """
    ds.check_both_classes()
    partitions = {s: outer_partition(ds, s, cfg) for s in sorted({st.outer for st in cfg.setups})}
    units = _units(cfg)
    results = []
    if jobs <= 1:
        _init_worker(ds, partitions, cfg)
        for i, u in enumerate(units):
            results.append(_run_worker(u))
            if progress:
                progress(i + 1, len(units))
    else:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                                 initargs=(ds, partitions, cfg)) as pool:
            for i, res in enumerate(pool.map(_run_worker, units)):
                results.append(res)
                if progress:
                    progress(i + 1, len(units))
    records = sorted((r for recs, _, _ in results for r in recs), key=Record.sort_key)
    return ExperimentResult(records, sum(c for _, c, _ in results), sum(v for _, _, v in results), cfg)


def run_nested_cv(ds: Dataset, kind: str, setup, budget: int, cfg: ExperimentConfig,
                  seed: Optional[int] = None) -> ExperimentResult:
    """One (learner, setup, budget) cell over all repetitions and outer folds.

    ``seed`` replaces ``cfg.master_seed`` when given.
    """
    if seed is not None:
        cfg = replace(cfg, master_seed=seed)
    setup = setup if isinstance(setup, CvSetup) else CvSetup.parse(setup)
    if setup.tuning is None and budget != 0:
        raise ValueError("an untuned setup only runs at budget 0")
    kind = learners.learner_kind(kind)
    assign = outer_partition(ds, setup.outer, cfg)
    records, checks, violations = [], 0, 0
    for rep in range(cfg.repetitions):
        for fold in range(cfg.k_outer):
            recs, guard = run_unit(ds, assign, cfg, setup, kind, rep, fold, [budget])
            records.extend(recs)
            checks += guard.checks
            violations += guard.violations
    return ExperimentResult(sorted(records, key=Record.sort_key), checks, violations, cfg)


# -- summaries ----------------------------------------------------------------

@dataclass(frozen=True)
class Optimism:
    learner: str
    budget: int
    nonspatial: float
    spatial: float
    difference: float
    relative_to_nonspatial: float
    relative_to_spatial: float


def optimism(result: ExperimentResult, learner: str, budget: int, nonspatial=NS_NS, spatial=S_S) -> Optimism:
    """How much the non-spatial estimate exceeds the spatial one.

    Relative differences are given against both baselines, in percent.
    """
    ns = nonspatial.name if isinstance(nonspatial, CvSetup) else nonspatial
    sp = spatial.name if isinstance(spatial, CvSetup) else spatial
    try:
        a = result.overall(ns, learner, budget)
        b = result.overall(sp, learner, budget)
    except KeyError as exc:
        raise KeyError(f"optimism needs both setups: {exc}") from None
    diff = a - b
    rel_ns = diff / a * 100.0 if a else math.nan
    rel_s = diff / b * 100.0 if b else math.nan
    return Optimism(learner, budget, a, b, diff, rel_ns, rel_s)


def rep_means(rows: Iterable[Record]) -> np.ndarray:
    agg = aggregate((r.repetition, r.auroc) for r in rows)
    return np.array([agg.rep_means[k] for k in sorted(agg.rep_means)])


@dataclass(frozen=True)
class CurvePoint:
    budget: int
    mean_auroc: float
    iqr: float


def tuning_curve(result: ExperimentResult, learner: str, setup) -> List[CurvePoint]:
    setup = setup.name if isinstance(setup, CvSetup) else setup
    budgets = sorted({r.budget for r in result.records if r.setup == setup and r.learner == learner})
    if len(budgets) < 2:
        raise ValueError(f"insufficient budgets for a tuning curve of {learner} under {setup} "
                         f"(found {budgets})")
    out = []
    for b in budgets:
        means = rep_means(result.cell(setup, learner, b))
        q1, q3 = np.quantile(means, [0.25, 0.75])
        out.append(CurvePoint(b, float(means.mean()), float(q3 - q1)))
    return out


@dataclass(frozen=True)
class BoxRow:
    setup: str
    learner: str
    budget: int
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float


def boxplot_table(result: ExperimentResult) -> List[BoxRow]:
    """Five-number summaries of repetition means per cell."""
    out = []
    for setup, learner, budget in result.cells():
        m = rep_means(result.cell(setup, learner, budget))
        if m.size == 0:
            continue
        q = np.quantile(m, [0.0, 0.25, 0.5, 0.75, 1.0])
        out.append(BoxRow(setup, learner, budget, *map(float, q)))
    return out


def summary(result: ExperimentResult) -> Dict[str, object]:
    """Table-2-style matrix of overall means plus bookkeeping counts."""
    matrix: Dict[str, Dict[str, Dict[str, float]]] = {}
    missing, failed = {}, {}
    for setup, learner, budget in result.cells():
        rows = result.cell(setup, learner, budget)
        agg = aggregate((r.repetition, r.auroc) for r in rows) if any(r.auroc is not None for r in rows) else None
        key = f"{setup}|{learner}|{budget}"
        matrix.setdefault(setup, {}).setdefault(learner, {})[str(budget)] = (
            None if agg is None else agg.overall)
        missing[key] = sum(r.status == MISSING for r in rows)
        failed[key] = sum(r.status == FAILED for r in rows)
    return {"overall_mean_auroc": matrix, "missing_folds": missing, "failed_folds": failed,
            "leakage": {"checks": result.leakage_checks, "violations": result.leakage_violations}}


def empty_cells(result: ExperimentResult) -> List[Tuple[str, str, int]]:
    """Cells without a single successfully scored fold."""
    return [c for c in result.cells() if not any(r.status == OK for r in result.cell(*c))]


# -- files --------------------------------------------------------------------

def write_results_csv(result: ExperimentResult, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in result.records:
            w.writerow(r.row())


def read_results_csv(path) -> ExperimentResult:
    records = []
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RESULT_COLUMNS:
            raise DataError(f"{path}:1: expected header {','.join(RESULT_COLUMNS)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                if len(row) != len(RESULT_COLUMNS):
                    raise ValueError(f"expected {len(RESULT_COLUMNS)} fields, got {len(row)}")
                a = float(row[5]) if row[5] != "" else None
                if a is not None and not 0.0 <= a <= 1.0:
                    raise ValueError(f"auroc {a} outside [0, 1]")
                json.loads(row[6])
                if row[9] not in (OK, MISSING, FAILED):
                    raise ValueError(f"unknown status {row[9]!r}")
                records.append(Record(row[0], row[1], int(row[2]), int(row[3]), int(row[4]), a, row[6],
                                      int(row[7]), int(row[8]), row[9], int(row[10])))
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    return ExperimentResult(records)


def canonical_rows(path, drop=("wall_ms",)) -> List[Tuple[str, ...]]:
    """Result rows without timing columns, sorted; used to compare runs."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    keep = [i for i, c in enumerate(rows[0]) if c not in drop]
    return sorted(tuple(r[i] for i in keep) for r in rows[1:])


def write_summary_json(result: ExperimentResult, path) -> None:
    Path(path).write_text(json.dumps(summary(result), indent=2, sort_keys=True) + "\n")


def write_curve_csv(result: ExperimentResult, path) -> int:
    """Tuning curves for every (setup, learner) with two or more budgets; returns rows written."""
    n = 0
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["setup", "learner", "budget", "mean_auroc", "iqr"])
        for setup, learner in sorted({(s, l) for s, l, _ in result.cells()}):
            try:
                curve = tuning_curve(result, learner, setup)
            except ValueError:
                continue
            for pt in curve:
                w.writerow([setup, learner, pt.budget, repr(pt.mean_auroc), repr(pt.iqr)])
                n += 1
    return n
