import dataclasses
import json

import numpy as np
import pytest

from spatialcv import experiment as ex
from spatialcv.dataset import Dataset, DataError, FeatureSchema
from spatialcv.experiment import (NS_NONE, NS_NS, S_NONE, S_NS, S_S, CvSetup, ExperimentConfig,
                                  ExperimentResult, LeakageError, LeakageGuard, Record)


def strip(records, setup=None):
    """Records without timing, optionally relabelled to one setup name."""
    return [dataclasses.replace(r, wall_ms=0, setup=setup or r.setup) for r in records]


def rec(setup, learner, budget, rep, fold, auroc, status=ex.OK):
    return Record(setup, learner, budget, rep, fold, auroc, "{}", 10, 5, status)


class TestSetup:
    def test_names_round_trip(self):
        for s in ex.PAPER_SETUPS:
            assert CvSetup.parse(s.name) == s
        assert S_NS.name == "spatial/non-spatial" and NS_NONE.name == "non-spatial/none"

    @pytest.mark.parametrize("text", ["spatial", "none/spatial", "spatial/blocked", "a/b/c"])
    def test_bad_setups(self, text):
        with pytest.raises(ValueError):
            CvSetup.parse(text)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ExperimentConfig(k_outer=1)
        with pytest.raises(ValueError):
            ExperimentConfig(budgets=())
        with pytest.raises(ValueError):
            ExperimentConfig(repetitions=0)
        cfg = ExperimentConfig(budgets=(50, 0, 50), setups=("spatial/spatial",))
        assert cfg.budgets == (0, 50) and cfg.setups == (S_S,)
        assert cfg.cell_budgets(S_S, "GLM") == (0,) and cfg.cell_budgets(S_NONE, "RF") == (0,)
        assert cfg.cell_budgets(S_S, "RF") == (0, 50)


class TestRuns:
    def test_glm_untuned_cell_has_one_record_per_fold(self, small_ds):
        cfg = ExperimentConfig(repetitions=2, learners=("GLM",), setups=(S_NONE,), master_seed=3)
        res = ex.run_experiment(small_ds, cfg)
        assert len(res.records) == 10
        assert all(r.status == ex.OK and 0 <= r.auroc <= 1 for r in res.records)
        assert [(r.repetition, r.fold) for r in res.records] == [(i, f) for i in range(2) for f in range(5)]
        assert sum(r.n_test for r in res.records) == 2 * small_ds.n

    def test_budget_zero_tuning_equals_no_tuning(self, small_ds):
        cfg = ExperimentConfig(repetitions=2, budgets=(0,), learners=("WKNN", "RF", "SVM"),
                               setups=(S_S, S_NONE, NS_NS, NS_NONE), master_seed=7)
        res = ex.run_experiment(small_ds, cfg)
        for tuned, plain in ((S_S, S_NONE), (NS_NS, NS_NONE)):
            for kind in cfg.learners:
                assert strip(res.cell(tuned, kind, 0), "x") == strip(res.cell(plain, kind, 0), "x")

    def test_all_budgets_share_one_search(self, small_ds):
        cfg = ExperimentConfig(repetitions=1, budgets=(0, 2, 5), learners=("WKNN",), setups=(S_S,),
                               master_seed=1)
        joint = ex.run_experiment(small_ds, cfg)
        for b in cfg.budgets:
            alone = ex.run_nested_cv(small_ds, "WKNN", S_S, b, cfg)
            assert strip(alone.records) == strip(joint.cell(S_S, "WKNN", b))

    def test_parallel_run_matches_serial(self, small_ds):
        cfg = ExperimentConfig(repetitions=1, budgets=(0, 3), learners=("GLM", "WKNN"),
                               setups=(S_S, NS_NONE), master_seed=5)
        a = ex.run_experiment(small_ds, cfg, jobs=1)
        b = ex.run_experiment(small_ds, cfg, jobs=2)
        assert strip(a.records) == strip(b.records)
        assert (a.leakage_checks, a.leakage_violations) == (b.leakage_checks, b.leakage_violations)

    def test_seed_override(self, small_ds):
        cfg = ExperimentConfig(repetitions=1, learners=("GLM",), setups=(S_NONE,))
        a = ex.run_nested_cv(small_ds, "GLM", S_NONE, 0, cfg, seed=99)
        b = ex.run_nested_cv(small_ds, "GLM", S_NONE, 0, dataclasses.replace(cfg, master_seed=99))
        assert strip(a.records) == strip(b.records)
        with pytest.raises(ValueError):
            ex.run_nested_cv(small_ds, "GLM", S_NONE, 5, cfg)

    def test_single_class_test_fold_is_missing(self):
        # a line of points where only the two ends carry positives: middle clusters are all negative
        n = 30
        coords = np.column_stack([np.arange(n, dtype=float), np.zeros(n)])
        y = ((np.arange(n) < 6) | (np.arange(n) >= 24)).astype(int)
        X = np.random.default_rng(0).normal(size=(n, 1))
        ds = Dataset(FeatureSchema.numeric(["a"]), X, coords, y)
        cfg = ExperimentConfig(repetitions=1, learners=("GLM",), setups=(S_NONE,))
        res = ex.run_experiment(ds, cfg)
        missing = [r for r in res.records if r.status == ex.MISSING]
        assert missing and all(r.auroc is None and r.n_pos_test in (0, r.n_test) for r in missing)
        summ = ex.summary(res)
        assert summ["missing_folds"]["spatial/none|GLM|0"] == len(missing)


class TestLeakage:
    def test_guard_counts_clean_checks(self):
        g = LeakageGuard(np.array([3, 7]))
        g(np.array([1, 2, 4]))
        assert (g.checks, g.violations) == (1, 0)

    def test_guard_rejects_outer_test_rows(self):
        g = LeakageGuard(np.array([3, 7]))
        with pytest.raises(LeakageError):
            g(np.array([1, 7]))
        assert g.violations == 1

    def test_tuned_run_is_audited(self, small_ds):
        cfg = ExperimentConfig(repetitions=2, budgets=(2,), learners=("WKNN",), setups=(S_S, NS_NS))
        res = ex.run_experiment(small_ds, cfg)
        assert res.leakage_checks == 2 * 2 * 5 * 5 * 2 and res.leakage_violations == 0

    def test_leaky_tuner_is_caught(self, small_ds, monkeypatch):
        real = ex.tune_path

        def leaky(kind, train, strategy, budgets, k_inner, seed, audit=None):
            audit(np.arange(small_ds.n))  # pretends to have seen every row
            return real(kind, train, strategy, budgets, k_inner, seed, audit)

        monkeypatch.setattr(ex, "tune_path", leaky)
        cfg = ExperimentConfig(repetitions=1, budgets=(2,), learners=("WKNN",), setups=(S_S,))
        with pytest.raises(LeakageError):
            ex.run_experiment(small_ds, cfg)


class TestSummaries:
    def make(self, ns_values, s_values, budgets=(0,)):
        recs = []
        for b in budgets:
            for setup, values in ((NS_NS.name, ns_values), (S_S.name, s_values)):
                for rep, per_rep in enumerate(values):
                    for fold, v in enumerate(per_rep):
                        recs.append(rec(setup, "RF", b, rep, fold, v + b / 1000))
        return ExperimentResult(recs)

    def test_identical_setups_show_no_optimism(self):
        vals = [[0.7, 0.8], [0.6, 0.9]]
        o = ex.optimism(self.make(vals, vals), "RF", 0)
        assert o.difference == 0.0 and o.relative_to_nonspatial == 0.0

    def test_optimism_values(self):
        o = ex.optimism(self.make([[0.8, 0.8]], [[0.6, 0.6]]), "RF", 0)
        assert o.difference == pytest.approx(0.2)
        assert o.relative_to_nonspatial == pytest.approx(25.0)
        assert o.relative_to_spatial == pytest.approx(100 / 3)

    def test_published_random_forest_gap(self):
        # RF overall means 0.912 (non-spatial) and 0.699 (spatial): a gap of 0.213, which is
        # about 23% of the non-spatial estimate and 30% of the spatial one
        o = ex.optimism(self.make([[0.912]], [[0.699]]), "RF", 0)
        assert o.difference == pytest.approx(0.213, abs=1e-12)
        assert round(o.relative_to_nonspatial, 1) == 23.4
        assert round(o.relative_to_spatial) == 30

    def test_optimism_needs_both_setups(self):
        res = self.make([[0.8]], [[0.6]])
        with pytest.raises(KeyError):
            ex.optimism(res, "RF", 0, nonspatial=NS_NONE)

    def test_tuning_curve(self):
        res = self.make([[0.7, 0.8], [0.6, 0.9], [0.5, 0.5]], [[0.6]] * 3, budgets=(0, 10, 50))
        curve = ex.tuning_curve(res, "RF", NS_NS)
        assert [c.budget for c in curve] == [0, 10, 50]
        assert curve[0].mean_auroc == pytest.approx(np.mean([0.75, 0.75, 0.5]))
        assert curve[2].mean_auroc - curve[0].mean_auroc == pytest.approx(0.05)
        assert curve[0].iqr == pytest.approx(0.125)

    def test_tuning_curve_needs_two_budgets(self):
        with pytest.raises(ValueError, match="insufficient budgets"):
            ex.tuning_curve(self.make([[0.7]], [[0.6]]), "RF", S_S)

    def test_boxplot_rows_are_ordered(self):
        rows = ex.boxplot_table(self.make([[0.7, 0.8], [0.6, 0.9], [0.5, 0.5]], [[0.6]] * 3))
        assert len(rows) == 2
        for r in rows:
            assert r.minimum <= r.q1 <= r.median <= r.q3 <= r.maximum

    def test_empty_cells(self):
        res = ExperimentResult([rec("spatial/none", "SVM", 0, 0, f, None, ex.FAILED) for f in range(5)]
                               + [rec("spatial/none", "GLM", 0, 0, 0, 0.7)])
        assert ex.empty_cells(res) == [("spatial/none", "SVM", 0)]
        s = ex.summary(res)
        assert s["overall_mean_auroc"]["spatial/none"]["SVM"]["0"] is None
        assert s["failed_folds"]["spatial/none|SVM|0"] == 5


class TestFiles:
    def test_round_trip(self, small_ds, tmp_path):
        cfg = ExperimentConfig(repetitions=1, budgets=(0, 2), learners=("WKNN",), setups=(S_S,))
        res = ex.run_experiment(small_ds, cfg)
        ex.write_results_csv(res, tmp_path / "r.csv")
        back = ex.read_results_csv(tmp_path / "r.csv")
        assert back.records == res.records
        assert ex.canonical_rows(tmp_path / "r.csv")[0][0] == "spatial/spatial"
        ex.write_summary_json(res, tmp_path / "s.json")
        assert json.loads((tmp_path / "s.json").read_text())["leakage"]["violations"] == 0
        assert ex.write_curve_csv(res, tmp_path / "c.csv") == 2

    @pytest.mark.parametrize("bad, lineno", [
        ("spatial/none,GLM,0,0,0,1.5,{},10,5,ok,3", 2),
        ("spatial/none,GLM,0,0,0,0.5,{},10,5,done,3", 2),
        ("spatial/none,GLM,0,0,0,0.5,{},10,5,ok", 2),
        ("spatial/none,GLM,zero,0,0,0.5,{},10,5,ok,3", 2),
    ])
    def test_malformed_rows_name_the_line(self, tmp_path, bad, lineno):
        p = tmp_path / "r.csv"
        p.write_text(",".join(ex.RESULT_COLUMNS) + "\n" + bad + "\n")
        with pytest.raises(DataError, match=f"r.csv:{lineno}:"):
            ex.read_results_csv(p)

    def test_wrong_header(self, tmp_path):
        p = tmp_path / "r.csv"
        p.write_text("setup,learner\n")
        with pytest.raises(DataError, match=":1:"):
            ex.read_results_csv(p)
