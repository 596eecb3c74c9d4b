import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spatialcv import learners
from spatialcv.tuner import (CATEGORICAL, INT, LOG2, REAL, Param, _best_index, read_trials_csv,
                             sample_random, table1_space, tune, tune_path, write_trials_csv)

TUNED = ["WKNN", "RF", "BRT", "SVM"]


class TestSpaces:
    def test_bounds(self):
        assert [(p.name, p.low, p.high) for p in table1_space("BRT").params] == [
            ("n_tree", 100, 10000), ("shrinkage", 1e-4, 1.5), ("interaction_depth", 1, 40)]
        assert [(p.name, p.low, p.high) for p in table1_space("RF").params] == [
            ("mtry", 1, 11), ("num_trees", 10, 10000)]
        svm = table1_space("SVM").params
        assert (svm[0].low, svm[0].high, svm[1].low, svm[1].high) == (2.0 ** -12, 2.0 ** 15,
                                                                      2.0 ** -15, 2.0 ** 6)
        assert table1_space("WKNN").params[2].levels == learners.KERNELS

    def test_glm_has_no_space(self):
        with pytest.raises(ValueError):
            table1_space("GLM")

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            Param("a", REAL, 1.0, 1.0)
        with pytest.raises(ValueError):
            Param("a", LOG2, 0.0, 1.0)
        with pytest.raises(ValueError):
            Param("a", CATEGORICAL)
        with pytest.raises(ValueError):
            Param("a", "float", 0.0, 1.0)

    def test_real_lower_bound_is_open(self):
        p = Param("s", REAL, 0.0, 1.0)
        assert not p.contains(0.0) and p.contains(1.0)
        assert Param("i", INT, 1, 3).contains(3) and not Param("i", INT, 1, 3).contains(2.5)


class TestSampling:
    @pytest.mark.parametrize("kind", TUNED)
    def test_draws_stay_inside_the_space(self, kind):
        space = table1_space(kind)
        draws = sample_random(space, 500, seed=11)
        assert all(space.contains(s) for s in draws)

    def test_integer_and_categorical_draws_cover_the_range(self):
        draws = sample_random(table1_space("WKNN"), 3000, seed=1)
        assert {d["kernel"] for d in draws} == set(learners.KERNELS)
        ks = [d["k"] for d in draws]
        assert min(ks) == 10 and max(ks) == 400

    def test_log2_draws_are_uniform_in_the_exponent(self):
        c = np.log2([d["C"] for d in sample_random(table1_space("SVM"), 4000, seed=2)])
        assert np.mean(c) == pytest.approx(1.5, abs=0.4)  # midpoint of [-12, 15]

    @given(st.integers(0, 2 ** 40), st.integers(0, 30), st.integers(0, 30))
    @settings(max_examples=40, deadline=None)
    def test_smaller_budget_is_a_prefix(self, seed, a, b):
        lo, hi = sorted((a, b))
        space = table1_space("BRT")
        assert sample_random(space, lo, seed) == sample_random(space, hi, seed)[:lo]

    def test_negative_budget(self):
        with pytest.raises(ValueError):
            sample_random(table1_space("RF"), -1, 0)


class TestSelection:
    def test_earliest_trial_wins_ties(self):
        assert _best_index([0.7, 0.9, 0.9, 0.8]) == 1

    def test_nan_trials_are_skipped(self):
        assert _best_index([math.nan, 0.6, math.nan]) == 1
        assert _best_index([math.nan]) == -1


class TestTune:
    def test_budget_zero_returns_defaults(self, small_ds):
        r = tune("RF", small_ds, "random", 0, seed=1)
        assert r.best == learners.default_setting("RF", small_ds.features.shape[1]) and r.trials == ()
        assert math.isnan(r.best_score)

    def test_glm_cannot_be_tuned(self, small_ds):
        assert tune("GLM", small_ds, "spatial", 0).best == {}
        with pytest.raises(ValueError):
            tune("GLM", small_ds, "spatial", 5)

    @pytest.mark.parametrize("strategy", ["random", "spatial"])
    def test_path_agrees_with_separate_runs(self, small_ds, strategy):
        path = tune_path("WKNN", small_ds, strategy, [0, 3, 8], seed=21)
        for b in (0, 3, 8):
            single = tune("WKNN", small_ds, strategy, b, seed=21)
            assert path[b] == single

    def test_best_is_the_argmax_of_inner_scores(self, small_ds):
        r = tune("WKNN", small_ds, "spatial", 12, seed=3)
        assert len(r.trials) == 12
        means = [t.mean_auroc for t in r.trials]
        assert r.best == r.trials[int(np.nanargmax(means))].setting
        assert all(len(t.fold_aurocs) == 5 for t in r.trials)

    def test_inner_score_never_drops_as_budget_grows(self, small_ds):
        for seed in range(20):
            path = tune_path("WKNN", small_ds, "random", [1, 4, 16], k_inner=3, seed=seed)
            assert path[1].best_score <= path[4].best_score <= path[16].best_score

    def test_audit_sees_every_inner_split(self, small_ds):
        seen = []
        tune("WKNN", small_ds, "random", 2, k_inner=4, seed=0, audit=seen.append)
        assert len(seen) == 8
        assert all(set(seen[2 * f]).isdisjoint(seen[2 * f + 1]) for f in range(4))
        assert set(np.concatenate(seen[1::2])) == set(small_ds.row_ids)

    def test_trials_csv_round_trip(self, small_ds, tmp_path):
        r = tune("SVM", small_ds, "random", 4, seed=8)
        write_trials_csv(r, tmp_path / "trials.csv")
        back = read_trials_csv(tmp_path / "trials.csv")
        assert [t.setting for t in back] == [t.setting for t in r.trials]
        assert [t.mean_auroc for t in back] == [t.mean_auroc for t in r.trials]
        assert [t.fold_aurocs for t in back] == [t.fold_aurocs for t in r.trials]
