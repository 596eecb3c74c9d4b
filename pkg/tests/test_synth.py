import numpy as np
import pytest

from spatialcv.dataset import DataError
from spatialcv.synth import (FieldSpec, exponential_covariance, gaussian_random_field, make_classification,
                             sample_coordinates)


class TestCoordinates:
    def test_small_sample_inside_extent(self):
        xy = sample_coordinates(FieldSpec(n=10, seed=7))
        assert xy.shape == (10, 2) and xy.min() >= 0 and xy.max() <= 1

    def test_large_sample_fills_extent_without_duplicates(self):
        xy = sample_coordinates(FieldSpec(n=1000, extent=(3.0, 2.0), seed=1))
        assert 0 <= xy[:, 0].min() < 0.05 and 2.95 < xy[:, 0].max() <= 3
        assert 0 <= xy[:, 1].min() < 0.05 and 1.95 < xy[:, 1].max() <= 2
        assert len(np.unique(xy, axis=0)) == 1000

    def test_invalid_spec(self):
        for kw in ({"range": 0}, {"sill": -1}, {"n": 5}, {"n_informative": 0, "n_noise": 0}):
            with pytest.raises(ValueError):
                FieldSpec(**kw)


class TestField:
    def test_nugget_only_has_no_spatial_structure(self):
        xy = sample_coordinates(FieldSpec(n=500, seed=2))
        z = gaussian_random_field(xy, 0.3, 0.0, 1.0, seed=3)
        order = np.argsort(xy[:, 0] + 1e-3 * xy[:, 1])
        r = np.corrcoef(z[order][:-1], z[order][1:])[0, 1]
        assert abs(r) < 0.1

    def test_close_points_are_correlated(self):
        # pairs closer than range/10, pooled over 20 seeds
        pairs = []
        for seed in range(20):
            xy = sample_coordinates(FieldSpec(n=200, seed=seed))
            z = gaussian_random_field(xy, 1.0, 1.0, 0.0, seed=seed)
            d = np.hypot(*(xy[:, None, :] - xy[None, :, :]).transpose(2, 0, 1))
            i, j = np.nonzero(np.triu(d < 0.1, 1))
            pairs.append(np.column_stack([z[i], z[j]]))
        pairs = np.vstack(pairs)
        assert np.corrcoef(pairs.T)[0, 1] > 0.5

    def test_identical_coordinates_give_identical_values(self):
        xy = np.array([[0.2, 0.2], [0.2, 0.2], [0.9, 0.1]])
        z = gaussian_random_field(xy, 0.3, 1.0, 0.0, seed=0)
        assert z[0] == pytest.approx(z[1], abs=1e-4)

    def test_covariance_formula(self):
        xy = np.array([[0.0, 0.0], [0.3, 0.4]])
        c = exponential_covariance(xy, 0.5, 2.0, 0.25)
        assert c[0, 0] == pytest.approx(2.25)
        assert c[0, 1] == pytest.approx(2.0 * np.exp(-1.0))

    def test_semivariogram_rises_up_to_the_range(self):
        votes = 0
        bins = np.linspace(0, 0.3, 5)
        for seed in range(10):
            xy = sample_coordinates(FieldSpec(n=400, seed=seed))
            z = gaussian_random_field(xy, 0.3, 1.0, 0.0, seed=seed)
            d = np.hypot(*(xy[:, None, :] - xy[None, :, :]).transpose(2, 0, 1))
            g = 0.5 * (z[:, None] - z[None, :]) ** 2
            iu = np.triu_indices(len(z), 1)
            idx = np.digitize(d[iu], bins)
            gamma = [g[iu][idx == b].mean() for b in range(1, len(bins))]
            votes += all(np.diff(gamma) >= 0)
        assert votes > 5


class TestClassification:
    def test_prevalence_matches_target_over_seeds(self):
        prev = [make_classification(FieldSpec(n=900, seed=s)).labels.mean() for s in range(20)]
        assert abs(np.mean(prev) - 0.25) <= 0.07

    def test_pure_noise_is_balanced(self):
        prev = [make_classification(FieldSpec(n=400, n_informative=0, n_noise=1, intercept=0.0, seed=s)).labels.mean()
                for s in range(10)]
        assert abs(np.mean(prev) - 0.5) < 0.05

    def test_deterministic(self):
        a = make_classification(FieldSpec(n=50, seed=9))
        b = make_classification(FieldSpec(n=50, seed=9))
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.labels, b.labels)
        assert a.schema.names == ["field1", "field2", "field3", "noise1", "noise2"]

    def test_labels_do_not_depend_on_noise_columns(self):
        a = make_classification(FieldSpec(n=80, seed=4, n_noise=0))
        b = make_classification(FieldSpec(n=80, seed=4, n_noise=3))
        np.testing.assert_array_equal(a.labels, b.labels)
        np.testing.assert_array_equal(a.features, b.features[:, :3])

    def test_single_class_is_an_error(self):
        with pytest.raises(DataError, match="intercept"):
            make_classification(FieldSpec(n=20, intercept=-60.0))
