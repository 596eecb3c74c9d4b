"""
Random folds versus spatial folds
=================================

Simulate an autocorrelated landscape, split it two ways and measure how far
each test point sits from the nearest training point.
"""

import numpy as np

from spatialcv.partition import PartitionSpec, fold_split, make_folds
from spatialcv.synth import FieldSpec, make_classification

# 600 points on the unit square; three smooth fields drive the label
ds = make_classification(FieldSpec(n=600, range=0.3, seed=1))
print(f"{ds.n} points, prevalence {ds.labels.mean():.2f}")

# five folds, three repetitions, once at random and once by k-means on the coordinates
random_folds = make_folds(ds.coords, PartitionSpec(5, 3, "random", seed=7))
spatial_folds = make_folds(ds.coords, PartitionSpec(5, 3, "spatial", seed=7))


def test_to_train_distance(assign):
    out = []
    for rep in range(assign.repetitions):
        for fold in range(assign.k):
            train, test = fold_split(assign, rep, fold)
            d = np.sqrt(((ds.coords[test][:, None] - ds.coords[train][None]) ** 2).sum(axis=2))
            out.append(d.min(axis=1).mean())
    return np.mean(out)


# random folds leave a training point right next to almost every test point
print("mean distance from a test point to its nearest training point")
print(f"  random folds : {test_to_train_distance(random_folds):.4f}")
print(f"  spatial folds: {test_to_train_distance(spatial_folds):.4f}")

# spatial folds have uneven sizes because clusters follow the point density
for rep in range(3):
    print(f"  repetition {rep}: random {random_folds.fold_sizes(rep).tolist()}"
          f"  spatial {spatial_folds.fold_sizes(rep).tolist()}")

# a coarse map of repetition 0: each character is the fold of the nearest point
grid = np.linspace(0.02, 0.98, 24)
for gy in grid[::-2]:
    row = ""
    for gx in grid:
        nearest = np.argmin(((ds.coords - (gx, gy)) ** 2).sum(axis=1))
        row += "ABCDE"[spatial_folds.folds[0][nearest]]
    print("  " + row)
