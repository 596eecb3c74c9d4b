"""
Random search on one training set
=================================

Tune an RBF support vector machine with growing budgets. The search draws
trials in a fixed order, so a budget of 20 looks at the first 20 trials of
the budget-60 search and picks the best of those.
"""

from spatialcv.synth import FieldSpec, make_classification
from spatialcv.tuner import tune_path
from spatialcv.learners import default_setting

ds = make_classification(FieldSpec(n=300, seed=2))

path = tune_path("SVM", ds, "spatial", budgets=[0, 5, 20, 60], k_inner=5, seed=11)

print(f"budget 0 keeps the defaults: {default_setting('SVM')}")
for budget in (5, 20, 60):
    r = path[budget]
    print(f"budget {budget:>2}: best inner AUROC {r.best_score:.3f} with "
          f"C={r.best['C']:.3g}, sigma={r.best['sigma']:.3g}")

# the spread of inner scores shows why defaults can be far from the best setting
scores = sorted(t.mean_auroc for t in path[60].trials)
print(f"inner AUROC over 60 trials: worst {scores[0]:.3f}, median {scores[30]:.3f}, best {scores[-1]:.3f}")
