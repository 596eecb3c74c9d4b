"""
How optimistic is non-spatial cross-validation?
===============================================

Estimate the AUROC of a logistic regression and a random forest twice, once
with random outer folds and once with spatial ones, and compare.
"""

from spatialcv.experiment import NS_NONE, S_NONE, ExperimentConfig, optimism, run_experiment
from spatialcv.synth import FieldSpec, make_classification

ds = make_classification(FieldSpec(n=400, sill=0.8, seed=1))

# default hyperparameters only, so this finishes in about a minute
cfg = ExperimentConfig(k_outer=5, repetitions=3, budgets=(0,), learners=("GLM", "RF"),
                       setups=(NS_NONE, S_NONE), master_seed=2018)
result = run_experiment(ds, cfg)

for kind in cfg.learners:
    o = optimism(result, kind, 0, nonspatial=NS_NONE, spatial=S_NONE)
    print(f"{kind:4}  non-spatial {o.nonspatial:.3f}   spatial {o.spatial:.3f}   "
          f"gap {o.difference:+.3f} ({o.relative_to_nonspatial:.0f}% of the non-spatial estimate)")

# the forest gains most from random folds: it memorises the neighbourhood of each test point,
# which spatial folds take away
