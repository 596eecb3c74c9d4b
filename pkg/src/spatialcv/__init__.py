"""Spatial and non-spatial nested cross-validation with random-search tuning."""

from .dataset import Dataset, DataError, FeatureSchema, load_csv, read_schema
from .experiment import CvSetup, ExperimentConfig, ExperimentResult, optimism, run_experiment, run_nested_cv
from .metrics import aggregate, auroc
from .partition import PartitionSpec, make_folds
from .synth import FieldSpec, make_classification
from .tuner import table1_space, tune

__version__ = "0.1.0"
