"""Binary classifiers behind one fit/predict interface."""

from ..dataset import Dataset
from . import boosting, forest, glm, svm, wknn
from .base import BRT, GLM, KINDS, RF, SVM, WKNN, FittedModel, default_setting, learner_kind
from .boosting import fit_brt
from .forest import fit_rf
from .glm import fit_glm
from .svm import fit_svm
from .wknn import KERNELS, fit_wknn

__all__ = ["GLM", "WKNN", "RF", "BRT", "SVM", "KINDS", "KERNELS", "FittedModel", "default_setting",
           "learner_kind", "fit", "score_settings", "fit_glm", "fit_wknn", "fit_rf", "fit_brt",
           "fit_svm"]

_SCORERS = {WKNN: wknn.score_settings, RF: forest.score_settings,
            BRT: boosting.score_settings, SVM: svm.score_settings}


def fit(kind: str, train: Dataset, setting=None, seed: int = 0) -> FittedModel:
    """Fit ``kind`` with ``setting`` (defaults when ``None``)."""
    kind = learner_kind(kind)
    if setting is None:
        from .base import prepare
        setting = default_setting(kind, prepare(train, need_features=False)[0].shape[1])
    if kind == GLM:
        if setting:
            raise ValueError("GLM takes no hyperparameters")
        return fit_glm(train)
    if kind == WKNN:
        return fit_wknn(train, setting)
    if kind == RF:
        return fit_rf(train, setting, seed)
    if kind == BRT:
        return fit_brt(train, setting, seed)
    return fit_svm(train, setting)


def score_settings(kind: str, train: Dataset, test: Dataset, settings, seed: int = 0):
    """Scores on ``test`` for each setting, all fitted on ``train`` with one seed.

    Element ``i`` equals ``fit(kind, train, settings[i], seed).predict(test)``;
    the per-learner implementations share work between settings.
    """
    kind = learner_kind(kind)
    if kind == GLM:
        return [fit_glm(train).predict(test) for _ in settings]
    return _SCORERS[kind](train, test, list(settings), seed)
