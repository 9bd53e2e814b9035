"""Classifier zoo with a uniform fit/predict contract.

Every kind maps labels to sorted class indices internally, so "ties go to
the lower label" is the same rule as "ties go to the lower index".
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidHyperParam, UnsupportedHyperParam
from .base import KINDS, SCHEMAS, ClassifierSpec, Dataset, TrainedModel, accuracy
from .bayes import fit_gaussian_nb, fit_qda, predict_gaussian_nb, predict_qda
from .mlp import fit_mlp, predict_mlp
from .neighbors import fit_knn, predict_knn
from .svm import fit_svm_linear, fit_svm_rbf, predict_svm
from .tree import (
    fit_ada_boost,
    fit_decision_tree,
    fit_random_forest,
    predict_ada_boost,
    predict_decision_tree,
    predict_random_forest,
)

_REGISTRY = {
    "knn": (fit_knn, predict_knn),
    "gaussian_nb": (fit_gaussian_nb, predict_gaussian_nb),
    "qda": (fit_qda, predict_qda),
    "decision_tree": (fit_decision_tree, predict_decision_tree),
    "random_forest": (fit_random_forest, predict_random_forest),
    "ada_boost": (fit_ada_boost, predict_ada_boost),
    "mlp": (fit_mlp, predict_mlp),
    "svm_linear": (fit_svm_linear, predict_svm),
    "svm_rbf": (fit_svm_rbf, predict_svm),
}


def fit(spec: ClassifierSpec, d: Dataset, seed: int = 0) -> TrainedModel:
    """Fit ``spec`` on ``d``; deterministic given ``(spec, d, seed)``.

    Raises
    ------
    UnsupportedHyperParam
        For the Gaussian-process kind and the ``lbfgs`` MLP solver.
    InvalidHyperParam
        For datasets with fewer than two classes or malformed priors.
    SingularCovariance
        For QDA on a class whose regularised covariance is singular.
    """
    if spec.kind not in _REGISTRY:
        raise UnsupportedHyperParam(f"classifier kind {spec.kind!r} is not implemented")
    classes = np.unique(d.y)
    if classes.shape[0] < 2:
        raise InvalidHyperParam("fitting needs at least two distinct labels")
    y_idx = np.searchsorted(classes, d.y)
    rng = np.random.default_rng(seed)
    fitter, _ = _REGISTRY[spec.kind]
    state = fitter(d.X, y_idx, classes.shape[0], spec.params, rng)
    return TrainedModel(spec, classes, d.n_features, state)


def predict(m: TrainedModel, X) -> np.ndarray:
    X = m.check_input(X)
    _, predictor = _REGISTRY[m.kind]
    return m.classes[predictor(m.state, X, m.classes.shape[0])]


__all__ = [
    "KINDS",
    "SCHEMAS",
    "ClassifierSpec",
    "Dataset",
    "TrainedModel",
    "accuracy",
    "fit",
    "predict",
]
