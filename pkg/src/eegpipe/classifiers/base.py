"""Classifier specs, hyper-parameter schemas and the shared dataset type."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from ..errors import DimensionMismatch, InvalidHyperParam, LengthMismatch

UNSUPPORTED_KINDS = frozenset({"gaussian_process"})


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    label_names: tuple[str, ...] = ()

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64, ndmin=2)
        y = np.array(self.y).reshape(-1)
        if X.shape[0] != y.shape[0]:
            raise LengthMismatch(f"{X.shape[0]} rows but {y.shape[0]} labels")
        if not np.all(np.isfinite(X)):
            raise ValueError("features contain NaN or infinity")
        if y.size and (np.any(np.mod(y, 1) != 0) or y.min() < 0):
            raise ValueError("labels must be non-negative integers")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y.astype(np.int64))
        object.__setattr__(self, "label_names", tuple(self.label_names))

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], self.label_names)


# --------------------------------------------------------------------------
# Value validators
# --------------------------------------------------------------------------


def _int(lo=None, allow_none=False):
    def check(v):
        if v is None and allow_none:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
            if isinstance(v, float) and v.is_integer():
                v = int(v)
            else:
                raise InvalidHyperParam(f"expected an integer, got {v!r}")
        v = int(v)
        if lo is not None and v < lo:
            raise InvalidHyperParam(f"expected an integer >= {lo}, got {v}")
        return v

    return check


def _float(lo=None, hi=None, lo_open=False, hi_open=False):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, (int, float, np.integer, np.floating)):
            raise InvalidHyperParam(f"expected a number, got {v!r}")
        v = float(v)
        if not math.isfinite(v):
            raise InvalidHyperParam(f"expected a finite number, got {v}")
        if lo is not None and (v < lo or (lo_open and v == lo)):
            raise InvalidHyperParam(f"value {v} below allowed range")
        if hi is not None and (v > hi or (hi_open and v == hi)):
            raise InvalidHyperParam(f"value {v} above allowed range")
        return v

    return check


def _choice(*options):
    def check(v):
        if v not in options:
            raise InvalidHyperParam(f"expected one of {options}, got {v!r}")
        return v

    return check


def _bool(v):
    if not isinstance(v, (bool, np.bool_)):
        raise InvalidHyperParam(f"expected True/False, got {v!r}")
    return bool(v)


def _priors(v):
    if v is None:
        return None
    if isinstance(v, (list, tuple)):
        p = tuple(float(x) for x in v)
        if any(x < 0 for x in p) or not math.isclose(sum(p), 1.0, rel_tol=1e-9):
            raise InvalidHyperParam("priors must be non-negative and sum to 1")
        return p
    raise InvalidHyperParam(f"priors must be None or a sequence, got {v!r}")


def _gamma(v):
    if v == "auto":
        return v
    return _float(0.0, lo_open=True)(v)


# kind -> {name: (validator, default)}; key order is the canonical text order
SCHEMAS: dict[str, dict[str, tuple[Callable[[Any], Any], Any]]] = {
    "random_forest": {
        "max_depth": (_int(1, allow_none=True), None),
        "max_features": (_int(1, allow_none=True), None),
        "min_samples_split": (_int(2), 2),
        "min_samples_leaf": (_int(1), 1),
        "bootstrap": (_bool, True),
        "criterion": (_choice("gini", "entropy"), "gini"),
        "n_estimators": (_int(1), 10),
    },
    "ada_boost": {
        "learning_rate": (_float(0.0, lo_open=True), 1.0),
        "n_estimators": (_int(1), 50),
    },
    "decision_tree": {
        "max_depth": (_int(1, allow_none=True), None),
        "min_samples_split": (_int(2), 2),
        "min_samples_leaf": (_int(1), 1),
        "criterion": (_choice("gini", "entropy"), "gini"),
        "max_features": (_int(1, allow_none=True), None),
    },
    "gaussian_process": {
        "warm_start": (_bool, False),
    },
    "mlp": {
        "alpha": (_float(0.0), 0.0001),
        "learning_rate_init": (_float(0.0, lo_open=True), 0.001),
        "momentum": (_float(0.0, 1.0, hi_open=True), 0.9),
        "solver": (_choice("lbfgs", "sgd", "adam"), "adam"),
        "activation": (_choice("logistic", "tanh", "relu"), "relu"),
        "hidden_layer_sizes": (_int(1), 8),
        "max_iter": (_int(1), 200),
        "tol": (_float(0.0), 1e-4),
        "n_iter_no_change": (_int(1), 10),
    },
    "knn": {
        "n_neighbors": (_int(1), 5),
        "algorithm": (_choice("ball_tree", "kd_tree", "brute"), "brute"),
    },
    "gaussian_nb": {
        "priors": (_priors, None),
    },
    "qda": {
        "priors": (_priors, None),
        "reg_param": (_float(0.0, 1.0), 0.0),
    },
    "svm_rbf": {
        "C": (_float(0.0, lo_open=True), 1.0),
        "gamma": (_gamma, "auto"),
        "tol": (_float(0.0, lo_open=True), 1e-3),
        "max_passes": (_int(1), 100),
    },
    "svm_linear": {
        "C": (_float(0.0, lo_open=True), 1.0),
        "tol": (_float(0.0, lo_open=True), 1e-3),
        "max_passes": (_int(1), 100),
    },
}

KINDS: tuple[str, ...] = tuple(k for k in SCHEMAS if k not in UNSUPPORTED_KINDS)


def format_value(v) -> str:
    if v is None or isinstance(v, (bool, np.bool_)):
        return str(bool(v)) if v is not None else "None"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple)):
        return "[" + ";".join(format_value(x) for x in v) + "]"
    return str(v)


def parse_value(text: str):
    t = text.strip()
    if t == "None":
        return None
    if t in ("True", "False"):
        return t == "True"
    if t.startswith("[") and t.endswith("]"):
        inner = t[1:-1].strip()
        return tuple(parse_value(x) for x in inner.split(";")) if inner else ()
    if re.fullmatch(r"[+-]?\d+", t):
        return int(t)
    try:
        return float(t)
    except ValueError:
        return t.strip("'\"")


@dataclass(frozen=True)
class ClassifierSpec:
    """A classifier kind plus one point of its hyper-parameter space.

    ``hyper_params`` keeps only explicitly given values, in schema order;
    :attr:`params` fills in defaults.
    """

    kind: str
    hyper_params: tuple[tuple[str, Any], ...] = ()

    def __post_init__(self):
        if self.kind not in SCHEMAS:
            raise InvalidHyperParam(f"unknown classifier kind {self.kind!r}")
        schema = SCHEMAS[self.kind]
        given = dict(self.hyper_params.items() if isinstance(self.hyper_params, Mapping) else self.hyper_params)
        unknown = set(given) - set(schema)
        if unknown:
            raise InvalidHyperParam(f"{self.kind}: unknown hyper-parameters {sorted(unknown)}")
        normalized = tuple((k, schema[k][0](given[k])) for k in schema if k in given)
        object.__setattr__(self, "hyper_params", normalized)

    @classmethod
    def of(cls, kind: str, **params) -> "ClassifierSpec":
        return cls(kind, tuple(params.items()))

    @property
    def params(self) -> dict[str, Any]:
        out = {k: default for k, (_, default) in SCHEMAS[self.kind].items()}
        out.update(self.hyper_params)
        return out

    @property
    def text(self) -> str:
        return f"{self.kind}(" + ",".join(f"{k}={format_value(v)}" for k, v in self.hyper_params) + ")"

    def __str__(self):
        return self.text

    @classmethod
    def parse(cls, text: str) -> "ClassifierSpec":
        m = re.fullmatch(r"\s*([a-z_]+)\s*(?:\((.*)\))?\s*", text)
        if not m:
            raise InvalidHyperParam(f"cannot parse classifier spec {text!r}")
        kind, body = m.group(1), (m.group(2) or "").strip()
        params = []
        if body:
            for item in body.split(","):
                if "=" not in item:
                    raise InvalidHyperParam(f"expected key=value in {item!r}")
                k, v = item.split("=", 1)
                params.append((k.strip(), parse_value(v)))
        return cls(kind, tuple(params))


@dataclass(frozen=True, eq=False)
class TrainedModel:
    spec: ClassifierSpec
    classes: np.ndarray
    n_features: int
    state: Any

    @property
    def kind(self) -> str:
        return self.spec.kind

    def check_input(self, X) -> np.ndarray:
        X = np.array(X, dtype=np.float64, ndmin=2)
        if X.shape[1] != self.n_features:
            raise DimensionMismatch(f"model expects {self.n_features} features, got {X.shape[1]}")
        return X


def vote(labels: np.ndarray, n_classes: int, weights=None) -> np.ndarray:
    """Row-wise (weighted) majority over class indices; ties go to the lower index."""
    labels = np.asarray(labels)
    counts = np.zeros((labels.shape[0], n_classes))
    w = np.ones(labels.shape[1]) if weights is None else np.asarray(weights, dtype=np.float64)
    for j in range(labels.shape[1]):
        counts[np.arange(labels.shape[0]), labels[:, j]] += w[j]
    return np.argmax(counts, axis=1)


def accuracy(y_true: Sequence, y_pred: Sequence) -> float:
    y_true = np.asarray(y_true).reshape(-1)
    y_pred = np.asarray(y_pred).reshape(-1)
    if y_true.shape != y_pred.shape:
        raise LengthMismatch(f"lengths differ: {y_true.size} vs {y_pred.size}")
    if y_true.size == 0:
        raise LengthMismatch("accuracy of an empty prediction is undefined")
    return float(np.mean(y_true == y_pred))
