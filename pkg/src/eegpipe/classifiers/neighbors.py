"""Brute-force k-nearest-neighbour voting.

The ``algorithm`` hyper-parameter is accepted for compatibility with the
standard grid but every value runs the same exhaustive search: with a few
dozen sessions a spatial index only adds overhead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import vote


@dataclass(frozen=True, eq=False)
class NeighborsState:
    X: np.ndarray
    y: np.ndarray
    k: int


def fit_knn(X, y, n_classes, params, rng):
    return NeighborsState(np.array(X), np.array(y), min(params["n_neighbors"], X.shape[0]))


def predict_knn(state: NeighborsState, X, n_classes):
    d2 = np.sum((X[:, None, :] - state.X[None, :, :]) ** 2, axis=2)
    # stable sort: equal distances resolve toward the lower training index
    nearest = np.argsort(d2, axis=1, kind="stable")[:, : state.k]
    return vote(state.y[nearest], n_classes)
