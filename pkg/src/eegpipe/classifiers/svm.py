"""Soft-margin SVM trained by simplified SMO, one-vs-one for multiclass.

Simplified SMO picks the second multiplier at random and stops after
``max_passes`` consecutive sweeps that change no multiplier (or after
``MAX_SWEEPS`` sweeps in total).
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .base import vote

MAX_SWEEPS = 10_000


def linear_kernel(A, B, gamma=None):
    return A @ B.T


def rbf_kernel(A, B, gamma):
    d2 = np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2.0 * (A @ B.T)
    return np.exp(-gamma * np.maximum(d2, 0.0))


@numba.njit(cache=True)
def _smo(K, y, C, tol, max_passes, max_sweeps, seed):
    np.random.seed(seed)
    n = y.shape[0]
    alpha = np.zeros(n)
    b = 0.0
    passes = 0
    sweeps = 0
    while passes < max_passes and sweeps < max_sweeps:
        sweeps += 1
        changed = 0
        for i in range(n):
            Ei = b - y[i]
            for t in range(n):
                Ei += alpha[t] * y[t] * K[t, i]
            if (y[i] * Ei < -tol and alpha[i] < C) or (y[i] * Ei > tol and alpha[i] > 0.0):
                j = np.random.randint(0, n - 1)
                if j >= i:
                    j += 1
                Ej = b - y[j]
                for t in range(n):
                    Ej += alpha[t] * y[t] * K[t, j]
                ai_old = alpha[i]
                aj_old = alpha[j]
                if y[i] != y[j]:
                    L = max(0.0, aj_old - ai_old)
                    H = min(C, C + aj_old - ai_old)
                else:
                    L = max(0.0, ai_old + aj_old - C)
                    H = min(C, ai_old + aj_old)
                if L == H:
                    continue
                eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
                if eta >= 0.0:
                    continue
                aj = aj_old - y[j] * (Ei - Ej) / eta
                if aj > H:
                    aj = H
                elif aj < L:
                    aj = L
                if abs(aj - aj_old) < 1e-5:
                    continue
                ai = ai_old + y[i] * y[j] * (aj_old - aj)
                # clamp away rounding drift outside the box
                if ai < 0.0:
                    ai = 0.0
                elif ai > C:
                    ai = C
                alpha[i] = ai
                alpha[j] = aj
                b1 = b - Ei - y[i] * (ai - ai_old) * K[i, i] - y[j] * (aj - aj_old) * K[i, j]
                b2 = b - Ej - y[i] * (ai - ai_old) * K[i, j] - y[j] * (aj - aj_old) * K[j, j]
                if 0.0 < ai < C:
                    b = b1
                elif 0.0 < aj < C:
                    b = b2
                else:
                    b = 0.5 * (b1 + b2)
                changed += 1
        if changed == 0:
            passes += 1
        else:
            passes = 0
    return alpha, b


@dataclass(frozen=True, eq=False)
class BinarySvm:
    support: np.ndarray
    coef: np.ndarray  # alpha_i * y_i for the support vectors
    intercept: float
    alpha: np.ndarray
    y: np.ndarray

    def decision(self, X, kernel, gamma):
        if self.support.shape[0] == 0:
            return np.full(X.shape[0], self.intercept)
        return kernel(X, self.support, gamma) @ self.coef + self.intercept


def smo_train(X, y_pm, C, kernel, gamma, tol, max_passes, rng) -> BinarySvm:
    """Train a binary SVM on labels in {-1, +1}."""
    K = np.ascontiguousarray(kernel(X, X, gamma))
    y_pm = np.ascontiguousarray(y_pm, dtype=np.float64)
    seed = int(rng.integers(2**31 - 1))
    alpha, b = _smo(K, y_pm, float(C), float(tol), int(max_passes), MAX_SWEEPS, seed)
    sv = alpha > 0.0
    return BinarySvm(X[sv].copy(), (alpha * y_pm)[sv], float(b), alpha, y_pm)


@dataclass(frozen=True, eq=False)
class SvmState:
    pairs: tuple[tuple[int, int], ...]
    machines: tuple[BinarySvm, ...]
    kernel: str
    gamma: float | None


_KERNELS = {"linear": linear_kernel, "rbf": rbf_kernel}


def _fit(X, y, n_classes, params, rng, kernel):
    gamma = None
    if kernel == "rbf":
        gamma = 1.0 / X.shape[1] if params["gamma"] == "auto" else params["gamma"]
    pairs, machines = [], []
    for a in range(n_classes):
        for b in range(a + 1, n_classes):
            rows = (y == a) | (y == b)
            y_pm = np.where(y[rows] == b, 1.0, -1.0)
            machines.append(
                smo_train(X[rows], y_pm, params["C"], _KERNELS[kernel], gamma, params["tol"], params["max_passes"], rng)
            )
            pairs.append((a, b))
    return SvmState(tuple(pairs), tuple(machines), kernel, gamma)


def fit_svm_linear(X, y, n_classes, params, rng):
    return _fit(X, y, n_classes, params, rng, "linear")


def fit_svm_rbf(X, y, n_classes, params, rng):
    return _fit(X, y, n_classes, params, rng, "rbf")


def predict_svm(state: SvmState, X, n_classes):
    kernel = _KERNELS[state.kernel]
    winners = np.empty((X.shape[0], len(state.pairs)), dtype=np.int64)
    for col, ((a, b), m) in enumerate(zip(state.pairs, state.machines)):
        winners[:, col] = np.where(m.decision(X, kernel, state.gamma) > 0.0, b, a)
    return vote(winners, n_classes)
