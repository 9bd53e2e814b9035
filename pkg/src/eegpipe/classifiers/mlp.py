"""One-hidden-layer perceptron with a softmax output and L2 penalty.

Loss is the mean negative log-likelihood plus ``alpha / (2 n)`` times the
squared norm of both weight matrices. Optimisers: SGD with classical
momentum, or Adam (0.9, 0.999, 1e-8). Training stops after ``max_iter``
epochs or once the loss has failed to improve by ``tol`` for
``n_iter_no_change`` consecutive epochs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import UnsupportedHyperParam

BATCH_LIMIT = 200
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def _activate(A, activation):
    if activation == "logistic":
        return np.exp(-np.logaddexp(0.0, -A))
    if activation == "tanh":
        return np.tanh(A)
    return np.maximum(A, 0.0)


def _activation_grad(A, H, activation):
    if activation == "logistic":
        return H * (1.0 - H)
    if activation == "tanh":
        return 1.0 - H * H
    return (A > 0.0).astype(np.float64)


@dataclass(frozen=True, eq=False)
class MlpState:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    activation: str
    n_epochs: int
    loss_curve: np.ndarray


def forward(params, X, activation):
    W1, b1, W2, b2 = params
    A1 = X @ W1 + b1
    H = _activate(A1, activation)
    O = H @ W2 + b2
    log_p = O - np.logaddexp.reduce(O, axis=1, keepdims=True)
    return A1, H, log_p


def loss_and_grads(params, X, Y, alpha, activation):
    """Penalised loss and gradients for one-hot targets ``Y``."""
    W1, b1, W2, b2 = params
    n = X.shape[0]
    A1, H, log_p = forward(params, X, activation)
    loss = -np.sum(Y * log_p) / n + 0.5 * alpha * (np.sum(W1 * W1) + np.sum(W2 * W2)) / n
    dO = (np.exp(log_p) - Y) / n
    dW2 = H.T @ dO + (alpha / n) * W2
    db2 = dO.sum(axis=0)
    dA1 = (dO @ W2.T) * _activation_grad(A1, H, activation)
    dW1 = X.T @ dA1 + (alpha / n) * W1
    db1 = dA1.sum(axis=0)
    return float(loss), [dW1, db1, dW2, db2]


def init_params(n_in, n_hidden, n_out, rng):
    params = []
    for fan_in, fan_out in ((n_in, n_hidden), (n_hidden, n_out)):
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        params.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        params.append(np.zeros(fan_out))
    return params


def fit_mlp(X, y, n_classes, params, rng):
    if params["solver"] == "lbfgs":
        raise UnsupportedHyperParam("mlp solver 'lbfgs' is not implemented; use 'sgd' or 'adam'")
    # large learning rates with high momentum can diverge; that is a valid
    # (poorly scoring) grid point, not an error
    with np.errstate(over="ignore", invalid="ignore"):
        return _fit(X, y, n_classes, params, rng)


def _fit(X, y, n_classes, params, rng):
    n, F = X.shape
    Y = np.eye(n_classes)[y]
    theta = init_params(F, params["hidden_layer_sizes"], n_classes, rng)
    lr = params["learning_rate_init"]
    alpha = params["alpha"]
    activation = params["activation"]
    solver = params["solver"]
    momentum = params["momentum"]
    batch = min(BATCH_LIMIT, n)

    velocity = [np.zeros_like(p) for p in theta]
    m1 = [np.zeros_like(p) for p in theta]
    m2 = [np.zeros_like(p) for p in theta]
    step = 0
    best = np.inf
    stall = 0
    curve = []
    for _ in range(params["max_iter"]):
        order = rng.permutation(n) if batch < n else np.arange(n)
        epoch_loss = 0.0
        for s in range(0, n, batch):
            rows = order[s : s + batch]
            loss, grads = loss_and_grads(theta, X[rows], Y[rows], alpha, activation)
            epoch_loss += loss * rows.shape[0]
            step += 1
            if solver == "sgd":
                for p, v, g in zip(theta, velocity, grads):
                    v *= momentum
                    v -= lr * g
                    p += v
            else:
                c1 = 1.0 - ADAM_BETA1**step
                c2 = 1.0 - ADAM_BETA2**step
                for p, a, b, g in zip(theta, m1, m2, grads):
                    a *= ADAM_BETA1
                    a += (1.0 - ADAM_BETA1) * g
                    b *= ADAM_BETA2
                    b += (1.0 - ADAM_BETA2) * g * g
                    p -= lr * (a / c1) / (np.sqrt(b / c2) + ADAM_EPS)
        epoch_loss /= n
        curve.append(epoch_loss)
        if not math.isfinite(epoch_loss):
            break
        if epoch_loss > best - params["tol"]:
            stall += 1
        else:
            stall = 0
        best = min(best, epoch_loss)
        if stall >= params["n_iter_no_change"]:
            break
    W1, b1, W2, b2 = theta
    return MlpState(W1, b1, W2, b2, activation, len(curve), np.array(curve))


def predict_mlp(state: MlpState, X, n_classes):
    with np.errstate(over="ignore", invalid="ignore"):
        _, _, log_p = forward((state.W1, state.b1, state.W2, state.b2), X, state.activation)
    # nan rows (diverged training) fall back to the lowest class
    log_p = np.where(np.isnan(log_p), -np.inf, log_p)
    return np.argmax(log_p, axis=1)
