"""Single-hidden-layer sigmoid auto-encoder trained per session.

Forward pass for an input row ``x``::

    h = sigmoid(W x + b)          # encoder, W is (n_hidden, n_input)
    z = sigmoid(W' h + b_dec)     # decoder, W' = W.T when tied

Two regularised variants are supported: denoising (a fixed number of input
components zeroed, reconstruction scored against the clean input) and
contractive (squared Frobenius norm of dh/dx added to the loss). Training is
plain minibatch gradient descent on the batch-mean objective.

The session encoding is ``W`` flattened row-major.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .errors import DimensionMismatch, InvalidHyperParams
from .ingest import N_EVENTS

LOG_EPS = 1e-7
MAX_CORRUPTION = 0.5

_TINY = np.nextafter(0.0, 1.0)
_ALMOST_ONE = np.nextafter(1.0, 0.0)


def sigmoid(a):
    # exp(-logaddexp(0, -a)) avoids overflow for large |a|
    return np.clip(np.exp(-np.logaddexp(0.0, -np.asarray(a, dtype=np.float64))), _TINY, _ALMOST_ONE)


@dataclass(frozen=True, eq=False)
class AeParams:
    """Encoder weights ``W`` (n x d), biases, and an optional untied decoder.

    ``W_dec`` is ``None`` for tied weights; otherwise it is the (d x n)
    decoder matrix.
    """

    W: np.ndarray
    b: np.ndarray
    b_dec: np.ndarray
    W_dec: np.ndarray | None = None

    def __post_init__(self):
        W = np.array(self.W, dtype=np.float64, ndmin=2)
        b = np.array(self.b, dtype=np.float64).reshape(-1)
        b_dec = np.array(self.b_dec, dtype=np.float64).reshape(-1)
        n, d = W.shape
        if b.shape != (n,) or b_dec.shape != (d,):
            raise DimensionMismatch(f"bias shapes {b.shape}, {b_dec.shape} do not fit W {W.shape}")
        W_dec = self.W_dec
        if W_dec is not None:
            W_dec = np.array(W_dec, dtype=np.float64, ndmin=2)
            if W_dec.shape != (d, n):
                raise DimensionMismatch(f"decoder shape {W_dec.shape}, expected {(d, n)}")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "b_dec", b_dec)
        object.__setattr__(self, "W_dec", W_dec)

    @property
    def tied(self) -> bool:
        return self.W_dec is None

    @property
    def n_hidden(self) -> int:
        return self.W.shape[0]

    @property
    def n_input(self) -> int:
        return self.W.shape[1]

    @property
    def decoder(self) -> np.ndarray:
        return self.W.T if self.W_dec is None else self.W_dec

    def flat(self) -> np.ndarray:
        parts = [self.W.ravel(), self.b, self.b_dec]
        if self.W_dec is not None:
            parts.append(self.W_dec.ravel())
        return np.concatenate(parts)

    def from_flat(self, vec: np.ndarray) -> "AeParams":
        """Rebuild params of this shape from a :meth:`flat` vector."""
        n, d = self.W.shape
        vec = np.asarray(vec, dtype=np.float64)
        i = n * d
        W = vec[:i].reshape(n, d)
        b = vec[i : i + n]
        b_dec = vec[i + n : i + n + d]
        W_dec = None if self.W_dec is None else vec[i + n + d :].reshape(d, n)
        return AeParams(W, b, b_dec, W_dec)

    def all_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.flat())))


@dataclass(frozen=True)
class Denoising:
    corruption_level: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.corruption_level <= MAX_CORRUPTION:
            raise InvalidHyperParams(f"corruption level must lie in [0, {MAX_CORRUPTION}]")


@dataclass(frozen=True)
class Contractive:
    contraction_level: float = 0.1

    def __post_init__(self):
        if not self.contraction_level >= 0.0:
            raise InvalidHyperParams("contraction level must be >= 0")


Variant = Union[Denoising, Contractive]


@dataclass(frozen=True)
class AeHyperParams:
    hidden_units: int = 5
    learning_rate: float = 0.1
    batch_size: int = 10
    epochs: int = 50_000
    variant: Variant = Contractive(0.1)
    seed: int = 0
    tied: bool = True

    def __post_init__(self):
        if int(self.hidden_units) != self.hidden_units or self.hidden_units < 1:
            raise InvalidHyperParams("hidden_units must be an integer >= 1")
        if not (self.learning_rate > 0 and math.isfinite(self.learning_rate)):
            raise InvalidHyperParams("learning_rate must be positive")
        if int(self.batch_size) != self.batch_size or not 1 <= self.batch_size <= N_EVENTS:
            raise InvalidHyperParams(f"batch_size must be an integer in [1, {N_EVENTS}]")
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise InvalidHyperParams("epochs must be a positive integer")
        if not isinstance(self.variant, (Denoising, Contractive)):
            raise InvalidHyperParams(f"unknown auto-encoder variant {self.variant!r}")


def contractive_preset(**overrides) -> AeHyperParams:
    """Tuned contractive settings: lr 0.1, contraction 0.1, 5 hidden, 5e4 epochs."""
    hp = AeHyperParams(hidden_units=5, learning_rate=0.1, batch_size=10, epochs=50_000, variant=Contractive(0.1))
    return replace(hp, **overrides)


def denoising_preset(**overrides) -> AeHyperParams:
    """Tuned denoising settings: lr 0.1, corruption 0.1, batch 5, 5 hidden, 5e4 epochs."""
    hp = AeHyperParams(hidden_units=5, learning_rate=0.1, batch_size=5, epochs=50_000, variant=Denoising(0.1))
    return replace(hp, **overrides)


# --------------------------------------------------------------------------
# Forward maps and losses
# --------------------------------------------------------------------------


def _check_input(p: AeParams, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != p.n_input:
        raise DimensionMismatch(f"input width {x.shape[-1]} != {p.n_input}")
    return x


def encode(p: AeParams, x) -> np.ndarray:
    x = _check_input(p, x)
    return sigmoid(x @ p.W.T + p.b)


def decode(p: AeParams, h) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    if h.shape[-1] != p.n_hidden:
        raise DimensionMismatch(f"hidden width {h.shape[-1]} != {p.n_hidden}")
    return sigmoid(h @ p.decoder.T + p.b_dec)


def corruption_count(d: int, level: float) -> int:
    """Components zeroed per row: round-half-up of level*d, capped at d/2."""
    return min(int(math.floor(level * d + 0.5)), d // 2)


def corrupt(x, level: float, rng: np.random.Generator) -> np.ndarray:
    """Zero exactly ``corruption_count(d, level)`` distinct components per row."""
    if not 0.0 <= level <= MAX_CORRUPTION:
        raise InvalidHyperParams(f"corruption level must lie in [0, {MAX_CORRUPTION}]")
    x = np.array(x, dtype=np.float64)
    d = x.shape[-1]
    k = corruption_count(d, level)
    if k == 0:
        return x
    rows = x.reshape(-1, d)
    keys = rng.random(rows.shape)
    drop = np.argsort(keys, axis=1, kind="stable")[:, :k]
    np.put_along_axis(rows, drop, 0.0, axis=1)
    return rows.reshape(x.shape)


def cross_entropy(x, z) -> float | np.ndarray:
    """Reconstruction cross-entropy summed over the last axis (natural log)."""
    x = np.asarray(x, dtype=np.float64)
    z = np.clip(np.asarray(z, dtype=np.float64), LOG_EPS, 1.0 - LOG_EPS)
    out = -np.sum(x * np.log(z) + (1.0 - x) * np.log(1.0 - z), axis=-1)
    return float(out) if out.ndim == 0 else out


def jacobian_penalty(p: AeParams, batch) -> float:
    """Batch mean of ||dh/dx||_F^2 where row i of dh/dx is h_i(1-h_i) W_i."""
    h = encode(p, np.atleast_2d(batch))
    s = h * (1.0 - h)
    return float(np.mean((s * s) @ np.sum(p.W * p.W, axis=1)))


def contractive_objective(p: AeParams, batch, contraction: float) -> float:
    batch = np.atleast_2d(_check_input(p, batch))
    recon = float(np.mean(cross_entropy(batch, decode(p, encode(p, batch)))))
    if contraction == 0:
        return recon
    return recon + contraction * jacobian_penalty(p, batch)


def objective(p: AeParams, batch, variant: Variant, corrupted=None) -> float:
    """Variant objective on ``batch``; ``corrupted`` fixes the denoising input."""
    batch = np.atleast_2d(_check_input(p, batch))
    if isinstance(variant, Contractive):
        return contractive_objective(p, batch, variant.contraction_level)
    inputs = batch if corrupted is None else np.atleast_2d(_check_input(p, corrupted))
    return float(np.mean(cross_entropy(batch, decode(p, encode(p, inputs)))))


# --------------------------------------------------------------------------
# Gradient
# --------------------------------------------------------------------------


def _loss_and_grads(W, b, c, W_dec, inputs, targets, contraction):
    """Batch-mean objective and gradients with respect to (W, b, c, W_dec).

    ``inputs`` feed the encoder, ``targets`` score the reconstruction; the
    contractive penalty is evaluated on ``inputs``.
    """
    m = inputs.shape[0]
    dec = W.T if W_dec is None else W_dec
    H = sigmoid(inputs @ W.T + b)
    Z = sigmoid(H @ dec.T + c)
    Zc = np.clip(Z, LOG_EPS, 1.0 - LOG_EPS)
    loss = -np.sum(targets * np.log(Zc) + (1.0 - targets) * np.log(1.0 - Zc)) / m

    dO = (Z - targets) / m
    dc = dO.sum(axis=0)
    dDec = dO.T @ H
    S = H * (1.0 - H)
    dA = (dO @ dec) * S
    dW = np.zeros_like(W)
    if contraction != 0:
        S2 = S * S
        row_norms = np.sum(W * W, axis=1)
        loss += contraction * float(np.sum(S2 @ row_norms)) / m
        # penalty depends on W directly and through h
        dA += (2.0 * contraction / m) * S2 * (1.0 - 2.0 * H) * row_norms
        dW += (2.0 * contraction / m) * S2.sum(axis=0)[:, None] * W
    dW += dA.T @ inputs
    db = dA.sum(axis=0)
    if W_dec is None:
        dW += dDec.T
        dDec = None
    return float(loss), dW, db, dc, dDec


def gradient(p: AeParams, batch, variant: Variant, *, corrupted=None, rng=None) -> AeParams:
    """Exact gradient of the variant objective, shaped like ``p``.

    For the denoising variant the corrupted input is either given
    explicitly or drawn from ``rng``.
    """
    batch = np.atleast_2d(_check_input(p, batch))
    if batch.shape[0] == 0:
        raise DimensionMismatch("batch is empty")
    if isinstance(variant, Contractive):
        inputs, lam = batch, variant.contraction_level
    else:
        lam = 0.0
        if corrupted is not None:
            inputs = np.atleast_2d(_check_input(p, corrupted))
            if inputs.shape != batch.shape:
                raise DimensionMismatch("corrupted input shape differs from batch")
        elif rng is not None:
            inputs = corrupt(batch, variant.corruption_level, rng)
        else:
            inputs = batch
    _, dW, db, dc, dDec = _loss_and_grads(p.W, p.b, p.b_dec, p.W_dec, inputs, batch, lam)
    return AeParams(dW, db, dc, dDec)


# --------------------------------------------------------------------------
# Training
# --------------------------------------------------------------------------


def init_params(n_input: int, hp: AeHyperParams, rng: np.random.Generator) -> AeParams:
    n = hp.hidden_units
    r = 4.0 * math.sqrt(6.0 / (n_input + n))
    W = rng.uniform(-r, r, size=(n, n_input))
    W_dec = None if hp.tied else rng.uniform(-r, r, size=(n_input, n))
    return AeParams(W, np.zeros(n), np.zeros(n_input), W_dec)


def train(data, hp: AeHyperParams) -> tuple[AeParams, np.ndarray]:
    """Fit one auto-encoder; return final params and per-epoch mean objective.

    Each epoch shuffles the rows, walks them in batches of ``batch_size``
    (the last short batch is kept) and takes one gradient step per batch.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] == 0:
        raise InvalidHyperParams(f"training data must be a non-empty matrix, got shape {data.shape}")
    if not np.all(np.isfinite(data)) or data.min() < 0 or data.max() > 1:
        raise InvalidHyperParams("training data must be scaled to [0, 1]")
    if not isinstance(hp, AeHyperParams):
        raise InvalidHyperParams("hp must be an AeHyperParams")
    rng = np.random.default_rng(hp.seed)
    p0 = init_params(data.shape[1], hp, rng)
    W, b, c, W_dec = p0.W.copy(), p0.b.copy(), p0.b_dec.copy(), p0.W_dec
    if W_dec is not None:
        W_dec = W_dec.copy()

    if isinstance(hp.variant, Contractive):
        lam, level = hp.variant.contraction_level, 0.0
    else:
        lam, level = 0.0, hp.variant.corruption_level
    n_rows, lr, bs = data.shape[0], hp.learning_rate, hp.batch_size
    starts = range(0, n_rows, bs)
    trace = np.empty(hp.epochs)
    for epoch in range(hp.epochs):
        order = rng.permutation(n_rows)
        total = 0.0
        for s in starts:
            batch = data[order[s : s + bs]]
            inputs = corrupt(batch, level, rng) if level > 0 else batch
            loss, dW, db, dc, dDec = _loss_and_grads(W, b, c, W_dec, inputs, batch, lam)
            total += loss * batch.shape[0]
            W -= lr * dW
            b -= lr * db
            c -= lr * dc
            if W_dec is not None:
                W_dec -= lr * dDec
        trace[epoch] = total / n_rows
    return AeParams(W, b, c, W_dec), trace


def session_representation(p: AeParams) -> np.ndarray:
    """Encoder weights flattened row-major; biases are not part of it."""
    return np.array(p.W, dtype=np.float64).ravel()


# --------------------------------------------------------------------------
# Serialisation: "n,d,tied" header, W rows, b, b_dec, then decoder rows
# --------------------------------------------------------------------------


def dumps_params(p: AeParams) -> str:
    out = io.StringIO()
    n, d = p.W.shape
    out.write(f"{n},{d},{int(p.tied)}\n")
    for row in p.W:
        out.write(",".join(repr(float(v)) for v in row) + "\n")
    out.write(",".join(repr(float(v)) for v in p.b) + "\n")
    out.write(",".join(repr(float(v)) for v in p.b_dec) + "\n")
    if not p.tied:
        for row in p.W_dec:
            out.write(",".join(repr(float(v)) for v in row) + "\n")
    return out.getvalue()


def loads_params(text: str) -> AeParams:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    n, d, tied = (int(v) for v in lines[0].split(","))
    rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    expected = n + 2 + (0 if tied else d)
    if len(rows) != expected:
        raise DimensionMismatch(f"expected {expected} rows after header, got {len(rows)}")
    W = np.array(rows[:n])
    b = np.array(rows[n])
    b_dec = np.array(rows[n + 1])
    W_dec = None if tied else np.array(rows[n + 2 :])
    return AeParams(W, b, b_dec, W_dec)
