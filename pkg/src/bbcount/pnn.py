"""Poisson-rate neural network: tanh hidden layer, softplus-positive output,
Poisson negative log-likelihood loss, Adam optimizer.

One model is trained per basic-block series on min-max-normalized features
and targets.  The softplus output keeps every predicted rate strictly
positive so the likelihood's log term is always defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

DEFAULT_HIDDEN = 10
DEFAULT_EPS = 1e-8


class PnnError(Exception):
    pass


class DomainError(PnnError, ValueError):
    """An argument is outside the mathematical domain of the operation."""


class NumericError(PnnError, ArithmeticError):
    """A non-finite value appeared where a finite one is required."""


class ShapeError(PnnError, ValueError):
    pass


class TrainingError(PnnError, RuntimeError):
    """Training diverged; carries the epoch index."""

    def __init__(self, epoch: int, message: str):
        super().__init__(f"epoch {epoch}: {message}")
        self.epoch = epoch


def poisson_pmf(lam: float, j: int) -> float:
    """P(Y = j) for a Poisson rate lam, computed in log space."""
    if not lam > 0.0:
        raise DomainError(f"rate must be positive, got {lam}")
    if j < 0 or j != int(j):
        raise DomainError(f"count must be a non-negative integer, got {j}")
    j = int(j)
    return math.exp(-lam + j * math.log(lam) - math.lgamma(j + 1))


def poisson_nll(pred, target, eps: float = DEFAULT_EPS) -> float:
    """Mean of pred - target * log(pred + eps) over the batch.

    eps guards log(0); passing eps=0 is allowed when pred is strictly
    positive.
    """
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if eps < 0.0:
        raise DomainError(f"eps must be non-negative, got {eps}")
    if not (np.all(np.isfinite(pred)) and np.all(np.isfinite(target))):
        raise NumericError("non-finite prediction or target in poisson_nll")
    return float(np.mean(pred - target * np.log(pred + eps)))


@dataclass
class PnnModel:
    W1: np.ndarray  # (hidden, n_inputs)
    b1: np.ndarray  # (hidden,)
    W2: np.ndarray  # (hidden,)
    b2: float
    eps: float = DEFAULT_EPS

    @property
    def n_inputs(self) -> int:
        return self.W1.shape[1]

    @property
    def hidden(self) -> int:
        return self.W1.shape[0]


def init_model(
    n_inputs: int,
    hidden: int = DEFAULT_HIDDEN,
    rng: Optional[np.random.Generator] = None,
    seed: int = 0,
    eps: float = DEFAULT_EPS,
) -> PnnModel:
    """Seeded uniform init in +-1/sqrt(fan_in) per layer, biases included."""
    if rng is None:
        rng = np.random.default_rng(seed)
    s1 = 1.0 / math.sqrt(n_inputs)
    s2 = 1.0 / math.sqrt(hidden)
    return PnnModel(
        W1=rng.uniform(-s1, s1, size=(hidden, n_inputs)),
        b1=rng.uniform(-s1, s1, size=hidden),
        W2=rng.uniform(-s2, s2, size=hidden),
        b2=float(rng.uniform(-s2, s2)),
        eps=eps,
    )


def forward(model: PnnModel, x: np.ndarray) -> Union[float, np.ndarray]:
    """Predicted Poisson rate, softplus(W2 . tanh(W1 x + b1) + b2) + eps > 0."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != model.n_inputs:
        raise ShapeError(f"expected {model.n_inputs} features, got {X.shape[1]}")
    hidden = np.tanh(X @ model.W1.T + model.b1)
    z = hidden @ model.W2 + model.b2
    rate = np.logaddexp(0.0, z) + model.eps
    return float(rate[0]) if single else rate


def loss_and_grads(
    model: PnnModel, X: np.ndarray, y: np.ndarray, nll_eps: float = DEFAULT_EPS
) -> tuple[float, dict[str, np.ndarray]]:
    """Batch Poisson NLL and its gradient w.r.t. every parameter block."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if X.shape[1] != model.n_inputs:
        raise ShapeError(f"expected {model.n_inputs} features, got {X.shape[1]}")
    n = len(y)
    pre = X @ model.W1.T + model.b1
    hidden = np.tanh(pre)
    z = hidden @ model.W2 + model.b2
    softplus = np.logaddexp(0.0, z)
    rate = softplus + model.eps
    loss = float(np.mean(rate - y * np.log(rate + nll_eps)))
    # d loss / d rate, then back through softplus (sigma(z) = exp(z - softplus))
    d_rate = (1.0 - y / (rate + nll_eps)) / n
    d_z = d_rate * np.exp(z - softplus)
    d_hidden = np.outer(d_z, model.W2)
    d_pre = d_hidden * (1.0 - hidden**2)
    grads = {
        "W1": d_pre.T @ X,
        "b1": d_pre.sum(axis=0),
        "W2": hidden.T @ d_z,
        "b2": np.asarray(d_z.sum()),
    }
    return loss, grads


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    learning_rate: float = 1e-4


def init_adam(params: dict[str, np.ndarray], learning_rate: float = 1e-4) -> AdamState:
    return AdamState(
        m={k: np.zeros_like(v) for k, v in params.items()},
        v={k: np.zeros_like(v) for k, v in params.items()},
        learning_rate=learning_rate,
    )


def adam_step(
    state: AdamState, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]
) -> dict[str, np.ndarray]:
    """One bias-corrected Adam update; mutates params and state in place."""
    state.step += 1
    t = state.step
    for name, param in params.items():
        grad = np.asarray(grads[name], dtype=float)
        if not np.all(np.isfinite(grad)):
            raise NumericError(f"non-finite gradient for parameter block {name!r}")
        state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * grad
        state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * grad**2
        m_hat = state.m[name] / (1.0 - state.beta1**t)
        v_hat = state.v[name] / (1.0 - state.beta2**t)
        param -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
    return params


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass
class TrainConfig:
    epochs: int = 300
    batch_size: int = 10
    learning_rate: float = 1e-4
    seed: int = 0
    hidden: int = DEFAULT_HIDDEN
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if self.epochs <= 0 or self.batch_size <= 0 or self.learning_rate <= 0:
            raise ValueError("epochs, batch_size and learning_rate must be positive")


def train(
    X: np.ndarray, y: np.ndarray, config: TrainConfig = TrainConfig()
) -> tuple[PnnModel, list[float]]:
    """Train on normalized (X, y); returns the model and per-epoch mean loss.

    Mini-batches are drawn in a freshly shuffled order each epoch; a short
    final batch is kept rather than dropped.  Identical (data, seed,
    config) give a bit-identical loss history.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if len(X) == 0:
        raise ShapeError("cannot train on an empty series")
    if len(X) != len(y):
        raise ShapeError("X and y lengths differ")
    rng = np.random.default_rng(config.seed)
    model = init_model(X.shape[1], hidden=config.hidden, rng=rng, eps=config.eps)
    params = {
        "W1": model.W1,
        "b1": model.b1,
        "W2": model.W2,
        "b2": np.asarray(model.b2, dtype=float),
    }
    state = init_adam(params, learning_rate=config.learning_rate)
    n = len(y)
    history: list[float] = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        batch_losses = []
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            model.b2 = float(params["b2"])
            loss, grads = loss_and_grads(model, X[batch], y[batch], nll_eps=config.eps)
            if not math.isfinite(loss):
                raise TrainingError(epoch, f"loss diverged to {loss}")
            adam_step(state, params, grads)
            batch_losses.append(loss)
        history.append(float(np.mean(batch_losses)))
    model.b2 = float(params["b2"])
    return model, history
