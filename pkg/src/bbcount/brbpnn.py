"""Bayesian-regularized backpropagation network trained by Levenberg-Marquardt.

The network is one tan-sigmoid hidden layer (one neuron by default) with a
linear output.  Training minimizes F = beta * E_D + alpha * E_W, where E_D
is the sum of squared residuals and E_W the sum of squared weights and
biases.  After each accepted LM epoch the evidence framework re-estimates
alpha and beta from the effective number of parameters gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

import numpy as np

HYPER_MIN = 1e-12
HYPER_MAX = 1e12
MU_FLOOR = 1e-20

DEFAULT_HIDDEN = 1


class BrbpnnError(Exception):
    pass


class NumericError(BrbpnnError, ArithmeticError):
    """The damped normal equations could not be solved."""


def tansig(x):
    """Tan-sigmoid activation 2 / (1 + exp(-2x)) - 1; saturates, never errors."""
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        out = 2.0 / (1.0 + np.exp(-2.0 * x)) - 1.0
    return float(out) if out.ndim == 0 else out


@dataclass
class BrbpnnModel:
    W1: np.ndarray  # (hidden, n_inputs)
    b1: np.ndarray  # (hidden,)
    W2: np.ndarray  # (hidden,)
    b2: float
    alpha: float = HYPER_MIN
    beta: float = 1.0

    @property
    def n_inputs(self) -> int:
        return self.W1.shape[1]

    @property
    def hidden(self) -> int:
        return self.W1.shape[0]

    @property
    def n_params(self) -> int:
        return self.W1.size + self.b1.size + self.W2.size + 1


def init_model(
    n_inputs: int,
    hidden: int = DEFAULT_HIDDEN,
    rng: Optional[np.random.Generator] = None,
    seed: int = 0,
    alpha: float = HYPER_MIN,
    beta: float = 1.0,
) -> BrbpnnModel:
    if rng is None:
        rng = np.random.default_rng(seed)
    s1 = 1.0 / math.sqrt(n_inputs)
    s2 = 1.0 / math.sqrt(hidden)
    return BrbpnnModel(
        W1=rng.uniform(-s1, s1, size=(hidden, n_inputs)),
        b1=rng.uniform(-s1, s1, size=hidden),
        W2=rng.uniform(-s2, s2, size=hidden),
        b2=float(rng.uniform(-s2, s2)),
        alpha=alpha,
        beta=beta,
    )


def forward(model: BrbpnnModel, x: np.ndarray) -> Union[float, np.ndarray]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    hidden = tansig(X @ model.W1.T + model.b1)
    out = hidden @ model.W2 + model.b2
    return float(out[0]) if single else out


def pack(model: BrbpnnModel) -> np.ndarray:
    """Flatten all weights and biases into one parameter vector."""
    return np.concatenate(
        [model.W1.ravel(), model.b1, model.W2, [model.b2]]
    )


def unpack(model: BrbpnnModel, w: np.ndarray) -> None:
    h, d = model.W1.shape
    model.W1 = w[: h * d].reshape(h, d).copy()
    model.b1 = w[h * d : h * d + h].copy()
    model.W2 = w[h * d + h : h * d + 2 * h].copy()
    model.b2 = float(w[-1])


def objective(model: BrbpnnModel, X: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """(F, E_D, E_W) with F = beta * E_D + alpha * E_W."""
    residuals = forward(model, np.atleast_2d(X)) - np.asarray(y, dtype=float)
    e_d = float(residuals @ residuals)
    w = pack(model)
    e_w = float(w @ w)
    return model.beta * e_d + model.alpha * e_w, e_d, e_w


def jacobian(model: BrbpnnModel, X: np.ndarray) -> np.ndarray:
    """d prediction / d parameter, one row per sample, columns in pack() order."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = len(X)
    hidden = tansig(X @ model.W1.T + model.b1)  # (n, h)
    d_hidden = (1.0 - hidden**2) * model.W2  # (n, h)
    cols = [
        (d_hidden[:, :, None] * X[:, None, :]).reshape(n, -1),  # W1
        d_hidden,  # b1
        hidden,  # W2
        np.ones((n, 1)),  # b2
    ]
    return np.concatenate(cols, axis=1)


# ---------------------------------------------------------------------------
# Levenberg-Marquardt
# ---------------------------------------------------------------------------


@dataclass
class LmConfig:
    mu0: float = 0.005
    mu_inc: float = 10.0
    mu_dec: float = 0.1
    mu_max: float = 1e10
    max_epochs: int = 1000


@dataclass
class LmState:
    mu: float = 0.005
    epoch: int = 0


def solve_damped(
    J: np.ndarray,
    residuals: np.ndarray,
    w: np.ndarray,
    alpha: float,
    beta: float,
    mu: float,
) -> np.ndarray:
    """Damped Gauss-Newton step: (beta J'J + (mu + alpha) I) delta = -(beta J'r + alpha w).

    For linear residuals with alpha = 0 and mu -> 0 this lands on the
    least-squares optimum in one step.
    """
    gradient = beta * (J.T @ residuals) + alpha * w
    system = beta * (J.T @ J) + (mu + alpha) * np.eye(w.size)
    try:
        return np.linalg.solve(system, -gradient)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"damped system singular at mu={mu}") from exc


def lm_trial(
    model: BrbpnnModel, state: LmState, X: np.ndarray, y: np.ndarray, config: LmConfig
) -> bool:
    """One damped Gauss-Newton trial.

    Accepts the step only if F decreases: mu shrinks on acceptance, grows
    tenfold on rejection, and the weights stay untouched when rejected.
    """
    y = np.asarray(y, dtype=float)
    w = pack(model)
    residuals = forward(model, np.atleast_2d(X)) - y
    J = jacobian(model, X)
    f_before = model.beta * float(residuals @ residuals) + model.alpha * float(w @ w)
    delta = solve_damped(J, residuals, w, model.alpha, model.beta, state.mu)
    trial = w + delta
    unpack(model, trial)
    f_after, _, _ = objective(model, X, y)
    if f_after < f_before:
        state.mu = max(state.mu * config.mu_dec, MU_FLOOR)
        return True
    unpack(model, w)
    state.mu *= config.mu_inc
    return False


def lm_step(
    model: BrbpnnModel, state: LmState, X: np.ndarray, y: np.ndarray, config: LmConfig
) -> bool:
    """Retry trials within one epoch until acceptance or mu exceeds its cap.

    Returns False on a convergence stall (mu > mu_max); that ends training
    but is not an error.
    """
    while True:
        if lm_trial(model, state, X, y, config):
            return True
        if state.mu > config.mu_max:
            return False


class HyperUpdate(NamedTuple):
    alpha: float
    beta: float
    gamma: float
    pinned: bool


def evidence_update(
    e_d: float, e_w: float, jtj: np.ndarray, alpha: float, beta: float, n_samples: int
) -> HyperUpdate:
    """MacKay evidence re-estimation of (alpha, beta).

    gamma = sum_i beta*lambda_i / (beta*lambda_i + alpha) over the
    eigenvalues of J'J, which keeps gamma inside [0, n_params] by
    construction; alpha = gamma / (2 E_W) and beta = (n - gamma) / (2 E_D),
    both clamped to [1e-12, 1e12].  Zero E_W or E_D pins the coefficient
    at the upper clamp and flags the update.
    """
    eigenvalues = np.clip(np.linalg.eigvalsh(jtj), 0.0, None)
    scaled = beta * eigenvalues
    ratio = np.divide(
        scaled, scaled + alpha, out=np.zeros_like(scaled), where=(scaled + alpha) > 0
    )
    gamma = float(np.sum(ratio))
    pinned = False
    if e_w > 0.0:
        new_alpha = gamma / (2.0 * e_w)
    else:
        new_alpha = HYPER_MAX
        pinned = True
    if e_d > 0.0:
        new_beta = (n_samples - gamma) / (2.0 * e_d)
    else:
        new_beta = HYPER_MAX
        pinned = True
    new_alpha = float(np.clip(new_alpha, HYPER_MIN, HYPER_MAX))
    new_beta = float(np.clip(new_beta, HYPER_MIN, HYPER_MAX))
    return HyperUpdate(new_alpha, new_beta, gamma, pinned)


def update_hyperparams(
    model: BrbpnnModel, X: np.ndarray, y: np.ndarray
) -> HyperUpdate:
    """Re-estimate (alpha, beta) at the model's current weights."""
    _, e_d, e_w = objective(model, X, y)
    J = jacobian(model, X)
    return evidence_update(e_d, e_w, J.T @ J, model.alpha, model.beta, len(np.atleast_1d(y)))


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BrEpochRecord:
    epoch: int
    f_before: float
    f_after: float
    e_d: float
    e_w: float
    alpha: float
    beta: float
    gamma: float
    mu: float
    pinned: bool


EARLY_STOP_REL = 1e-7
EARLY_STOP_EPOCHS = 5


def train(
    X: np.ndarray,
    y: np.ndarray,
    hidden: int = DEFAULT_HIDDEN,
    seed: int = 0,
    config: LmConfig = LmConfig(),
    estimate_hyperparams: bool = True,
    alpha0: float = HYPER_MIN,
    beta0: float = 1.0,
) -> tuple[BrbpnnModel, list[BrEpochRecord]]:
    """Full-batch LM training with per-epoch evidence re-estimation.

    Stops at the epoch cap, on a mu stall, or early once gamma, E_D and
    E_W have all moved less than 1e-7 relatively for 5 consecutive
    epochs.  ``estimate_hyperparams=False`` freezes (alpha0, beta0), which
    is the unregularized baseline when alpha0 = 0.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if len(X) == 0:
        raise ValueError("cannot train on an empty series")
    if len(X) != len(y):
        raise ValueError("X and y lengths differ")
    rng = np.random.default_rng(seed)
    model = init_model(X.shape[1], hidden=hidden, rng=rng, alpha=alpha0, beta=beta0)
    state = LmState(mu=config.mu0)
    history: list[BrEpochRecord] = []
    previous: Optional[tuple[float, float, float]] = None
    stable = 0
    for epoch in range(config.max_epochs):
        state.epoch = epoch
        f_before, _, _ = objective(model, X, y)
        accepted = lm_step(model, state, X, y, config)
        if not accepted:
            break  # mu stall: no further descent possible at this damping
        f_after, e_d, e_w = objective(model, X, y)
        if estimate_hyperparams:
            update = update_hyperparams(model, X, y)
            model.alpha, model.beta = update.alpha, update.beta
            gamma, pinned = update.gamma, update.pinned
        else:
            gamma, pinned = float("nan"), False
        history.append(
            BrEpochRecord(
                epoch, f_before, f_after, e_d, e_w, model.alpha, model.beta,
                gamma, state.mu, pinned,
            )
        )
        current = (gamma, e_d, e_w)
        if previous is not None and estimate_hyperparams:
            if all(
                abs(c - p) <= EARLY_STOP_REL * max(abs(p), 1e-300)
                for c, p in zip(current, previous)
            ):
                stable += 1
                if stable >= EARLY_STOP_EPOCHS:
                    break
            else:
                stable = 0
        previous = current
    return model, history
