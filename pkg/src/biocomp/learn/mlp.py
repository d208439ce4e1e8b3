"""Single-hidden-layer perceptron trained by full-batch gradient descent.

Logistic activations throughout, binary cross-entropy loss. The step size
adapts multiplicatively: a step that would raise the loss is retried at
half the rate, so the recorded loss history is non-increasing by
construction. Gradients are exact; ``loss_and_grad`` is exposed for
finite-difference verification.
"""
from __future__ import annotations

import numpy as np

_CLIP = 1e-12


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def init_params(n_features: int, hidden: int, seed: int) -> np.ndarray:
    """Flat parameter vector [W1, b1, W2, b2], scaled by fan-in."""
    rng = np.random.default_rng(np.random.SeedSequence([0x311, seed]))
    w1 = rng.normal(0.0, 1.0 / np.sqrt(n_features), (n_features, hidden))
    b1 = np.zeros(hidden)
    w2 = rng.normal(0.0, 1.0 / np.sqrt(hidden), (hidden, 1))
    b2 = np.zeros(1)
    return np.concatenate([w1.ravel(), b1, w2.ravel(), b2])


def _unpack(params: np.ndarray, n_features: int, hidden: int):
    i = 0
    w1 = params[i : i + n_features * hidden].reshape(n_features, hidden)
    i += n_features * hidden
    b1 = params[i : i + hidden]
    i += hidden
    w2 = params[i : i + hidden].reshape(hidden, 1)
    i += hidden
    b2 = params[i : i + 1]
    return w1, b1, w2, b2


def forward(params: np.ndarray, X: np.ndarray, hidden: int) -> np.ndarray:
    w1, b1, w2, b2 = _unpack(params, X.shape[1], hidden)
    a1 = _sigmoid(X @ w1 + b1)
    return _sigmoid(a1 @ w2 + b2).ravel()


def loss(params: np.ndarray, X: np.ndarray, y: np.ndarray, hidden: int) -> float:
    p = np.clip(forward(params, X, hidden), _CLIP, 1.0 - _CLIP)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def loss_and_grad(params: np.ndarray, X: np.ndarray, y: np.ndarray, hidden: int):
    """Cross-entropy loss and its exact gradient in the flat layout."""
    n, d = X.shape
    w1, b1, w2, b2 = _unpack(params, d, hidden)
    a1 = _sigmoid(X @ w1 + b1)
    p = _sigmoid((a1 @ w2 + b2).ravel())
    p_safe = np.clip(p, _CLIP, 1.0 - _CLIP)
    value = float(-np.mean(y * np.log(p_safe) + (1.0 - y) * np.log(1.0 - p_safe)))

    dz2 = ((p - y) / n)[:, None]
    g_w2 = a1.T @ dz2
    g_b2 = dz2.sum(axis=0)
    da1 = dz2 @ w2.T
    dz1 = da1 * a1 * (1.0 - a1)
    g_w1 = X.T @ dz1
    g_b1 = dz1.sum(axis=0)
    grad = np.concatenate([g_w1.ravel(), g_b1, g_w2.ravel(), g_b2])
    return value, grad


class MLPClassifier:
    def __init__(self, hidden: int, epochs: int = 120, learning_rate: float = 1.0, seed: int = 0):
        self.hidden = int(hidden)
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.seed = seed
        self.params_: np.ndarray | None = None
        self.loss_history_: list[float] = []

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        params = init_params(X.shape[1], self.hidden, self.seed)
        lr = self.learning_rate
        value, grad = loss_and_grad(params, X, y, self.hidden)
        self.loss_history_ = [value]
        for _ in range(self.epochs):
            while True:
                trial = params - lr * grad
                trial_value = loss(trial, X, y, self.hidden)
                if trial_value <= value or lr < 1e-12:
                    break
                lr *= 0.5
            if trial_value > value:
                break  # no usable step remains
            params = trial
            value, grad = loss_and_grad(params, X, y, self.hidden)
            self.loss_history_.append(value)
            lr *= 1.05
        self.params_ = params
        return self

    def predict_proba(self, X):
        return forward(self.params_, np.asarray(X, dtype=float), self.hidden)

    def predict(self, X):
        return (self.predict_proba(X) >= 0.5).astype(int)
