"""Classifier families and their tuning grids.

Seven families, each tuning one parameter over five candidate values.
Distance- and gradient-based families (k-NN, linear SVM, MLP) standardize
features internally with training-set statistics; the fitted scaler is
exposed for leakage checks.
"""
from __future__ import annotations

import math

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from ..errors import TrainError
from .mlp import MLPClassifier
from .trees import BoostedTreesClassifier, CartClassifier, RandomForestClassifier

FAMILIES = ("NB", "KNN", "TREE", "SVM_LINEAR", "MLP", "RF", "BOOST")
STANDARDIZED_FAMILIES = frozenset({"KNN", "SVM_LINEAR", "MLP"})


class GaussianNBClassifier:
    """Gaussian naive Bayes; variances are floored at ``var_smoothing``
    times the largest feature variance."""

    def __init__(self, var_smoothing: float = 1e-9):
        self.var_smoothing = float(var_smoothing)

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        self.classes_ = np.array([0, 1])
        self.means_ = np.stack([X[y == c].mean(axis=0) for c in self.classes_])
        raw_var = np.stack([X[y == c].var(axis=0) for c in self.classes_])
        self.vars_ = raw_var + self.var_smoothing * max(float(X.var(axis=0).max()), 1e-12)
        self.log_priors_ = np.log(
            np.array([(y == c).mean() for c in self.classes_])
        )
        return self

    def _joint_log_likelihood(self, X):
        X = np.asarray(X, dtype=float)
        jll = np.empty((len(X), 2))
        for i in range(2):
            diff = X - self.means_[i]
            jll[:, i] = self.log_priors_[i] - 0.5 * np.sum(
                np.log(2.0 * np.pi * self.vars_[i]) + diff**2 / self.vars_[i], axis=1
            )
        return jll

    def predict(self, X):
        return self._joint_log_likelihood(X).argmax(axis=1)


class KNNClassifier:
    """Majority vote over the k nearest training rows (Euclidean)."""

    def __init__(self, k: int = 5):
        self.k = int(k)

    def fit(self, X, y):
        self.X_ = np.asarray(X, dtype=float)
        self.y_ = np.asarray(y, dtype=int)
        return self

    def predict(self, X):
        votes = knn_votes(self.X_, self.y_, np.asarray(X, dtype=float), [self.k])[0]
        return votes

    @staticmethod
    def squared_distances(train_X, X):
        return (
            np.sum(X**2, axis=1)[:, None]
            - 2.0 * X @ train_X.T
            + np.sum(train_X**2, axis=1)[None, :]
        )


def knn_votes(train_X, train_y, X, ks) -> list[np.ndarray]:
    """Predictions for several k values sharing one distance matrix."""
    d2 = KNNClassifier.squared_distances(train_X, X)
    order = np.argsort(d2, axis=1, kind="stable")
    out = []
    for k in ks:
        k_eff = min(int(k), train_X.shape[0])
        nearest = train_y[order[:, :k_eff]]
        out.append((nearest.mean(axis=1) >= 0.5).astype(int))
    return out


class LinearSVMClassifier:
    """L2-regularized squared-hinge linear SVM.

    The smooth objective 0.5*||w||^2 + C * sum(max(0, 1 - m)^2) is
    minimized with L-BFGS from a zero start, so fits are deterministic.
    """

    def __init__(self, c: float = 1.0, max_iter: int = 300):
        self.c = float(c)
        self.max_iter = max_iter

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        sign = np.where(np.asarray(y, dtype=int) == 1, 1.0, -1.0)
        n, d = X.shape

        def objective(theta):
            w, b = theta[:d], theta[d]
            margin = sign * (X @ w + b)
            slack = np.maximum(0.0, 1.0 - margin)
            value = 0.5 * w @ w + self.c * np.sum(slack**2)
            coef = -2.0 * self.c * slack * sign
            grad_w = w + X.T @ coef
            grad_b = float(np.sum(coef))
            return value, np.concatenate([grad_w, [grad_b]])

        result = minimize(
            objective,
            np.zeros(d + 1),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": self.max_iter, "ftol": 1e-12, "gtol": 1e-9},
        )
        self.weights_ = result.x[:d]
        self.bias_ = float(result.x[d])
        return self

    def decision_values(self, X):
        return np.asarray(X, dtype=float) @ self.weights_ + self.bias_

    def predict(self, X):
        return (self.decision_values(X) >= 0.0).astype(int)


class StandardizedClassifier:
    """Wraps a model with train-set standardization (mean 0, unit variance)."""

    def __init__(self, inner):
        self.inner = inner

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        self.scaler_mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        std[std == 0.0] = 1.0  # constant columns pass through unscaled
        self.scaler_std_ = std
        self.inner.fit((X - self.scaler_mean_) / self.scaler_std_, y)
        return self

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.scaler_mean_) / self.scaler_std_

    def predict(self, X):
        return self.inner.predict(self.transform(X))


@dataclass(frozen=True)
class ClassifierSpec:
    """A family plus its ordered tuning grid (five candidates per parameter)."""

    family: str
    grid: tuple[tuple[str, tuple], ...]
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")

    def grid_points(self) -> list[dict]:
        """Cartesian product in declaration order (first parameter slowest)."""
        points = [dict()]
        for name, values in self.grid:
            points = [{**p, name: v} for p in points for v in values]
        return points


def _rf_mtry_grid(n_features: int) -> tuple[int, ...]:
    """Five values spanning 1 .. ceil(sqrt(d)) .. d."""
    if n_features < 3:
        raise ValueError("need at least 3 features for the forest grid")
    s = int(np.ceil(np.sqrt(n_features)))
    raw = [1, math.ceil((1 + s) / 2), s, math.ceil((s + n_features) / 2), n_features]
    grid = []
    for v in raw:
        v = int(min(max(v, 1), n_features))
        while v in grid and v < n_features:
            v += 1
        grid.append(v)
    return tuple(grid)


def default_spec(family: str, n_features: int, seed: int = 0) -> ClassifierSpec:
    grids = {
        "NB": (("var_smoothing", (1e-9, 1e-7, 1e-5, 1e-3, 1e-1)),),
        "KNN": (("k", (5, 7, 9, 11, 13)),),
        "TREE": (("ccp_alpha", (0.0, 0.0025, 0.005, 0.01, 0.02)),),
        "SVM_LINEAR": (("c", (0.25, 0.5, 1.0, 2.0, 4.0)),),
        "MLP": (("hidden", (1, 3, 5, 7, 9)),),
        "RF": (("mtry", _rf_mtry_grid(n_features)),),
        "BOOST": (("trials", (10, 20, 30, 40, 50)),),
    }
    return ClassifierSpec(family=family, grid=grids[family], seed=seed)


def make_model(family: str, params: dict, seed: int = 0):
    """Instantiate a family member; standardized families are wrapped."""
    if family == "NB":
        model = GaussianNBClassifier(**params)
    elif family == "KNN":
        model = KNNClassifier(**params)
    elif family == "TREE":
        model = CartClassifier(**params)
    elif family == "SVM_LINEAR":
        model = LinearSVMClassifier(**params)
    elif family == "MLP":
        model = MLPClassifier(**params, seed=seed)
    elif family == "RF":
        model = RandomForestClassifier(**params, seed=seed)
    elif family == "BOOST":
        model = BoostedTreesClassifier(**params)
    else:
        raise ValueError(f"unknown family {family!r}")
    if family in STANDARDIZED_FAMILIES:
        return StandardizedClassifier(model)
    return model


def fit_model(family: str, params: dict, X: np.ndarray, y: np.ndarray, seed: int = 0):
    """Fit one model; both classes must be present and features finite."""
    y = np.asarray(y, dtype=int)
    if len(np.unique(y)) < 2:
        raise TrainError("training set holds a single class")
    if not np.isfinite(np.asarray(X, dtype=float)).all():
        raise TrainError("training features must be finite (impute first)")
    return make_model(family, params, seed=seed).fit(X, y)
