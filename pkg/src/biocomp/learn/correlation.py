"""Kendall rank correlation (tau-b) with a tie-adjusted significance test."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import CorrelationUndefinedError


@dataclass(frozen=True)
class CorrelationResult:
    tau: float
    p_value: float
    n: int

    def to_dict(self) -> dict:
        return {"tau": self.tau, "p_value": self.p_value, "n": self.n}


def _tie_sizes(values: np.ndarray) -> np.ndarray:
    _, counts = np.unique(values, return_counts=True)
    return counts[counts > 1].astype(float)


def kendall_tau(x, y) -> CorrelationResult:
    """Tie-corrected Kendall tau with a two-sided normal-approximation p.

    tau-b divides the concordant-minus-discordant count by the geometric
    mean of the tie-adjusted pair counts; the variance of that count under
    the null carries the standard tie corrections. Raises
    CorrelationUndefinedError when either vector is entirely tied.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D vectors of equal length")
    n = len(x)
    if n < 2:
        raise ValueError("need at least two observations")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise CorrelationUndefinedError("a vector is entirely tied; tau undefined")

    dx = np.sign(x[:, None] - x[None, :])
    dy = np.sign(y[:, None] - y[None, :])
    upper = np.triu_indices(n, k=1)
    s = float(np.sum(dx[upper] * dy[upper]))

    n0 = n * (n - 1) / 2.0
    tx = _tie_sizes(x)
    ty = _tie_sizes(y)
    n1 = float(np.sum(tx * (tx - 1) / 2.0))
    n2 = float(np.sum(ty * (ty - 1) / 2.0))
    tau = s / math.sqrt((n0 - n1) * (n0 - n2))

    v0 = n * (n - 1) * (2 * n + 5)
    vt = float(np.sum(tx * (tx - 1) * (2 * tx + 5)))
    vu = float(np.sum(ty * (ty - 1) * (2 * ty + 5)))
    var_s = (v0 - vt - vu) / 18.0
    var_s += (
        float(np.sum(tx * (tx - 1))) * float(np.sum(ty * (ty - 1)))
    ) / (2.0 * n * (n - 1))
    if n > 2:
        var_s += (
            float(np.sum(tx * (tx - 1) * (tx - 2)))
            * float(np.sum(ty * (ty - 1) * (ty - 2)))
        ) / (9.0 * n * (n - 1) * (n - 2))

    if var_s <= 0:
        p = 1.0
    else:
        z = s / math.sqrt(var_s)
        p = math.erfc(abs(z) / math.sqrt(2.0))
    return CorrelationResult(tau=float(tau), p_value=float(min(p, 1.0)), n=n)
