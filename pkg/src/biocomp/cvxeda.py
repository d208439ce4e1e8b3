"""Convex decomposition of skin conductance into tonic and phasic components.

The model: the observed signal is the sum of a phasic component (a sparse
nonnegative sudomotor driver smoothed by a biexponential impulse response),
a tonic component (cubic B-spline with 10 s knot spacing plus a linear
trend), and a residual. Fitting minimizes

    0.5 * ||residual||^2  +  alpha * sum(driver)  +  0.5 * gamma * ||spline coefs||^2

subject to driver >= 0. The biexponential smoothing is discretized with the
bilinear transform, which turns the decomposition into a sparse quadratic
program. It is solved with a projected-Newton iteration: active driver
coordinates are pinned at zero, a Newton step is computed on the free set
through a sparse KKT factorization, and an Armijo search along the
projection arc guarantees the objective decreases at every iteration.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps
from scipy import sparse
from scipy.sparse.linalg import splu

from .errors import DecompositionError
from .ingest import ChannelKind, SampledSignal

# Tiny ridge on the driver. Makes the QP strictly convex (the smoothing
# operator is singular at Nyquist) without measurably moving the optimum.
_DRIVER_RIDGE = 1e-9


@dataclass(frozen=True)
class CvxEdaParams:
    """Decomposition parameters; defaults follow the published algorithm."""

    tau0: float = 2.0          # slow biexponential time constant (s)
    tau1: float = 0.7          # fast biexponential time constant (s)
    knot_s: float = 10.0       # tonic spline knot spacing (s)
    alpha: float = 8e-4        # l1 penalty on the driver
    gamma: float = 1e-2        # l2 penalty on spline coefficients
    max_iter: int = 200        # projected-Newton iteration cap
    kkt_tol: float = 1e-6      # convergence threshold on the KKT residual

    def __post_init__(self):
        if not (self.tau0 > self.tau1 > 0):
            raise ValueError(f"need tau0 > tau1 > 0, got {self.tau0}, {self.tau1}")
        if self.knot_s <= 0:
            raise ValueError("knot spacing must be positive")
        if self.alpha < 0 or self.gamma < 0:
            raise ValueError("penalties must be nonnegative")

    @classmethod
    def from_dict(cls, raw: dict) -> "CvxEdaParams":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in raw.items() if k in known})


@dataclass(frozen=True)
class EdaDecomposition:
    tonic: SampledSignal
    phasic: SampledSignal
    residual: SampledSignal
    driver: np.ndarray
    kkt_residual: float
    iterations: int
    objective_history: np.ndarray


def _bateman_arma(rate: float, tau0: float, tau1: float):
    """Bilinear-transform discretization of the biexponential smoother."""
    dt = 1.0 / rate
    a1 = 1.0 / min(tau1, tau0)
    a0 = 1.0 / max(tau1, tau0)
    ar = np.array(
        [
            (a1 * dt + 2.0) * (a0 * dt + 2.0),
            2.0 * a1 * a0 * dt**2 - 8.0,
            (a1 * dt - 2.0) * (a0 * dt - 2.0),
        ]
    ) / ((a1 - a0) * dt**2)
    ma = np.array([1.0, 2.0, 1.0])
    return ma, ar


def _spline_basis(n: int, rate: float, knot_s: float) -> sparse.csc_matrix:
    """Cubic B-spline regressors with knots every ``knot_s`` seconds."""
    dks = max(int(round(knot_s * rate)), 2)
    tri = np.r_[np.arange(1.0, dks), np.arange(float(dks), 0.0, -1.0)]
    spl = np.convolve(tri, tri, "full")
    spl /= spl.max()
    offsets = np.arange(-(len(spl) // 2), (len(spl) + 1) // 2)
    knots = np.arange(0, n, dks)
    rows = offsets[:, None] + knots[None, :]
    cols = np.tile(np.arange(len(knots)), (len(spl), 1))
    vals = np.tile(spl, (len(knots), 1)).T
    ok = (rows >= 0) & (rows < n)
    return sparse.csc_matrix((vals[ok], (rows[ok], cols[ok])), shape=(n, len(knots)))


def decompose_eda(eda: SampledSignal, params: CvxEdaParams | None = None) -> EdaDecomposition:
    """Split an EDA channel into tonic, phasic, and residual components.

    The returned components share the input's rate, length, and start time;
    they sum back to the input exactly. Raises DecompositionError (carrying
    the final KKT residual) if the solver does not reach ``kkt_tol`` within
    ``max_iter`` iterations.
    """
    if eda.channel_kind is not ChannelKind.EDA:
        raise ValueError(f"expected EDA, got {eda.channel_kind.value}")
    if len(eda.values) < 8:
        raise ValueError(f"need at least 8 samples, got {len(eda.values)}")
    params = params or CvxEdaParams()

    y = np.asarray(eda.values, dtype=float)
    n = len(y)
    rate = eda.sample_rate
    ma, ar = _bateman_arma(rate, params.tau0, params.tau1)

    # q is the driver passed through the AR part; phasic = M q, driver = A q.
    A = sparse.diags(
        [np.full(n, ar[0]), np.full(n - 1, ar[1]), np.full(n - 2, ar[2])],
        [0, -1, -2], format="csr",
    )
    M = sparse.diags(
        [np.full(n, ma[0]), np.full(n - 1, ma[1]), np.full(n - 2, ma[2])],
        [0, -1, -2], format="csc",
    )
    B = _spline_basis(n, rate, params.knot_s)
    n_spl = B.shape[1]
    t = np.arange(1.0, n + 1.0) / n
    C = np.c_[np.ones(n) / np.sqrt(n), t / np.linalg.norm(t)]
    n_trend = C.shape[1]

    phi = sparse.hstack([M, sparse.csc_matrix(C), B], format="csc")
    n_var = n + n_trend + n_spl
    reg = sparse.block_diag(
        [
            _DRIVER_RIDGE * (A.T @ A),
            sparse.csc_matrix((n_trend, n_trend)),
            params.gamma * sparse.identity(n_spl),
        ],
        format="csc",
    )
    P = (phi.T @ phi + reg).tocsc()
    lin = (
        np.concatenate([params.alpha * np.asarray(A.sum(axis=0)).ravel(), np.zeros(n_trend + n_spl)])
        - phi.T @ y
    )
    E = sparse.hstack([A, sparse.csc_matrix((n, n_trend + n_spl))], format="csr")

    def objective(x: np.ndarray) -> float:
        return 0.5 * float(x @ (P @ x)) + float(lin @ x)

    def driver_gradient(gq: np.ndarray) -> np.ndarray:
        # solves A^T gp = gq (time-reversed causal filter)
        return sps.lfilter([1.0], ar, gq[::-1])[::-1]

    def kkt_residual(p: np.ndarray, g: np.ndarray) -> float:
        gp = driver_gradient(g[:n])
        at_bound = p <= 1e-12  # complementarity slack below solver precision
        projected = np.where(at_bound & (gp > 0.0), 0.0, gp)
        tail = np.abs(g[n:]).max() if n_var > n else 0.0
        return max(float(np.abs(projected).max()), float(tail))

    x = np.zeros(n_var)
    p = np.zeros(n)
    history = [objective(x)]
    kkt = np.inf
    iterations = 0
    converged = False

    for iterations in range(1, params.max_iter + 1):
        g = P @ x + lin
        kkt = kkt_residual(p, g)
        if kkt <= params.kkt_tol:
            converged = True
            break

        gp = driver_gradient(g[:n])
        # near-bound coordinates with uphill gradients are pinned; the margin
        # shrinks with the residual so misclassified actives cannot stall
        eps_active = max(min(1e-4, 1e-3 * kkt), 1e-12)
        active = (p <= eps_active) & (gp > 0.0)
        E_active = E[active]
        kkt_mat = sparse.bmat([[P, E_active.T], [E_active, None]], format="csc")
        rhs = np.concatenate([-g, -p[active]])
        try:
            step = splu(kkt_mat).solve(rhs)[:n_var]
        except RuntimeError as exc:
            raise DecompositionError(
                f"sparse factorization failed: {exc}", kkt_residual=kkt, iterations=iterations
            ) from None

        def arc_search(direction_p, direction_tail, slope):
            trial_step = 1.0
            for _ in range(60):
                p_trial = np.maximum(p + trial_step * direction_p, 0.0)
                q_trial = sps.lfilter([1.0], ar, p_trial)  # q = A^{-1} p
                x_trial = np.concatenate([q_trial, x[n:] + trial_step * direction_tail])
                f_trial = objective(x_trial)
                if (
                    f_trial <= history[-1] + 1e-4 * trial_step * min(slope, 0.0)
                    and f_trial <= history[-1]
                ):
                    return x_trial, p_trial, f_trial
                trial_step *= 0.5
            return None

        hit = arc_search(E @ step, step[n:], float(g @ step))
        if hit is None:
            # Newton direction rejected: fall back to steepest descent along
            # the projection arc, which always makes progress away from a KKT point
            pg = np.where(active, 0.0, gp)
            hit = arc_search(-pg, -g[n:], -float(pg @ pg + g[n:] @ g[n:]))
        if hit is None:
            break
        x, p, f_new = hit
        history.append(f_new)

    if not converged:
        g = P @ x + lin
        kkt = kkt_residual(p, g)
        converged = kkt <= params.kkt_tol
    if not converged:
        raise DecompositionError(
            f"no convergence after {iterations} iterations (KKT residual {kkt:.3e}, "
            f"tolerance {params.kkt_tol:.1e})",
            kkt_residual=kkt,
            iterations=iterations,
        )

    q = x[:n]
    tonic_values = C @ x[n : n + n_trend] + B @ x[n + n_trend :]
    phasic_values = np.asarray(M @ q)
    residual_values = y - tonic_values - phasic_values

    make = eda.replace_values
    return EdaDecomposition(
        tonic=make(tonic_values),
        phasic=make(phasic_values),
        residual=make(residual_values),
        driver=p,
        kkt_residual=float(kkt),
        iterations=iterations,
        objective_history=np.array(history),
    )
