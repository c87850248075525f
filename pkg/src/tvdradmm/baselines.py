"""
Comparison algorithms, both run in the same prediction-correction scheme.

* Gradient descent on the penalized problem
  ``f(x; t) + (1 / 2 alpha) x'(I - W)x``.
* Dual decomposition on ``min f(x; t)  s.t.  (I - W)x = 0``.

``W`` is a symmetric doubly stochastic mixing matrix, so both methods only
exchange data with graph neighbors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .costs import as_diagonal_batch, build_prediction
from .dradmm import SolverError, _newton, batch_minimize

DIVERGENCE = 1e8


class ParameterError(RuntimeError):
    """The iterates diverged; the step size is too large."""


@dataclass
class PenalizedProblem:
    W: np.ndarray
    alpha: float
    mu: float = 1.0
    ell: float = 1.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        self.W = np.asarray(self.W, dtype=float)
        self.laplacian = np.eye(len(self.W)) - self.W
        self.lap_max = float(np.linalg.eigvalsh(self.laplacian)[-1])

    @property
    def step(self):
        """``2 / (L_pen + mu)`` with ``L_pen = L + lambda_max(I - W) / alpha``."""
        return 2.0 / (self.ell + self.lap_max / self.alpha + self.mu)

    def penalty(self, x):
        return 0.5 / self.alpha * np.sum(x * (self.laplacian @ x))

    def gradient(self, costs, x):
        batch = as_diagonal_batch(costs)
        if batch is not None:
            gf = batch.gradient(x)
        else:
            gf = np.array([f.gradient(x[i]) for i, f in enumerate(costs)])
        return gf + self.laplacian @ x / self.alpha


@dataclass
class DualDecompState:
    x: np.ndarray
    w: np.ndarray


def _check(x, what):
    if not np.all(np.isfinite(x)) or np.linalg.norm(x) > DIVERGENCE:
        raise ParameterError(f"{what} diverged")


def gradient_steps(problem, costs, x, n_iters):
    """`n_iters` gradient steps on the penalized objective with static costs."""
    for _ in range(n_iters):
        x = x - problem.step * problem.gradient(costs, x)
        _check(x, "penalized gradient")
    return x


def pc_gradient_step(problem, costs, x, t, t_s, phase, n_iters):
    """
    One phase of the prediction-correction gradient method.

    ``phase='predict'`` builds Taylor models of ``f(.; t + t_s)`` at
    ``(x_i, t)`` and descends on them; ``phase='correct'`` descends on the
    observed ``f(.; t)``.
    """
    if phase == "predict":
        models = [build_prediction(f, x[i], t, t_s) for i, f in enumerate(costs)]
    elif phase == "correct":
        models = [f.at(t) for f in costs]
    else:
        raise ValueError(f"unknown phase {phase!r}")
    return gradient_steps(problem, models, x, n_iters)


def _minimize_linear(f, lin, x0, tol=1e-10, max_iter=50):
    x, res, _ = _newton(lambda x: f.value(x) + lin @ x,
                        lambda x: f.gradient(x) + lin,
                        lambda x: np.atleast_2d(f.hessian(x)),
                        x0, tol, max_iter,
                        scale=lambda x: np.linalg.norm(lin) + f.ell * np.linalg.norm(x))
    if not res <= tol:
        raise SolverError(f"dual decomposition x-update stalled at {res:.3e}",
                          residual=res)
    return x


def dual_decomp_iterations(W, costs, state, n_iters, step):
    """
    `n_iters` rounds of dual ascent on ``(I - W)x = 0``.

    Each round minimizes ``f_i(x_i) + <[(I - W) w]_i, x_i>`` locally, then
    updates ``w += step (I - W) x``.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    lap = np.eye(len(W)) - W
    x, w = state.x, state.w
    batch = as_diagonal_batch(costs)
    for _ in range(n_iters):
        lin = lap @ w
        if batch is not None:
            x, res = batch_minimize(batch, 0.0, -lin, x, 1e-10, 50)
            if not np.all(res <= 1e-10):
                raise SolverError("dual decomposition x-update stalled",
                                  residual=float(res.max()))
        else:
            x = np.array([_minimize_linear(f, lin[i], x[i])
                          for i, f in enumerate(costs)])
        w = w + step * lap @ x
        _check(w, "dual decomposition multipliers")
    return DualDecompState(x=x, w=w)


def pc_dualdecomp_step(W, costs, state, t, t_s, phase, n_iters, step):
    """One phase of the prediction-correction dual decomposition."""
    if phase == "predict":
        models = [build_prediction(f, state.x[i], t, t_s)
                  for i, f in enumerate(costs)]
    elif phase == "correct":
        models = [f.at(t) for f in costs]
    else:
        raise ValueError(f"unknown phase {phase!r}")
    return dual_decomp_iterations(W, models, state, n_iters, step)


def run_pc_gradient(problem, costs, n_pred, n_corr, t_s, horizon, x0=None,
                    on_step=None):
    """
    Whole run; returns the list of corrected iterates, one per period.

    ``on_step(k, t, x)`` is called after every correction, so callers keep
    the completed steps when a later one raises.
    """
    N, n = len(costs), costs[0].dim
    x = np.zeros((N, n)) if x0 is None else np.array(x0, dtype=float)
    out = []
    for k in range(horizon):
        t_k = k * t_s
        if n_pred:
            x = pc_gradient_step(problem, costs, x, t_k, t_s, "predict", n_pred)
        if n_corr:
            x = pc_gradient_step(problem, costs, x, t_k + t_s, t_s, "correct",
                                 n_corr)
        out.append(x.copy())
        if on_step is not None:
            on_step(k, t_k + t_s, x)
    return out


def run_pc_dualdecomp(W, costs, n_pred, n_corr, t_s, horizon, step, x0=None,
                      on_step=None):
    N, n = len(costs), costs[0].dim
    x = np.zeros((N, n)) if x0 is None else np.array(x0, dtype=float)
    s = DualDecompState(x=x, w=np.zeros((N, n)))
    out = []
    for k in range(horizon):
        t_k = k * t_s
        if n_pred:
            s = pc_dualdecomp_step(W, costs, s, t_k, t_s, "predict", n_pred,
                                   step)
        if n_corr:
            s = pc_dualdecomp_step(W, costs, s, t_k + t_s, t_s, "correct",
                                   n_corr, step)
        out.append(s.x.copy())
        if on_step is not None:
            on_step(k, t_k + t_s, s.x)
    return out
