"""
Prediction-correction driver for the dual-regularized ADMM.

Each sampling period the nodes (1) build a quadratic model of their next
cost from what they know at ``t_k`` and run ``n_pred`` ADMM sweeps on it,
then (2) observe the true cost at ``t_{k+1}`` and run ``n_corr`` sweeps,
warm-starting every phase from the ``z`` left by the previous one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .costs import build_prediction
from .dradmm import AdmmState, SolverError, distributed_sweep

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PcConfig:
    n_pred: int = 5
    n_corr: int = 5
    t_s: float = 0.1
    horizon: int = 1000

    def __post_init__(self):
        if self.n_pred < 0 or self.n_corr < 0:
            raise ValueError("n_pred and n_corr must be non-negative")
        if self.n_pred == 0 and self.n_corr == 0:
            raise ValueError("n_pred and n_corr cannot both be zero")
        if self.t_s <= 0:
            raise ValueError("t_s must be positive")
        if self.horizon < 0:
            raise ValueError("horizon must be non-negative")


@dataclass
class PcTrace:
    """
    Per-step record. Entry ``k`` is the state after the correction at
    ``t[k] = (k + 1) t_s``; ``comm[k]`` is the per-node packet count spent
    in that step. ``error`` is set when the run stopped early.
    """

    t: list = field(default_factory=list)
    x: list = field(default_factory=list)
    z: list = field(default_factory=list)
    w: list = field(default_factory=list)
    x_pred: list = field(default_factory=list)
    comm: list = field(default_factory=list)
    error: str | None = None

    def __len__(self):
        return len(self.t)


def _sweeps(g, costs, s, p, n):
    for _ in range(n):
        s = distributed_sweep(g, costs, s, p)
    return s


def predict_phase(g, costs, state, t_k, cfg, p):
    """
    Prediction at ``t_k``: local Taylor models, then ``cfg.n_pred`` sweeps.

    Returns `state` itself when ``n_pred == 0``.
    """
    if cfg.n_pred == 0:
        return state
    models = [build_prediction(f, state.x[i], t_k, cfg.t_s)
              for i, f in enumerate(costs)]
    return _sweeps(g, models, state, p, cfg.n_pred)


def correct_phase(g, costs, state, t_next, cfg, p):
    """Correction on the observed costs at ``t_next``, ``cfg.n_corr`` sweeps."""
    if cfg.n_corr == 0:
        return state
    observed = [f.at(t_next) for f in costs]
    return _sweeps(g, observed, state, p, cfg.n_corr)


def run(g, costs, cfg, p, x0=None, t0=0.0, state=None, on_step=None):
    """
    Run the prediction-correction ADMM over ``cfg.horizon`` periods.

    Parameters
    ----------
    g : Graph
    costs : sequence of TimeVaryingCost
        One per node.
    cfg : PcConfig
    p : SolverParams
    x0 : ndarray, optional
        Initial local iterates, ``(N, n)``; zero by default. ``z`` always
        starts at zero unless `state` is given.
    state : AdmmState, optional
        Full initial state (overrides `x0`).
    on_step : callable, optional
        ``on_step(k, t, state)`` after every correction.

    Returns
    -------
    PcTrace
        On a solver failure the trace holds the completed steps and
        ``error`` describes the failure.
    """
    dim = costs[0].dim
    s = state if state is not None else AdmmState.cold(g, dim, x0)
    if s.comm is None:
        s.comm = np.zeros(g.n_nodes, dtype=int)
    tr = PcTrace()
    for k in range(cfg.horizon):
        t_k = t0 + k * cfg.t_s
        t_next = t_k + cfg.t_s
        sent = s.comm.copy()
        try:
            s_hat = predict_phase(g, costs, s, t_k, cfg, p)
            s = correct_phase(g, costs, s_hat, t_next, cfg, p)
        except SolverError as e:
            tr.error = f"step {k}: {e}"
            log.warning("run stopped: %s", tr.error)
            break
        tr.t.append(t_next)
        tr.x.append(s.x.copy())
        tr.z.append(s.z.copy())
        tr.w.append(None if s.w is None else s.w.copy())
        tr.x_pred.append(s_hat.x.copy())
        tr.comm.append(s.comm - sent)
        if on_step is not None:
            on_step(k, t_next, s)
    return tr
