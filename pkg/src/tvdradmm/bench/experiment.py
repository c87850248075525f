"""
Experiment execution: problem construction, per-step metrics, tuning.

All three algorithms of a comparison share one graph, one cost realization
and one reference trajectory ``x*(t_k)``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..baselines import (ParameterError, PenalizedProblem, run_pc_dualdecomp,
                         run_pc_gradient)
from ..bounds import dual_constants, tracking_radius
from ..costs import QuadraticTrackingCost, sample_experiment_costs
from ..dradmm import SolverError, SolverParams
from ..graph import build_random_geometric, load_edge_list, metropolis_weights
from ..oracle import solve_consensus, solve_regularized_saddle
from ..pcsched import PcConfig, run
from .config import validate

TAIL_FRACTION = 0.2
TUNE_GRID = np.logspace(-3, 0, 7)
METRIC_FIELDS = ("k", "t_k", "tracking_error", "consensus_distance",
                 "dual_distance", "comm_count")


@dataclass
class Problem:
    graph: object
    costs: list
    W: np.ndarray
    times: np.ndarray
    x_star: np.ndarray  # (K, n), one consensus point per step
    kind: str

    @property
    def mu(self):
        return min(c.mu for c in self.costs)

    @property
    def ell(self):
        return max(c.ell for c in self.costs)

    @property
    def c0(self):
        return float(max(c.c0 for c in self.costs))


@dataclass
class AlgoResult:
    name: str
    rows: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    error: str | None = None

    def column(self, key):
        return np.array([r[key] for r in self.rows], dtype=float)

    @property
    def tail_error(self):
        return tail_median(self.column("tracking_error"))

    @property
    def tail_consensus(self):
        return tail_median(self.column("consensus_distance"))


def n_workers():
    try:
        return max(1, int(os.environ.get("TVDRADMM_THREADS", "1")))
    except ValueError:
        return 1


def tail_median(values, fraction=TAIL_FRACTION):
    """Median over the last `fraction` of the entries (at least one)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return math.nan
    m = max(1, int(math.ceil(fraction * values.size)))
    return float(np.median(values[-m:]))


def build_costs(n_nodes, cc):
    if cc.kind == "logistic":
        return sample_experiment_costs(n_nodes, cc.seed, amp=cc.amp, nu=cc.nu)
    rng = np.random.default_rng(cc.seed)
    a = rng.uniform(-10, 10, size=n_nodes)
    phi = rng.uniform(0, 2 * np.pi, size=n_nodes)
    h = rng.uniform(1, cc.ell, size=n_nodes)
    return [QuadraticTrackingCost([[h[i]]], cc.amp, cc.nu - 1, phi[i],
                                  offset=a[i]) for i in range(n_nodes)]


def build_problem(cfg):
    """Graph, costs and reference trajectory for a `RunConfig`."""
    gc = cfg.graph
    if gc.edge_file:
        g = load_edge_list(gc.edge_file)
    else:
        g = build_random_geometric(gc.n_nodes, gc.radius, gc.seed)
    costs = build_costs(g.n_nodes, cfg.cost)
    K, t_s = cfg.algo.horizon, cfg.algo.t_s
    times = t_s * np.arange(1, K + 1)
    x_star = np.zeros((K, costs[0].dim))
    prev = None
    for k, t in enumerate(times):
        prev = solve_consensus([c.at(t) for c in costs], x0=prev)
        x_star[k] = prev
    return Problem(g, costs, metropolis_weights(g), times, x_star,
                   cfg.cost.kind)


def _row(k, t, x, x_star, n_nodes, comm, dual=None):
    return {"k": k + 1, "t_k": t,
            "tracking_error": float(np.linalg.norm(x - x_star) / n_nodes),
            "consensus_distance": float(np.linalg.norm(x - x.mean(axis=0))),
            "dual_distance": dual, "comm_count": int(comm)}


def _solver_params(a):
    return SolverParams(a.epsilon, a.rho, a.inner_tol, a.inner_max_iter)


def run_dradmm(problem, a):
    g, N = problem.graph, problem.graph.n_nodes
    res = AlgoResult("dradmm", params={"epsilon": a.epsilon, "rho": a.rho})
    p = _solver_params(a)
    pc = PcConfig(a.n_pred, a.n_corr, a.t_s, a.horizon)
    exact_dual = problem.kind == "quadratic"

    def on_step(k, t, s):
        dual = None
        if exact_dual:
            ref = solve_regularized_saddle(g, [c.at(t) for c in problem.costs],
                                           a.epsilon)
            dual = float(np.linalg.norm(s.w - ref.w))
        res.rows.append(_row(k, t, s.x, problem.x_star[k], N,
                             (a.n_pred + a.n_corr) * 2 * g.n_edges, dual))

    tr = run(g, problem.costs, pc, p, on_step=on_step)
    # the logged counts come from the engine's own counters
    for r, c in zip(res.rows, tr.comm):
        r["comm_count"] = int(np.sum(c))
    res.error = tr.error
    return res


def _run_baseline(problem, a, name, value):
    g, N = problem.graph, problem.graph.n_nodes
    iters = a.n_pred + a.n_corr
    key = "alpha" if name == "pc_gradient" else "step"
    res = AlgoResult(name, params={key: value})
    # gradient: one exchange of x per iteration; dual decomposition: x and w
    per_step = iters * 2 * g.n_edges * (1 if name == "pc_gradient" else 2)

    def on_step(k, t, x):
        res.rows.append(_row(k, t, x, problem.x_star[k], N, per_step))

    try:
        if name == "pc_gradient":
            prob = PenalizedProblem(problem.W, value, problem.mu, problem.ell)
            run_pc_gradient(prob, problem.costs, a.n_pred, a.n_corr, a.t_s,
                            a.horizon, on_step=on_step)
        else:
            run_pc_dualdecomp(problem.W, problem.costs, a.n_pred, a.n_corr,
                              a.t_s, a.horizon, value, on_step=on_step)
    except (ParameterError, SolverError) as e:
        res.error = f"step {len(res.rows)}: {e}"
    return res


def tune_baseline(problem, a, name, grid=TUNE_GRID):
    """
    Grid search of a baseline parameter for the smallest tail error.

    Returns ``(best_value, records)``; diverged points score ``inf``.
    """
    def point(v):
        r = _run_baseline(problem, a, name, float(v))
        err = math.inf if r.error or not r.rows else r.tail_error
        cons = math.inf if r.error or not r.rows else r.tail_consensus
        return {"algorithm": name, "value": float(v), "tail_tracking_error": err,
                "tail_consensus": cons,
                "status": "ok" if r.error is None else "diverged"}

    with ThreadPoolExecutor(max_workers=n_workers()) as ex:
        records = list(ex.map(point, grid))
    finite = [r for r in records if math.isfinite(r["tail_tracking_error"])]
    if not finite:
        raise ParameterError(f"{name}: every grid value diverged")
    best = min(finite, key=lambda r: r["tail_tracking_error"])["value"]
    return best, records


def run_algorithm(problem, cfg, name):
    """One algorithm on `problem`; baseline parameters are tuned if unset."""
    a = cfg.algo
    if name == "dradmm":
        return run_dradmm(problem, a)
    value = a.alpha if name == "pc_gradient" else a.step
    tuned = value is None
    if tuned and a.horizon == 0:
        # nothing to tune on; the run is empty anyway
        key = "alpha" if name == "pc_gradient" else "step"
        return AlgoResult(name, params={key: "auto", "tuned": False})
    if tuned:
        value, _ = tune_baseline(problem, a, name)
    res = _run_baseline(problem, a, name, value)
    res.params["tuned"] = tuned
    return res


def theory(problem, a):
    """``eta1`` and the dual tracking radius for the run's parameters."""
    if a.epsilon <= 0:
        return math.inf, math.inf
    dc = dual_constants(problem.graph.max_degree, problem.mu, problem.c0,
                        a.epsilon)
    rc = tracking_radius(a.n_pred, a.n_corr, a.t_s, dc, a.rho)
    return rc.eta1, rc.radius


def sweep(cfg, param, values, problem=None):
    """
    One ``dradmm`` run per value of `param`, same realization.

    Returns rows ``(value, tail_tracking_error, tail_consensus, eta1,
    theory_radius)`` and the first error message, if any.
    """
    if param not in ("epsilon", "rho", "n_pred", "n_corr", "t_s"):
        raise ValueError(f"cannot sweep {param!r}")
    cast = int if param in ("n_pred", "n_corr") else float
    configs = [cfg.replace_algo(**{param: cast(v)}) for v in values]
    for c in configs:
        validate(c)
    # a new sampling period changes the reference trajectory
    if problem is None and param != "t_s":
        problem = build_problem(cfg)

    def point(c):
        pb = build_problem(c) if param == "t_s" else problem
        r = run_dradmm(pb, c.algo)
        eta1, radius = theory(pb, c.algo)
        return {"value": getattr(c.algo, param),
                "tail_tracking_error": r.tail_error,
                "tail_consensus": r.tail_consensus, "eta1": eta1,
                "theory_radius": radius}, r.error

    with ThreadPoolExecutor(max_workers=n_workers()) as ex:
        out = list(ex.map(point, configs))
    rows = [r for r, _ in out]
    errors = [e for _, e in out if e]
    return rows, (errors[0] if errors else None)
