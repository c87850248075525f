"""
Ground-truth solvers.

`solve_consensus` gives the unregularized optimizer trajectory, for any
smooth strongly convex costs. `solve_regularized_saddle` gives the exact
primal/dual/auxiliary solution of the dual-regularized problem, for
quadratic costs, from one dense linear solve. For non-quadratic costs,
`solve_regularized_iterative` runs the ADMM to convergence instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from .dradmm import AdmmState, SolverError, _newton, distributed_sweep
from .graph import dense_A, dense_P


@dataclass
class OracleSolution:
    """
    Solution of the (regularized) consensus problem at one time.

    Arrays use the package layout: ``x`` is ``(N, n)``, the edge variables
    ``(2|E|, n)``. ``z`` is only filled when a penalty was given.
    """

    x: np.ndarray
    w: np.ndarray
    y: np.ndarray
    z: np.ndarray | None
    epsilon: float
    unique: bool
    residual: float
    rank: int
    size: int


def solve_consensus(costs, tol=1e-12, x0=None, max_iter=100):
    """
    Minimizer of ``sum_i f_i(x)`` by Newton's method.

    `costs` are static (already evaluated at the time of interest).
    """
    n = costs[0].dim
    start = np.zeros(n) if x0 is None else np.atleast_1d(x0)
    x, res, _ = _newton(
        lambda x: sum(f.value(x) for f in costs),
        lambda x: sum(f.gradient(x) for f in costs),
        lambda x: sum(np.atleast_2d(f.hessian(x)) for f in costs),
        start, tol, max_iter)
    if not res <= tol:
        # the aggregate gradient is a sum of N terms; allow for cancellation
        scale = max(1.0, sum(np.linalg.norm(f.gradient(x)) for f in costs))
        if not res <= tol * scale:
            raise SolverError(f"consensus Newton stalled at {res:.3e}",
                              residual=res)
    return x


def solve_consensus_bisection(costs, lo=-1e3, hi=1e3, tol=1e-13):
    """Scalar-only reference: bisection on the aggregate derivative."""
    def d(x):
        return sum(float(f.gradient(np.array([x]))[0]) for f in costs)
    if d(lo) > 0 or d(hi) < 0:
        raise ValueError("bracket does not contain the minimizer")
    while hi - lo > tol * max(1.0, abs(lo)):
        mid = 0.5 * (lo + hi)
        if d(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _quad_data(costs):
    H = block_diag(*[np.atleast_2d(f.H) for f in costs])
    gvec = np.concatenate([f.g for f in costs])
    return H, gvec


def saddle_matrix(g, costs, epsilon):
    """
    KKT matrix in the unknowns ``(x, w, y)``::

        H x - A'w         = -g
        A x + eps w - y   = 0
        (I+P) w + (I-P) y = 0

    The last block row forces ``Pw = -w`` and ``Py = y``, since the two
    terms live in orthogonal subspaces.
    """
    n = costs[0].dim
    H, gvec = _quad_data(costs)
    A, P = dense_A(g, n), dense_P(g, n)
    m, d = A.shape
    I = np.eye(m)
    K = np.block([
        [H, -A.T, np.zeros((d, m))],
        [A, epsilon * I, -I],
        [np.zeros((m, d)), I + P, I - P],
    ])
    rhs = np.concatenate([-gvec, np.zeros(2 * m)])
    return K, rhs


def solve_regularized_saddle(g, costs, epsilon, rho=None, tol=1e-9):
    """
    Exact solution of the dual-regularized problem for quadratic costs.

    Parameters
    ----------
    g : Graph
    costs : sequence of QuadraticCost
    epsilon : float
        Dual regularization, ``>= 0``. At zero the dual solution set is an
        affine subspace and the minimum-norm element is returned, with
        ``unique=False``.
    rho : float, optional
        ADMM penalty; when given the fixed point
        ``z = (1 + eps rho) w + rho A x`` is also returned.
    tol : float
        Bound on the KKT residual; exceeded only for a numerically singular
        system, which raises.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    N, n = g.n_nodes, costs[0].dim
    K, rhs = saddle_matrix(g, costs, epsilon)
    rank = np.linalg.matrix_rank(K)
    unique = rank == K.shape[0]
    if unique:
        sol = np.linalg.solve(K, rhs)
    else:
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    res = float(np.linalg.norm(K @ sol - rhs))
    if res > tol * max(1.0, np.linalg.norm(rhs)):
        raise SolverError(f"saddle system residual {res:.3e}", residual=res)

    d, m = N * n, g.n_slots * n
    x = sol[:d].reshape(N, n)
    w = sol[d:d + m].reshape(-1, n)
    y = sol[d + m:].reshape(-1, n)
    z = None
    if rho is not None:
        z = (1 + epsilon * rho) * w + rho * x[g.slot_src]
    return OracleSolution(x=x, w=w, y=y, z=z, epsilon=float(epsilon),
                          unique=bool(unique), residual=res, rank=int(rank),
                          size=K.shape[0])


def solve_regularized_iterative(g, costs, p, max_iter=10_000, tol=1e-12,
                                state=None):
    """
    Regularized solution for general costs: ADMM run to a fixed point.

    Stops when successive ``z`` differ by at most `tol` (relative to
    ``max(1, ||z||)``). Returns the final `AdmmState`.
    """
    s = AdmmState.cold(g, costs[0].dim) if state is None else state
    for _ in range(max_iter):
        s_new = distributed_sweep(g, costs, s, p, workers=1)
        step = np.linalg.norm(s_new.z - s.z)
        s = s_new
        if step <= tol * max(1.0, np.linalg.norm(s.z)):
            break
    return s


def dual_hessian(g, costs, epsilon):
    """Regularized dual Hessian ``eps I + A H^-1 A'`` (quadratic costs)."""
    n = costs[0].dim
    H, _ = _quad_data(costs)
    A = dense_A(g, n)
    return epsilon * np.eye(A.shape[0]) + A @ np.linalg.solve(H, A.T)


def regularization_gap(g, costs, eps_grid):
    """
    Distance between regularized and unregularized duals over `eps_grid`.

    Returns a dict with the grid, ``gap = ||w(eps) - w0||`` (``w0`` the
    minimum-norm unregularized dual), ``w_norm = ||w(eps)||``, the primal
    gap ``||x(eps) - x(0)||`` and ``psi_hat``, the smallest ``psi >= 0``
    with ``gap <= (1 + psi eps) w_norm`` at every grid point (``inf`` if
    none exists).
    """
    eps_grid = np.asarray(eps_grid, dtype=float)
    if np.any(eps_grid <= 0):
        raise ValueError("eps_grid must be positive")
    ref = solve_regularized_saddle(g, costs, 0.0)
    gap, wn, xgap = [], [], []
    for eps in eps_grid:
        sol = solve_regularized_saddle(g, costs, eps)
        gap.append(np.linalg.norm(sol.w - ref.w))
        wn.append(np.linalg.norm(sol.w))
        xgap.append(np.linalg.norm(sol.x - ref.x))
    gap, wn, xgap = map(np.array, (gap, wn, xgap))

    with np.errstate(divide="ignore", invalid="ignore"):
        need = np.where(gap <= wn, 0.0, (gap / wn - 1.0) / eps_grid)
    need = np.where((wn == 0) & (gap > 0), np.inf, need)
    psi = float(max(0.0, np.max(need))) if need.size else 0.0
    return {"epsilon": eps_grid, "gap": gap, "w_norm": wn, "x_gap": xgap,
            "w0_norm": float(np.linalg.norm(ref.w)), "psi_hat": psi}
