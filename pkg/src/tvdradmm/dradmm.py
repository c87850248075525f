"""
Dual-regularized ADMM: distributed message form and centralized PRS form.

One iteration of the distributed form, for every node ``i`` and neighbor
``j``::

    x_i  = argmin f_i(x) + (rho delta d_i / 2) ||x||^2 - delta <x, sum_j z_ij>
    z_ij = (1 - 2 delta) z_ji + 2 delta rho x_j

with ``delta = 1 / (1 + epsilon rho)``. Setting ``epsilon = 0`` gives the
standard Peaceman-Rachford ADMM, ``z_ij = -z_ji + 2 rho x_j``. The sign of
the first coefficient is the one that makes the message form coincide with
the centralized recursion; the opposite sign diverges.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .costs import as_diagonal_batch
from .graph import apply_A_transpose, dense_A, dense_P


class SolverError(RuntimeError):
    """Inner Newton solve failed; carries the residual and node index."""

    def __init__(self, msg, residual=np.nan, node=None):
        super().__init__(msg)
        self.residual = residual
        self.node = node


@dataclass(frozen=True)
class SolverParams:
    epsilon: float = 1e-3
    rho: float = 1.0
    inner_tol: float = 1e-10
    inner_max_iter: int = 50

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.rho <= 0:
            raise ValueError("rho must be positive")

    @property
    def delta(self):
        return 1.0 / (1.0 + self.epsilon * self.rho)


@dataclass
class AdmmState:
    """
    Iterate of the ADMM.

    ``z`` holds the auxiliary variables (one row per directed slot), ``x``
    the local minimizers computed from the previous ``z`` and ``w`` the
    duals recovered from that same pair. ``comm`` counts the packets sent by
    each node so far.
    """

    z: np.ndarray
    x: np.ndarray
    w: np.ndarray | None = None
    comm: np.ndarray | None = None
    y: np.ndarray | None = field(default=None, repr=False)
    u: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def cold(cls, g, dim=1, x0=None):
        x = np.zeros((g.n_nodes, dim)) if x0 is None else \
            np.array(x0, dtype=float).reshape(g.n_nodes, dim)
        return cls(z=np.zeros((g.n_slots, dim)), x=x,
                   comm=np.zeros(g.n_nodes, dtype=int))

    def copy(self):
        return replace(self, **{k: (None if v is None else np.array(v))
                                for k, v in vars(self).items()})


def _n_workers():
    try:
        return max(1, int(os.environ.get("TVDRADMM_THREADS", "1")))
    except ValueError:
        return 1


def _newton(fun, grad, hess, x0, tol, max_iter, scale=None):
    """
    Damped Newton with Armijo backtracking.

    Stops once ``||grad|| <= tol * max(1, scale(x))``, where the optional
    `scale` measures the size of the terms making up the gradient. A full
    step is taken whenever it shrinks the gradient norm (at least one step
    is always taken, so warm starts do not freeze), which is always the
    case close to the optimum where objective differences drown in
    round-off. Returns ``(x, residual, iterations)`` with the residual
    divided by the scale.
    """
    x = np.array(x0, dtype=float)
    gx = grad(x)
    res = np.linalg.norm(gx)
    for it in range(max_iter):
        sc = 1.0 if scale is None else max(1.0, scale(x))
        if it > 0 and res <= tol * sc:
            return x, res / sc, it
        dx = -np.linalg.solve(hess(x), gx)
        xn = x + dx
        gn = grad(xn)
        if not np.linalg.norm(gn) < res:
            fx, slope, step = fun(x), gx @ dx, 0.5
            while step > 1e-10 and \
                    fun(x + step * dx) > fx + 1e-4 * step * slope:
                step *= 0.5
            xn = x + step * dx
            gn = grad(xn)
        x, gx = xn, gn
        res = np.linalg.norm(gx)
    sc = 1.0 if scale is None else max(1.0, scale(x))
    return x, res / sc, max_iter


def local_x_update(f_i, z_sum, d_i, p, x0=None):
    """
    Local primal update of node ``i``.

    Minimizes ``f_i(x) + (rho delta d_i / 2)||x||^2 - delta <x, z_sum>`` by
    damped Newton until the gradient norm is at most ``p.inner_tol`` times
    ``max(1, ||hess|| ||x|| + ||delta z_sum||)``, the size of the gradient's
    terms; an absolute threshold is below round-off once ``rho`` is large.

    Raises
    ------
    SolverError
        If Newton does not reach the tolerance in ``p.inner_max_iter`` steps.
    """
    z_sum = np.atleast_1d(np.asarray(z_sum, dtype=float))
    c = p.rho * p.delta * d_i
    lin = p.delta * z_sum
    eye = np.eye(z_sum.size)

    def fun(x):
        return f_i.value(x) + 0.5 * c * x @ x - lin @ x

    def grad(x):
        return f_i.gradient(x) + c * x - lin

    def hess(x):
        return np.atleast_2d(f_i.hessian(x)) + c * eye

    start = np.zeros_like(z_sum) if x0 is None else x0
    x, res, _ = _newton(fun, grad, hess, start, p.inner_tol, p.inner_max_iter,
                        scale=lambda x: np.linalg.norm(hess(x))
                        * np.linalg.norm(x) + np.linalg.norm(lin))
    if not res <= p.inner_tol:
        raise SolverError(f"local update did not converge (residual {res:.3e})",
                          residual=res)
    return x


def batch_minimize(batch, c, lin, x0, tol, max_iter):
    """
    Minimize ``f_i(x_i) + (c_i / 2)||x_i||^2 - <lin_i, x_i>`` for all rows.

    Vectorized Newton for a `DiagonalBatch`: each coordinate is a scalar
    strongly convex problem. A step is halved wherever it fails to shrink the
    derivative. Returns ``(X, residuals)`` with residuals relative to the
    size of the gradient's terms, row by row.
    """
    X = np.array(x0, dtype=float)

    def grad(X):
        return batch.gradient(X) + c * X - lin

    def scale(X):
        hx = np.abs(batch.hessian_diag(X) + c) * np.abs(X)
        return np.maximum(1.0, np.sqrt(np.sum(hx ** 2 + lin ** 2, axis=1)))

    G = grad(X)
    for it in range(max_iter):
        res = np.linalg.norm(G, axis=1) / scale(X)
        if it > 0 and np.all(res <= tol):
            return X, res
        D = -G / (batch.hessian_diag(X) + c)
        step = np.ones_like(X)
        for _ in range(40):
            Xn = X + step * D
            Gn = grad(Xn)
            bad = np.abs(Gn) >= np.abs(G)
            bad &= np.abs(G) > 0
            if not bad.any():
                break
            step = np.where(bad, 0.5 * step, step)
        X, G = Xn, Gn
    return X, np.linalg.norm(G, axis=1) / scale(X)


def z_update(z_ji, x_j, p):
    """``z_ij+ = (1 - 2 delta) z_ji + 2 delta rho x_j`` (vectorizes over slots)."""
    d = p.delta
    return (1 - 2 * d) * np.asarray(z_ji) + 2 * d * p.rho * np.asarray(x_j)


def recover_duals(x_i, z_ij, p):
    """Dual of every constraint ``x_i = y_ij``: ``delta (z_ij - rho x_i)``."""
    return p.delta * (np.asarray(z_ij) - p.rho * np.asarray(x_i))


def distributed_sweep(g, costs, s, p, workers=None):
    """
    One synchronous iteration of the message-passing ADMM.

    All local updates read the incoming ``z``; after the barrier every slot
    ``(i, j)`` is refreshed from what node ``j`` sent. Node ``i`` sends
    ``d_i`` packets.

    Parameters
    ----------
    g : Graph
    costs : sequence
        Per-node static costs (``value``/``gradient``/``hessian`` in ``x``).
    s : AdmmState
    p : SolverParams
    workers : int, optional
        Thread count for the local updates; defaults to ``TVDRADMM_THREADS``.
        The result does not depend on it. Coordinate-separable costs skip
        the threads and are updated in one vectorized Newton solve.
    """
    z = s.z
    z_sums = apply_A_transpose(g, z)

    def update(i):
        try:
            return local_x_update(costs[i], z_sums[i], g.degrees[i], p,
                                  x0=s.x[i])
        except SolverError as e:
            raise SolverError(f"node {i}: {e}", e.residual, node=i) from e

    batch = as_diagonal_batch(costs)
    workers = _n_workers() if workers is None else workers
    if batch is not None:
        c = (p.rho * p.delta * g.degrees)[:, None]
        x, res = batch_minimize(batch, c, p.delta * z_sums, s.x,
                                p.inner_tol, p.inner_max_iter)
        if not np.all(res <= p.inner_tol):
            i = int(np.argmax(res))
            raise SolverError(f"node {i}: local update did not converge "
                              f"(residual {res[i]:.3e})", res[i], node=i)
    elif workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            x = np.array(list(ex.map(update, range(g.n_nodes))))
    else:
        x = np.array([update(i) for i in range(g.n_nodes)])

    w = recover_duals(x[g.slot_src], z, p)
    # slot (i, j) receives z_ji and x_j from node j
    z_new = z_update(z[g.slot_rev], x[g.slot_dst], p)
    comm = (np.zeros(g.n_nodes, dtype=int) if s.comm is None else s.comm) \
        + g.degrees
    return AdmmState(z=z_new, x=x, w=w, comm=comm)


def centralized_sweep(g, costs, s, p):
    """
    One iteration of the centralized recursion, with dense ``A`` and ``P``.

    The primal step minimizes ``f(x) + (rho delta / 2)||Ax - z/rho||^2``
    jointly over the stacked vector, then::

        w = delta (z - rho A x)
        y = -(I + P)(2w - z) / (2 rho)
        u = 2w - z + rho y
        z+ = z + 2(u - w)

    Used as the reference for `distributed_sweep`.
    """
    N, n = s.x.shape
    A, P = dense_A(g, n), dense_P(g, n)
    zf = s.z.reshape(-1)
    rd = p.rho * p.delta

    def fun(xf):
        xb = xf.reshape(N, n)
        r = A @ xf - zf / p.rho
        return sum(costs[i].value(xb[i]) for i in range(N)) + 0.5 * rd * r @ r

    def grad(xf):
        xb = xf.reshape(N, n)
        gf = np.concatenate([costs[i].gradient(xb[i]) for i in range(N)])
        return gf + rd * A.T @ (A @ xf - zf / p.rho)

    def hess(xf):
        xb = xf.reshape(N, n)
        H = np.zeros((N * n, N * n))
        for i in range(N):
            H[i * n:(i + 1) * n, i * n:(i + 1) * n] = costs[i].hessian(xb[i])
        return H + rd * A.T @ A

    xf, res, _ = _newton(fun, grad, hess, s.x.reshape(-1), p.inner_tol,
                         p.inner_max_iter,
                         scale=lambda xf: np.linalg.norm(hess(xf), 2)
                         * np.linalg.norm(xf) + rd * np.linalg.norm(zf) / p.rho)
    if not res <= p.inner_tol:
        raise SolverError(f"centralized update did not converge "
                          f"(residual {res:.3e})", residual=res)

    I = np.eye(A.shape[0])
    w = p.delta * (zf - p.rho * A @ xf)
    v = 2 * w - zf
    y = -(I + P) @ v / (2 * p.rho)
    u = v + p.rho * y
    z_new = zf + 2 * (u - w)

    m = g.n_slots
    comm = (np.zeros(N, dtype=int) if s.comm is None else s.comm) + g.degrees
    return AdmmState(z=z_new.reshape(m, n), x=xf.reshape(N, n),
                     w=w.reshape(m, n), comm=comm,
                     y=y.reshape(m, n), u=u.reshape(m, n))


def run_static(g, costs, p, n_iter, state=None, sweep=distributed_sweep):
    """Run `n_iter` sweeps on a fixed problem; returns the list of states."""
    dim = costs[0].dim
    s = AdmmState.cold(g, dim) if state is None else state
    out = []
    for _ in range(n_iter):
        s = sweep(g, costs, s, p)
        out.append(s)
    return out


def kkt_residual(g, costs, s):
    """``||grad f(x) - A' w||`` for a state's matched ``(x, w)`` pair."""
    gf = np.array([costs[i].gradient(s.x[i]) for i in range(g.n_nodes)])
    return np.linalg.norm(gf - apply_A_transpose(g, s.w))

