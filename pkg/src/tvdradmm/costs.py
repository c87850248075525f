"""
Time-varying local costs and the Taylor prediction builder.

Every cost exposes ``value``, ``gradient``, ``hessian`` and ``time_grad``
(the mixed derivative of the gradient in time), each taking ``(x, t)`` with
``x`` a 1-d array of length ``n``. The constants ``mu``, ``ell`` and ``c0``
are the strong-convexity modulus, the smoothness constant and a bound on
``time_grad``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit


class TimeVaryingCost:
    """Base class; subclasses implement the four oracles."""

    mu = None
    ell = None
    c0 = None
    dim = 1

    def value(self, x, t=0.0):
        raise NotImplementedError

    def gradient(self, x, t=0.0):
        raise NotImplementedError

    def hessian(self, x, t=0.0):
        raise NotImplementedError

    def time_grad(self, x, t=0.0):
        raise NotImplementedError

    def at(self, t):
        """The static cost ``x -> f(x; t)``."""
        return FrozenCost(self, t)


class FrozenCost(TimeVaryingCost):
    """A time-varying cost with its time argument pinned."""

    def __init__(self, cost, t):
        self.cost = cost
        self.t = float(t)
        self.mu, self.ell, self.c0 = cost.mu, cost.ell, 0.0
        self.dim = cost.dim

    def value(self, x, t=None):
        return self.cost.value(x, self.t)

    def gradient(self, x, t=None):
        return self.cost.gradient(x, self.t)

    def hessian(self, x, t=None):
        return self.cost.hessian(x, self.t)

    def time_grad(self, x, t=None):
        return np.zeros(self.dim)

    def at(self, t):
        return self.cost.at(t)


class QuadraticCost(TimeVaryingCost):
    """
    Static quadratic ``0.5 x'Hx + g'x + c``.

    ``mu`` and ``ell`` default to the extreme eigenvalues of `H`.
    """

    def __init__(self, H, g, c=0.0, mu=None, ell=None):
        H = np.atleast_2d(np.asarray(H, dtype=float))
        g = np.atleast_1d(np.asarray(g, dtype=float))
        if H.shape != (g.size, g.size):
            raise ValueError(f"H has shape {H.shape}, g has size {g.size}")
        if not np.allclose(H, H.T, atol=1e-12):
            raise ValueError("H must be symmetric")
        self.H, self.g, self.c = H, g, float(c)
        self.dim = g.size
        if mu is None or ell is None:
            eig = np.linalg.eigvalsh(H)
            mu = float(eig[0]) if mu is None else mu
            ell = float(eig[-1]) if ell is None else ell
        self.mu, self.ell = mu, ell
        self.c0 = 0.0

    def value(self, x, t=0.0):
        x = np.atleast_1d(x)
        return 0.5 * x @ self.H @ x + self.g @ x + self.c

    def gradient(self, x, t=0.0):
        return self.H @ np.atleast_1d(x) + self.g

    def hessian(self, x, t=0.0):
        return self.H

    def time_grad(self, x, t=0.0):
        return np.zeros(self.dim)

    def minimizer(self):
        return np.linalg.solve(self.H, -self.g)

    def at(self, t):
        return self


class QuadraticTrackingCost(TimeVaryingCost):
    """
    Quadratic with a moving center, ``0.5 (x - b(t))' H (x - b(t))``.

    The center moves as ``b(t) = amp * cos(freq * t + phase)`` (elementwise),
    so ``time_grad = -H db/dt`` and ``c0 = ||H|| * amp * |freq| * sqrt(n)``.
    At any fixed time the cost is exactly a `QuadraticCost`, which is what
    makes the regularized dual trajectory computable in closed form.
    """

    def __init__(self, H, amp, freq, phase, offset=0.0):
        self.H = np.atleast_2d(np.asarray(H, dtype=float))
        self.dim = self.H.shape[0]
        self.amp = float(amp)
        self.freq = float(freq)
        self.phase = np.broadcast_to(np.asarray(phase, dtype=float),
                                     (self.dim,)).copy()
        self.offset = np.broadcast_to(np.asarray(offset, dtype=float),
                                      (self.dim,)).copy()
        eig = np.linalg.eigvalsh(self.H)
        self.mu, self.ell = float(eig[0]), float(eig[-1])
        self.c0 = self.ell * abs(self.amp * self.freq) * np.sqrt(self.dim)

    def center(self, t):
        return self.offset + self.amp * np.cos(self.freq * t + self.phase)

    def center_rate(self, t):
        return -self.amp * self.freq * np.sin(self.freq * t + self.phase)

    def value(self, x, t=0.0):
        r = np.atleast_1d(x) - self.center(t)
        return 0.5 * r @ self.H @ r

    def gradient(self, x, t=0.0):
        return self.H @ (np.atleast_1d(x) - self.center(t))

    def hessian(self, x, t=0.0):
        return self.H

    def time_grad(self, x, t=0.0):
        return -self.H @ self.center_rate(t)

    def at(self, t):
        b = self.center(t)
        return QuadraticCost(self.H, -self.H @ b, 0.5 * b @ self.H @ b,
                             mu=self.mu, ell=self.ell)


class LogisticTrackingCost(TimeVaryingCost):
    """
    ``0.5 ||x - b(t)||^2 + sum(log(1 + exp(x - a)))`` with
    ``b(t) = amp * cos((nu - 1) t + phase)``.

    The logistic term has curvature at most 1/4, hence ``mu = 1`` and
    ``ell = 1.25``; ``c0 = amp * |nu - 1| * sqrt(n)`` bounds ``|db/dt|``.
    """

    def __init__(self, a, phase, amp=2.5, nu=np.pi / 80, dim=1):
        self.a = float(a)
        self.phase = float(phase)
        self.amp = float(amp)
        self.nu = float(nu)
        self.dim = int(dim)
        self.mu = 1.0
        self.ell = 1.25
        self.c0 = self.amp * abs(self.nu - 1) * np.sqrt(self.dim)

    def center(self, t):
        return self.amp * np.cos((self.nu - 1) * t + self.phase)

    def value(self, x, t=0.0):
        x = np.atleast_1d(x)
        r = x - self.center(t)
        return 0.5 * r @ r + np.sum(np.logaddexp(0.0, x - self.a))

    def gradient(self, x, t=0.0):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return x - self.center(t) + expit(x - self.a)

    def hessian(self, x, t=0.0):
        s = expit(np.atleast_1d(np.asarray(x, dtype=float)) - self.a)
        return np.diag(1.0 + s * (1.0 - s))

    def time_grad(self, x, t=0.0):
        w = self.nu - 1
        val = self.amp * w * np.sin(w * t + self.phase)
        return np.full(self.dim, val)

    def __repr__(self):
        return (f"LogisticTrackingCost(a={self.a:.4g}, phase={self.phase:.4g}, "
                f"amp={self.amp}, nu={self.nu:.4g})")


def build_prediction(f, x_k, t_k, t_s):
    """
    Quadratic model of ``f(.; t_k + t_s)`` from information at ``(x_k, t_k)``.

    The model gradient is the first-order Taylor expansion of the gradient
    in both ``x`` and ``t``::

        grad(x_k) + hess(x_k) (x - x_k) + t_s * time_grad(x_k)

    The offset is chosen so the model matches ``f(x_k; t_k)`` at ``x_k``.
    """
    x_k = np.atleast_1d(np.asarray(x_k, dtype=float))
    H = np.atleast_2d(f.hessian(x_k, t_k))
    g = f.gradient(x_k, t_k) - H @ x_k + t_s * f.time_grad(x_k, t_k)
    c = f.value(x_k, t_k) - 0.5 * x_k @ H @ x_k - g @ x_k
    return QuadraticCost(0.5 * (H + H.T), g, c, mu=f.mu, ell=f.ell)


def sample_experiment_costs(n_nodes, seed, amp=2.5, nu=np.pi / 80):
    """Draw ``a_i ~ U[-10, 10]`` and ``phase_i ~ U[0, 2 pi)`` per node."""
    if n_nodes < 1:
        raise ValueError("n_nodes must be positive")
    rng = np.random.default_rng(seed)
    a = rng.uniform(-10, 10, size=n_nodes)
    phi = rng.uniform(0, 2 * np.pi, size=n_nodes)
    return [LogisticTrackingCost(ai, pi, amp=amp, nu=nu)
            for ai, pi in zip(a, phi)]


class DiagonalBatch:
    """
    Coordinate-separable costs of all nodes, evaluated together.

    Row ``i`` holds node ``i``; the gradient is
    ``h * x + g + m * sigmoid(x - a)`` elementwise, which covers diagonal
    quadratics (``m = 0``) and frozen logistic tracking costs (``h = m = 1``,
    ``g = -b(t)``).
    """

    def __init__(self, h, g, m, a):
        self.h, self.g, self.m, self.a = h, g, m, a

    def gradient(self, X):
        return self.h * X + self.g + self.m * expit(X - self.a)

    def hessian_diag(self, X):
        s = expit(X - self.a)
        return self.h + self.m * s * (1.0 - s)


def _diag_terms(f):
    if isinstance(f, QuadraticCost):
        H = f.H
        if np.count_nonzero(H - np.diag(np.diag(H))):
            return None
        z = np.zeros(f.dim)
        return np.diag(H), f.g, z, z
    if isinstance(f, FrozenCost) and isinstance(f.cost, LogisticTrackingCost):
        c = f.cost
        one = np.ones(c.dim)
        return one, -c.center(f.t) * one, one, c.a * one
    return None


def as_diagonal_batch(costs):
    """A `DiagonalBatch` for `costs`, or None if any cost is not separable."""
    terms = [_diag_terms(f) for f in costs]
    if any(t is None for t in terms):
        return None
    if len({len(t[0]) for t in terms}) != 1:
        return None
    h, g, m, a = (np.array([t[j] for t in terms]) for j in range(4))
    return DiagonalBatch(h, g, m, a)
