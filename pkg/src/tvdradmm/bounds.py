"""
Closed-form constants of the regularized dual and the tracking radius.

All functions are pure. ``math.inf`` is used for condition numbers and
radii that do not exist (``epsilon = 0`` or a non-contractive schedule).
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class DualConstants:
    """Strong convexity, smoothness and drift bound of the regularized dual."""

    mu_bar: float
    ell_bar: float
    kappa_bar: float
    c0_bar: float
    norm_A: float
    epsilon: float

    @property
    def contractive(self):
        return self.mu_bar > 0


@dataclass(frozen=True)
class RateConstants:
    lam: float
    omega: float
    zeta_p: float
    zeta_c: float
    xi_p: float
    eta0: float
    eta1: float
    radius: float
    feasible: bool


def dual_constants(d_max, mu, c0=0.0, epsilon=0.0):
    """
    Constants of the dual function for local costs in ``S(mu, L)``.

    ``||A|| = sqrt(d_max)`` because ``A A'`` is block diagonal with blocks
    of all-ones matrices.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    if d_max < 1:
        raise ValueError("d_max must be at least 1")
    ell_bar = epsilon + d_max / mu
    kappa = ell_bar / epsilon if epsilon > 0 else math.inf
    return DualConstants(mu_bar=float(epsilon), ell_bar=float(ell_bar),
                         kappa_bar=kappa, c0_bar=math.sqrt(d_max) * c0 / mu,
                         norm_A=math.sqrt(d_max), epsilon=float(epsilon))


def prs_rate(rho, dc):
    """Lipschitz constant ``lam`` of the PRS operator and ``omega``."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    a, b = rho * dc.ell_bar, rho * dc.mu_bar
    lam = max(abs(1 - a) / (1 + a), abs(1 - b) / (1 + b))
    omega = (1 + a) / (1 + b)
    return lam, omega


def zeta(ell, lam, omega):
    return 1.0 if ell == 0 else omega * lam ** ell


def xi(ell, lam, omega):
    return 0.0 if ell == 0 else 1.0 + omega * lam ** ell


def optimal_rho(dc):
    """``1 / sqrt(mu_bar ell_bar)``, the minimizer of the PRS rate."""
    if dc.mu_bar <= 0:
        raise ValueError("optimal rho is undefined without regularization")
    return 1.0 / math.sqrt(dc.mu_bar * dc.ell_bar)


def tracking_radius(n_pred, n_corr, t_s, dc, rho):
    """
    Contraction factor ``eta1``, drift term ``eta0`` and asymptotic radius
    ``eta0 / (1 - eta1)`` of the prediction-correction dual sequence.

    The schedule is feasible iff ``eta1 < 1``; otherwise ``radius`` is
    ``inf``. Without regularization nothing contracts and the result is
    always infeasible.
    """
    if n_pred < 0 or n_corr < 0:
        raise ValueError("horizons must be non-negative")
    lam, omega = prs_rate(rho, dc)
    zp, zc = zeta(n_pred, lam, omega), zeta(n_corr, lam, omega)
    xp = xi(n_pred, lam, omega)
    kappa = dc.kappa_bar
    if math.isinf(kappa):
        return RateConstants(lam, omega, zp, zc, xp, math.inf, math.inf,
                             math.inf, False)
    eta1 = zc * (zp + 2 * kappa * xp)
    drift = dc.c0_bar * t_s / dc.mu_bar if t_s > 0 else 0.0
    eta0 = zc * drift * (zp + 2 * (1 + kappa * xp))
    feasible = eta1 < 1
    radius = eta0 / (1 - eta1) if feasible else math.inf
    return RateConstants(lam, omega, zp, zc, xp, eta0, eta1, radius, feasible)


def primal_radius(radius, norm_A, mu):
    """Primal counterpart ``(||A|| / mu) * radius`` of a dual bound."""
    return norm_A / mu * radius
