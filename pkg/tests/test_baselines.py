import numpy as np
import pytest

from tvdradmm.baselines import (DualDecompState, ParameterError,
                                PenalizedProblem, dual_decomp_iterations,
                                gradient_steps, pc_dualdecomp_step,
                                pc_gradient_step, run_pc_dualdecomp,
                                run_pc_gradient)
from tvdradmm.costs import QuadraticCost, sample_experiment_costs
from tvdradmm.graph import build_random_geometric, metropolis_weights


def penalized_newton(costs, W, alpha, tol=1e-13):
    """Centralized Newton on f(x) + (1 / 2 alpha) x'(I - W)x, scalar nodes."""
    L = np.eye(len(W)) - W
    x = np.zeros(len(costs))
    for _ in range(100):
        g = np.array([f.gradient(x[i:i + 1])[0] for i, f in enumerate(costs)])
        g += L @ x / alpha
        if np.linalg.norm(g) < tol:
            break
        H = np.diag([f.hessian(x[i:i + 1])[0, 0] for i, f in enumerate(costs)])
        x -= np.linalg.solve(H + L / alpha, g)
    return x[:, None]


def instance(seed=0, N=10):
    g = build_random_geometric(N, 0.5, seed=seed)
    rng = np.random.default_rng(seed)
    costs = [QuadraticCost([[h]], [b]) for h, b in
             zip(rng.uniform(1, 2, N), rng.normal(size=N) * 3)]
    return g, metropolis_weights(g), costs


def test_penalty_nonnegative_and_zero_on_consensus():
    _, W, _ = instance()
    prob = PenalizedProblem(W, 0.1)
    rng = np.random.default_rng(0)
    for _ in range(10):
        assert prob.penalty(rng.normal(size=(len(W), 2))) >= -1e-14
    assert prob.penalty(np.ones((len(W), 2)) * 3.7) == pytest.approx(0, abs=1e-12)


def test_step_size():
    _, W, _ = instance()
    prob = PenalizedProblem(W, 0.5, mu=1.0, ell=2.0)
    lam = np.linalg.eigvalsh(np.eye(len(W)) - W)[-1]
    assert prob.step == pytest.approx(2 / (2.0 + lam / 0.5 + 1.0))


def test_gradient_fixed_point_identical_costs():
    _, W, _ = instance()
    N = len(W)
    costs = [QuadraticCost([[2.0]], [-3.0]) for _ in range(N)]
    x = np.full((N, 1), 1.5)
    out = gradient_steps(PenalizedProblem(W, 0.1, 2.0, 2.0), costs, x, 5)
    np.testing.assert_allclose(out, x, atol=1e-14)


def test_gradient_step_stays_at_penalized_optimum():
    _, W, costs = instance(1)
    x = penalized_newton(costs, W, 0.2)
    prob = PenalizedProblem(W, 0.2, 1.0, 2.0)
    np.testing.assert_allclose(gradient_steps(prob, costs, x, 1), x, atol=1e-12)


def test_gradient_converges_on_static_experiment():
    g = build_random_geometric(25, 0.35, seed=1)
    W = metropolis_weights(g)
    costs = [f.at(0.0) for f in sample_experiment_costs(25, 1)]
    prob = PenalizedProblem(W, 0.1, 1.0, 1.25)
    x = gradient_steps(prob, costs, np.zeros((25, 1)), 1000)
    np.testing.assert_allclose(x, penalized_newton(costs, W, 0.1), atol=1e-6)


def test_gradient_bias_shrinks_with_alpha():
    _, W, costs = instance(2)
    xs = np.linalg.solve(np.sum([f.H for f in costs], axis=0),
                         -np.sum([f.g for f in costs], axis=0))
    bias = [np.linalg.norm(penalized_newton(costs, W, a) - xs)
            for a in (0.04, 0.02, 0.01, 0.005)]
    assert all(b < a for a, b in zip(bias, bias[1:]))
    assert bias[-1] / bias[0] < 0.2


def test_gradient_divergence_detected():
    _, W, costs = instance(3)
    prob = PenalizedProblem(W, 0.1)
    prob_step = 5.0
    bad = type("Bad", (PenalizedProblem,), {"step": property(lambda s: prob_step)})
    with pytest.raises(ParameterError):
        gradient_steps(bad(W, 0.1), costs, np.ones((len(W), 1)), 500)
    with pytest.raises(ValueError):
        pc_gradient_step(prob, costs, np.zeros((len(W), 1)), 0, 0.1, "x", 1)


def test_dual_decomp_zero_multiplier_gives_local_minimizers():
    _, W, costs = instance(4)
    N = len(W)
    s = DualDecompState(np.zeros((N, 1)), np.zeros((N, 1)))
    out = dual_decomp_iterations(W, costs, s, 1, 0.5)
    np.testing.assert_allclose(out.x, [f.minimizer() for f in costs], atol=1e-10)


def test_dual_decomp_reaches_kkt_point():
    _, W, costs = instance(5)
    N = len(W)
    L = np.eye(N) - W
    H = np.diag([f.H[0, 0] for f in costs])
    gv = np.array([f.g[0] for f in costs])
    # H x + L w = -g, L x = 0; w is determined up to multiples of 1
    K = np.block([[H, L], [L, np.zeros((N, N))]])
    sol = np.linalg.lstsq(K, np.concatenate([-gv, np.zeros(N)]), rcond=None)[0]
    x_ref, w_ref = sol[:N], sol[N:]
    # classical step for the dual quadratic L H^-1 L
    eig = np.linalg.eigvalsh(L @ np.linalg.solve(H, L))
    step = 2 / (eig[1] + eig[-1])
    s = DualDecompState(np.zeros((N, 1)), np.zeros((N, 1)))
    s = dual_decomp_iterations(W, costs, s, 8000, step)
    np.testing.assert_allclose(s.x[:, 0], x_ref, atol=1e-6)
    np.testing.assert_allclose(L @ s.w[:, 0], L @ w_ref, atol=1e-6)
    assert np.linalg.norm(L @ s.x) <= 1e-8


def test_dual_decomp_consensus_violation_decreases_on_experiment():
    g = build_random_geometric(25, 0.35, seed=1)
    W = metropolis_weights(g)
    L = np.eye(25) - W
    costs = [f.at(0.0) for f in sample_experiment_costs(25, 1)]
    s = DualDecompState(np.zeros((25, 1)), np.zeros((25, 1)))
    viol = []
    for _ in range(300):
        s = dual_decomp_iterations(W, costs, s, 1, 1.0)
        viol.append(np.linalg.norm(L @ s.x))
    tail = viol[20:]
    assert all(b <= a * (1 + 1e-9) + 1e-14 for a, b in zip(tail, tail[1:]))


def test_dual_decomp_divergence_and_validation():
    _, W, costs = instance(6)
    N = len(W)
    s = DualDecompState(np.zeros((N, 1)), np.zeros((N, 1)))
    with pytest.raises(ParameterError):
        dual_decomp_iterations(W, costs, s, 2000, 50.0)
    with pytest.raises(ValueError):
        dual_decomp_iterations(W, costs, s, 1, 0.0)
    with pytest.raises(ValueError):
        pc_dualdecomp_step(W, costs, s, 0.0, 0.1, "y", 1, 1.0)


def test_runners_shapes_and_callbacks():
    g = build_random_geometric(8, 0.5, seed=2)
    W = metropolis_weights(g)
    costs = sample_experiment_costs(8, 2)
    seen = []
    out = run_pc_gradient(PenalizedProblem(W, 0.03, 1.0, 1.25), costs, 5, 5, 0.1,
                          12, on_step=lambda k, t, x: seen.append((k, t)))
    assert len(out) == 12 and out[0].shape == (8, 1)
    assert seen[-1] == (11, pytest.approx(1.2))
    out = run_pc_dualdecomp(W, costs, 5, 5, 0.1, 12, 1.0)
    assert len(out) == 12 and np.all(np.isfinite(out[-1]))
