import numpy as np
import pytest

from nashinduce import (
    CostParameters,
    GameSystem,
    StrategyProfile,
    coupled_are_residuals,
    equilibrium_cost,
    newton_kleinman,
    solve_coupled_are,
    verify_nash,
)
from nashinduce.numerics import DimensionError


def scalar_system():
    return GameSystem(np.array([[1.0]]), [np.array([[1.0]])])


def two_player_scalar():
    system = GameSystem(np.array([[1.0]]), [np.array([[1.0]]), np.array([[1.0]])])
    costs = CostParameters.identity_R([np.eye(1), np.eye(1)], system.m)
    return system, costs


def test_cost_parameters_validation():
    system = scalar_system()
    costs = CostParameters([np.array([[1.0]])], [[np.array([[1.0]])]])
    costs.validate(system)
    bad_q = CostParameters([np.array([[-1.0]])], [[np.array([[1.0]])]])
    with pytest.raises(ValueError):
        bad_q.validate(system)
    bad_r = CostParameters([np.array([[1.0]])], [[np.array([[0.0]])]])
    with pytest.raises(ValueError):
        bad_r.validate(system)


def test_verify_nash_scalar_closed_form():
    # a=1, b=1, k=3: ARE 2p - p^2 + q = 0 with stationarity p = k gives q = 3.
    system = scalar_system()
    prof = StrategyProfile.stabilizing(system, [np.array([[3.0]])])
    costs = CostParameters([np.array([[3.0]])], [[np.array([[1.0]])]])
    ok, cert = verify_nash(system, prof, costs)
    assert ok
    assert np.allclose(cert.P[0], [[3.0]], atol=1e-12)
    assert cert.hurwitz_margin > 0


def test_verify_nash_rejects_wrong_q():
    system = scalar_system()
    prof = StrategyProfile.stabilizing(system, [np.array([[3.0]])])
    costs = CostParameters([np.array([[2.7]])], [[np.array([[1.0]])]])
    ok, cert = verify_nash(system, prof, costs)
    assert not ok
    assert max(cert.are_residuals) > 1e-3


def test_verify_nash_two_player_scalar():
    system, costs = two_player_scalar()
    prof = StrategyProfile.stabilizing(
        system, [np.array([[1.0]]), np.array([[1.0]])])
    ok, cert = verify_nash(system, prof, costs)
    assert ok
    assert np.allclose(cert.P[0], [[1.0]], atol=1e-12)
    assert np.allclose(cert.P[1], [[1.0]], atol=1e-12)


def test_newton_kleinman_scalar():
    # Single-player LQR: p solves 2p - p^2 + 1 = 0, stabilizing root 1+sqrt(2).
    K, P = newton_kleinman(np.array([[1.0]]), np.array([[1.0]]),
                           np.eye(1), np.eye(1), np.array([[2.0]]))
    assert abs(P[0, 0] - (1.0 + np.sqrt(2.0))) <= 1e-10
    assert np.allclose(K, P)


def test_newton_kleinman_needs_stabilizing_seed():
    with pytest.raises(ValueError):
        newton_kleinman(np.array([[1.0]]), np.array([[1.0]]),
                        np.eye(1), np.eye(1), np.array([[0.5]]))


def test_newton_kleinman_matches_lyapunov_fixed_point():
    rng = np.random.default_rng(13)
    for _ in range(10):
        n, m = 3, 2
        A = rng.standard_normal((n, n))
        B = rng.standard_normal((n, m))
        Q = rng.standard_normal((n, n))
        Q = Q @ Q.T + 0.1 * np.eye(n)
        R = np.eye(m)
        beta = float(np.linalg.norm(A, 2)) + 1.0
        # crude stabilizing seed by eigenvalue shift
        from nashinduce.numerics import solve_lyapunov
        X = solve_lyapunov(-(A + beta * np.eye(n)).T, 2.0 * B @ B.T)
        K0 = B.T @ np.linalg.inv(X)
        K, P = newton_kleinman(A, B, Q, R, K0)
        res = Q + P @ A + A.T @ P - P @ B @ np.linalg.inv(R) @ B.T @ P
        assert np.linalg.norm(res) <= 1e-8 * max(1.0, np.linalg.norm(P))
        assert np.allclose(K, np.linalg.inv(R) @ B.T @ P)


def test_solve_coupled_are_two_player_scalar():
    # Symmetric solution: p solves 3p^2 - 2p - 1 = 0, stabilizing root p = 1.
    system, costs = two_player_scalar()
    seed = StrategyProfile.stabilizing(
        system, [np.array([[1.5]]), np.array([[1.5]])])
    profile, P, converged = solve_coupled_are(system, costs, seed)
    assert converged
    # The root is degenerate along the antisymmetric direction, so the
    # iterate is residual-accurate rather than gain-accurate.
    assert abs(profile.K[0][0, 0] - 1.0) <= 1e-3
    assert abs(profile.K[1][0, 0] - 1.0) <= 1e-3
    res = coupled_are_residuals(system, costs, profile.K, P)
    assert max(res) <= 1e-8
    ok, _ = verify_nash(system, profile, costs)
    assert ok


def test_solve_coupled_are_needs_stabilizing_seed():
    system, costs = two_player_scalar()
    seed = StrategyProfile([np.array([[0.2]]), np.array([[0.2]])])
    with pytest.raises(ValueError):
        solve_coupled_are(system, costs, seed)


def test_solve_coupled_are_random_games(nash_games):
    for system, costs, profile, P in nash_games[:10]:
        res = coupled_are_residuals(system, costs, profile.K, P)
        scale = max(1.0, max(np.linalg.norm(Pi) for Pi in P))
        assert max(res) <= 1e-8 * scale
        ok, _ = verify_nash(system, profile, costs)
        assert ok


def test_equilibrium_cost():
    P = np.array([[2.0, 1.0], [1.0, 2.0]])
    assert equilibrium_cost(P, [1.0, 1.0]) == pytest.approx(6.0)
    with pytest.raises(DimensionError):
        equilibrium_cost(P, [1.0])
