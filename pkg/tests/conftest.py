"""Shared generators for the property-based tests.

Random games are built forward: pick a plant and cost weights, run the
coupled-Riccati solver from a stabilizing seed, and keep the instances where
it converges.  Those gains are Nash by construction, which gives the inverse
pipeline known-good inputs.
"""

import numpy as np
import pytest

from nashinduce import (
    CostParameters,
    GameSystem,
    StrategyProfile,
    closed_loop,
    is_stabilizing,
    solve_coupled_are,
)
from nashinduce.numerics import solve_lyapunov


def random_psd(rng, n, rank=None):
    r = n if rank is None else rank
    C = rng.standard_normal((r, n))
    return C.T @ C


def random_pd(rng, n):
    return random_psd(rng, n) + (0.2 + rng.random()) * np.eye(n)


def bass_seed(A, B):
    """A stabilizing gain for a controllable pair, via a shifted Lyapunov solve."""
    n = A.shape[0]
    beta = float(np.linalg.norm(A, 2)) + 1.0
    X = solve_lyapunov(-(A + beta * np.eye(n)).T, 2.0 * B @ B.T)
    return B.T @ np.linalg.inv(X)


def random_game(rng, allow_unstable=True):
    """One random instance: (system, costs, seed_profile) or None on a dud draw."""
    n = int(rng.integers(1, 5))
    N = int(rng.integers(1, 3))
    ms = [int(rng.integers(1, 3)) for _ in range(N)]
    A = rng.standard_normal((n, n))
    Bs = []
    for m in ms:
        B = rng.standard_normal((n, min(m, n)))
        Bs.append(B)
    if allow_unstable and rng.random() < 0.5:
        Ball = np.hstack(Bs)
        try:
            Kall = bass_seed(A, Ball)
        except (ValueError, np.linalg.LinAlgError):
            return None
        Ks, r = [], 0
        for B in Bs:
            Ks.append(Kall[r:r + B.shape[1]])
            r += B.shape[1]
    else:
        shift = max(0.0, float(np.max(np.linalg.eigvals(A).real))) + 0.5
        A = A - shift * np.eye(n)
        Ks = [np.zeros((B.shape[1], n)) for B in Bs]
    if not is_stabilizing(GameSystem(A, Bs), Ks):
        return None
    Q = [random_psd(rng, n) + 0.1 * np.eye(n) for _ in range(N)]
    system = GameSystem(A, Bs)
    costs = CostParameters.identity_R(Q, system.m)
    seed = StrategyProfile.stabilizing(system, Ks)
    return system, costs, seed


def converged_nash_games(seed, count, max_attempts=400):
    """Yield (system, costs, profile, P) for games where the solver converged."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(max_attempts):
        if len(out) >= count:
            break
        drawn = random_game(rng)
        if drawn is None:
            continue
        system, costs, seed_prof = drawn
        try:
            profile, P, converged = solve_coupled_are(system, costs, seed_prof)
        except (ValueError, RuntimeError, np.linalg.LinAlgError):
            continue
        if not converged:
            continue
        if not is_stabilizing(system, profile.K):
            continue
        out.append((system, costs, profile, P))
    return out


@pytest.fixture(scope="session")
def nash_games():
    games = converged_nash_games(seed=20240817, count=50)
    assert len(games) >= 50, f"only {len(games)} converged games generated"
    return games
