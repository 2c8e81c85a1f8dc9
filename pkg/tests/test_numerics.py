import numpy as np
import pytest

from nashinduce.numerics import (
    DimensionError,
    eig,
    is_hurwitz,
    is_pd,
    is_psd,
    kron,
    kron_sum,
    matrix_rank,
    nullspace,
    psd_project,
    psd_sqrt_factor,
    solve_lyapunov,
    sym_dim,
    sym_pack,
    sym_unpack,
    symmetrize,
    unvec,
    vec,
)


def test_vec_unvec_round_trip():
    rng = np.random.default_rng(0)
    M = rng.standard_normal((3, 5))
    assert np.array_equal(unvec(vec(M), 3, 5), M)


def test_vec_is_column_stacking():
    M = np.array([[1.0, 3.0], [2.0, 4.0]])
    assert np.array_equal(vec(M), np.array([1.0, 2.0, 3.0, 4.0]))


def test_vec_kron_identity():
    rng = np.random.default_rng(1)
    for _ in range(20):
        M = rng.standard_normal((3, 4))
        V = rng.standard_normal((4, 2))
        N = rng.standard_normal((2, 5))
        lhs = vec(M @ V @ N)
        rhs = kron(N.T, M) @ vec(V)
        assert np.linalg.norm(lhs - rhs) <= 1e-12 * max(1.0, np.linalg.norm(lhs))


def test_kron_sum_acts_like_sylvester_operator():
    rng = np.random.default_rng(2)
    for _ in range(20):
        A = rng.standard_normal((4, 4))
        N = rng.standard_normal((4, 4))
        V = rng.standard_normal((4, 4))
        lhs = kron_sum(N.T, A) @ vec(V)
        rhs = vec(A @ V + V @ N)
        assert np.linalg.norm(lhs - rhs) <= 1e-12 * max(1.0, np.linalg.norm(rhs))


def test_solve_lyapunov_residual():
    rng = np.random.default_rng(3)
    for _ in range(10):
        n = int(rng.integers(1, 6))
        A = rng.standard_normal((n, n))
        A -= (max(0.0, eig(A).real.max()) + 0.5) * np.eye(n)
        W = rng.standard_normal((n, n))
        W = W @ W.T
        P = solve_lyapunov(A, W)
        assert np.allclose(P, P.T)
        assert np.linalg.norm(P @ A + A.T @ P + W) <= 1e-8 * max(1.0, np.linalg.norm(W))
        assert is_psd(P)


def test_solve_lyapunov_rejects_unstable():
    with pytest.raises(ValueError):
        solve_lyapunov(np.array([[1.0]]), np.array([[1.0]]))


def test_is_hurwitz():
    assert is_hurwitz(np.array([[-1.0, 100.0], [0.0, -0.5]]))
    assert not is_hurwitz(np.array([[0.0]]))
    assert not is_hurwitz(np.diag([-1.0, 1e-3]))


def test_psd_checks():
    assert is_psd(np.zeros((2, 2)))
    assert is_psd(np.eye(2))
    assert not is_psd(np.diag([1.0, -1.0]))
    assert is_pd(np.eye(2))
    assert not is_pd(np.zeros((2, 2)))


def test_psd_project_floor():
    M = np.diag([2.0, -1.0])
    assert np.allclose(psd_project(M), np.diag([2.0, 0.0]))
    assert np.allclose(psd_project(M, floor=0.5), np.diag([2.0, 0.5]))


def test_psd_sqrt_factor():
    rng = np.random.default_rng(4)
    for r in range(0, 4):
        C0 = rng.standard_normal((r, 4))
        Q = C0.T @ C0
        C = psd_sqrt_factor(Q)
        assert C.shape == (r, 4)
        assert np.linalg.norm(C.T @ C - Q) <= 1e-9 * max(1.0, np.linalg.norm(Q))


def test_nullspace_and_rank():
    M = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]])
    Z = nullspace(M)
    assert Z.shape == (3, 2)
    assert np.linalg.norm(M @ Z) <= 1e-9
    assert matrix_rank(M) == 1


def test_sym_pack_is_isometric():
    rng = np.random.default_rng(5)
    for n in range(1, 5):
        M = rng.standard_normal((n, n))
        M = M + M.T
        v = sym_pack(M)
        assert v.size == sym_dim(n)
        assert abs(np.linalg.norm(v) - np.linalg.norm(M)) <= 1e-12 * np.linalg.norm(M)
        assert np.allclose(sym_unpack(v, n), M)


def test_symmetrize_rejects_asymmetric():
    with pytest.raises(ValueError):
        symmetrize(np.array([[0.0, 1.0], [0.0, 0.0]]), tol=1e-10)


def test_dimension_errors():
    with pytest.raises(DimensionError):
        unvec(np.zeros(5), 2, 3)
