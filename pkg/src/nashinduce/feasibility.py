"""Time-domain convex feasibility oracle for the inducing-parameter set.

The set of tuples (Q_i, R_ii, P_i) that make a target profile Nash is a
convex cone cut out by a Riccati identity, a stationarity identity and
semidefiniteness constraints.  This module checks membership, assembles the
Kronecker-vectorized linear system whose nullspace carries the identities,
searches the cone by alternating projections, projects reference costs onto
the feasible set (Dykstra), and folds/unfolds cross-control penalties.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forward import CostParameters, state_weight_with_cross_terms
from .numerics import (
    DimensionError,
    is_pd,
    is_psd,
    kron,
    kron_sum,
    psd_project,
    solve_lyapunov,
    sym_pack,
    sym_unpack,
    unvec,
    vec,
)
from .realization import GameSystem, StrategyProfile, closed_loop

R_FLOOR = 1e-6
PROJECTION_CAP = 10_000
PROJECTION_TOL = 1e-10


@dataclass(frozen=True)
class ThetaPoint:
    """A candidate tuple (costs, P_1..P_N) for the feasibility constraints."""

    costs: CostParameters
    P: tuple

    def __init__(self, costs: CostParameters, P):
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "P", tuple(np.asarray(Pi, dtype=float) for Pi in P))

    def scaled(self, alpha: float) -> "ThetaPoint":
        return ThetaPoint(self.costs.scaled(alpha), [alpha * Pi for Pi in self.P])


@dataclass(frozen=True)
class MembershipReport:
    member: bool
    are_residuals: tuple
    stationarity_residuals: tuple
    cone_ok: tuple  # per player: (Q psd, R_ii pd, R_ij psd, P psd)


def check_membership(pt: ThetaPoint, system: GameSystem, profile: StrategyProfile,
                     tol: float = 1e-8) -> MembershipReport:
    """Evaluate every constraint row with residual norms."""
    N = system.num_players
    Acl = closed_loop(system, profile.K)
    are_res, stat_res, cones = [], [], []
    scale = max(1.0, max(float(np.linalg.norm(Pi)) for Pi in pt.P))
    for i in range(N):
        Pi = 0.5 * (pt.P[i] + pt.P[i].T)
        acc = pt.costs.Q[i] + Pi @ Acl + Acl.T @ Pi
        for j in range(N):
            acc += profile.K[j].T @ pt.costs.R[i][j] @ profile.K[j]
        are_res.append(float(np.linalg.norm(acc)))
        stat_res.append(float(np.linalg.norm(
            pt.costs.R[i][i] @ profile.K[i] - system.B[i].T @ Pi)))
        cones.append((
            is_psd(pt.costs.Q[i], tol),
            is_pd(pt.costs.R[i][i]),
            all(is_psd(pt.costs.R[i][j], tol) for j in range(N) if j != i),
            is_psd(Pi, tol),
        ))
    member = (
        all(r <= tol * scale for r in are_res)
        and all(r <= tol * scale for r in stat_res)
        and all(all(flags) for flags in cones)
    )
    return MembershipReport(member=member, are_residuals=tuple(are_res),
                            stationarity_residuals=tuple(stat_res), cone_ok=tuple(cones))


def build_vectorized_system(system: GameSystem, profile: StrategyProfile, i: int) -> np.ndarray:
    """Kronecker-vectorized identities acting on [vec(Q_i); vec(R_ii); vec(P_i)].

    Riccati row block (n^2 equations) and the stationarity block (n m_i
    equations, as vec(R_ii K_i) = (K_i' (x) I_m) vec(R_ii)); off-diagonal R
    is folded away.  Every member point with zero cross penalties lies in the
    nullspace.
    """
    if not (0 <= i < system.num_players):
        raise DimensionError(f"player index {i} out of range")
    n, m = system.n, system.m[i]
    Ki = profile.K[i]
    Acl = closed_loop(system, profile.K)
    top = np.hstack([
        np.eye(n * n),
        kron(Ki.T, Ki.T),
        kron_sum(Acl.T, Acl.T),
    ])
    bottom = np.hstack([
        np.zeros((n * m, n * n)),
        kron(Ki.T, np.eye(m)),
        -kron(np.eye(n), system.B[i].T),
    ])
    return np.vstack([top, bottom])


def _player_nullspace(system, profile, i, tol: float = 1e-9):
    """Nullspace of the vectorized system expressed over symmetric (Q, R, P).

    Columns of the returned basis are packed [Q; R; P] in the isometric
    symmetric packing, so Euclidean projections match Frobenius geometry.
    """
    n, m = system.n, system.m[i]
    M = build_vectorized_system(system, profile, i)
    nq, nr, npk = n * (n + 1) // 2, m * (m + 1) // 2, n * (n + 1) // 2
    cols = []
    for t in range(nq + nr + npk):
        e = np.zeros(nq + nr + npk)
        e[t] = 1.0
        Q = sym_unpack(e[:nq], n)
        R = sym_unpack(e[nq:nq + nr], m)
        P = sym_unpack(e[nq + nr:], n)
        cols.append(M @ np.concatenate([vec(Q), vec(R), vec(P)]))
    Msym = np.column_stack(cols)
    u, sv, vh = np.linalg.svd(Msym)
    cutoff = tol * max(1.0, sv[0] if sv.size else 1.0)
    rank = int(np.sum(sv > cutoff))
    return vh[rank:].T, (nq, nr, npk)


@dataclass(frozen=True)
class FeasibilityResult:
    status: str  # "feasible" | "infeasible_certified_by_identity" | "indeterminate"
    point: ThetaPoint | None


def solve_feasibility_projection(system: GameSystem, profile: StrategyProfile,
                                 rho: float = R_FLOOR, cap: int = PROJECTION_CAP,
                                 tol: float = PROJECTION_TOL) -> FeasibilityResult:
    """Alternating projections between the per-player identity nullspaces
    (with trace(R_ii) = m_i) and the semidefinite cone product.

    Players decouple once cross penalties are folded away, so the search runs
    per player and the results are assembled.  Projection non-convergence
    yields "indeterminate"; infeasibility is certified only when the solution
    ray itself leaves no room in the cone.
    """
    N = system.num_players
    Qs, Rs, Ps = [], [], []
    for i in range(N):
        n, m = system.n, system.m[i]
        Z, (nq, nr, npk) = _player_nullspace(system, profile, i)
        if Z.shape[1] == 0:
            return FeasibilityResult("infeasible_certified_by_identity", None)
        tr = np.zeros(nq + nr + npk)
        idx = nq
        for k in range(m):
            for l in range(k, m):
                if k == l:
                    tr[idx] = 1.0
                idx += 1
        a = Z.T @ tr
        if np.linalg.norm(a) < 1e-12:
            # trace(R_ii) vanishes on the whole solution space: no R_ii > 0.
            return FeasibilityResult("infeasible_certified_by_identity", None)

        def unpack(theta):
            return (sym_unpack(theta[:nq], n), sym_unpack(theta[nq:nq + nr], m),
                    sym_unpack(theta[nq + nr:], n))

        def proj_affine(theta):
            c = Z.T @ theta
            c = c + a * ((m - a @ c) / (a @ a))
            return Z @ c

        if Z.shape[1] == 1:
            theta = proj_affine(Z[:, 0] * float(m))
            Q, R, P = unpack(theta)
            if _cone_ok(Q, R, P, rho):
                Qs.append(Q), Rs.append(R), Ps.append(P)
                continue
            return FeasibilityResult("infeasible_certified_by_identity", None)

        theta = proj_affine(np.zeros(nq + nr + npk))
        ok = False
        for _ in range(cap):
            Q, R, P = unpack(theta)
            theta_cone = np.concatenate([
                sym_pack(psd_project(Q)),
                sym_pack(psd_project(R, floor=rho)),
                sym_pack(psd_project(P)),
            ])
            theta_next = proj_affine(theta_cone)
            gap = float(np.linalg.norm(theta_next - theta_cone))
            theta = theta_next
            if gap <= tol * max(1.0, float(np.linalg.norm(theta))):
                ok = True
                break
        Q, R, P = unpack(theta)
        if not (ok and _cone_ok(Q, R, P, rho, slack=1e-6)):
            return FeasibilityResult("indeterminate", None)
        Qs.append(Q), Rs.append(R), Ps.append(P)
    costs = _assemble_costs(system, Qs, Rs)
    return FeasibilityResult("feasible", ThetaPoint(costs, Ps))


def _cone_ok(Q, R, P, rho: float, slack: float = 1e-9) -> bool:
    def mineig(M):
        return float(np.linalg.eigvalsh(0.5 * (M + M.T)).min())

    sq = max(1.0, float(np.linalg.norm(Q)), float(np.linalg.norm(P)))
    return (mineig(Q) >= -slack * sq and mineig(P) >= -slack * sq
            and mineig(R) >= rho * (1.0 - 1e-3) - slack)


def _assemble_costs(system: GameSystem, Qs, Rs) -> CostParameters:
    N = system.num_players
    R = [[Rs[i] if i == j else np.zeros((system.m[j], system.m[j])) for j in range(N)]
         for i in range(N)]
    return CostParameters(Qs, R)


# ---------------------------------------------------------------------------
# Nearest-parameter recovery (reference projection)
# ---------------------------------------------------------------------------

def _stationarity_map(system, profile, i):
    """Linear map x -> stationarity residual, over packed (Q_i, R_i1..R_iN).

    P_i is eliminated: the Riccati row determines it as the Lyapunov solution
    for the folded state weight, which is affine in the packed variables and
    automatically positive semidefinite on the cone.
    """
    n = system.n
    ms = system.m
    Acl = closed_loop(system, profile.K)
    dims = [n * (n + 1) // 2] + [mj * (mj + 1) // 2 for mj in ms]
    total = sum(dims)
    cols = []
    for t in range(total):
        e = np.zeros(total)
        e[t] = 1.0
        Q, Rrow, P = _lift_linear(system, profile, e, dims, Acl)
        cols.append((Rrow[i] @ profile.K[i] - system.B[i].T @ P).ravel())
    return np.column_stack(cols), dims


def _lift_linear(system, profile, x, dims, Acl):
    n = system.n
    N = system.num_players
    offs = np.cumsum([0] + dims)
    Q = sym_unpack(x[offs[0]:offs[1]], n)
    Rrow = [sym_unpack(x[offs[1 + j]:offs[2 + j]], system.m[j]) for j in range(N)]
    W = Q.copy()
    for j in range(N):
        W += profile.K[j].T @ Rrow[j] @ profile.K[j]
    W = 0.5 * (W + W.T)
    # Linear (not just affine) in x, so basis columns superpose exactly.
    n2 = n * n
    Ksum = kron_sum(Acl.T, Acl.T)
    p = np.linalg.solve(Ksum, -vec(W))
    P = unvec(p, n, n)
    return Q, Rrow, 0.5 * (P + P.T)


@dataclass(frozen=True)
class NearestResult:
    status: str
    costs: CostParameters | None
    distance: float


def nearest_params(costs0: CostParameters, system: GameSystem, profile: StrategyProfile,
                   rho: float = R_FLOOR, cap: int = PROJECTION_CAP,
                   tol: float = PROJECTION_TOL) -> NearestResult:
    """Project reference costs onto the feasible set (Dykstra's algorithm).

    Per player: variables (Q_i, R_i1..R_iN) with P_i eliminated through the
    Lyapunov map, alternating between the stationarity subspace and the
    semidefinite cone with Dykstra corrections so the limit is the Frobenius
    projection, not just any feasible point.
    """
    costs0.validate(system, tol=1e-6)
    N = system.num_players
    Qs = []
    Rrows = []
    dist2 = 0.0
    for i in range(N):
        M, dims = _stationarity_map(system, profile, i)
        u, sv, vh = np.linalg.svd(M)
        cutoff = 1e-9 * max(1.0, sv[0] if sv.size else 1.0)
        rank = int(np.sum(sv > cutoff))
        Z = vh[rank:].T  # nullspace: feasible identity directions
        if Z.shape[1] == 0:
            return NearestResult("infeasible_certified_by_identity", None, float("inf"))

        x0 = np.concatenate([sym_pack(costs0.Q[i])] +
                            [sym_pack(costs0.R[i][j]) for j in range(N)])

        def proj_sub(x):
            return Z @ (Z.T @ x)

        def proj_cone(x):
            offs = np.cumsum([0] + dims)
            Q = psd_project(sym_unpack(x[offs[0]:offs[1]], system.n))
            parts = [sym_pack(Q)]
            for j in range(N):
                Rj = sym_unpack(x[offs[1 + j]:offs[2 + j]], system.m[j])
                floor = rho if j == i else 0.0
                parts.append(sym_pack(psd_project(Rj, floor=floor)))
            return np.concatenate(parts)

        x = x0.copy()
        p_corr = np.zeros_like(x)
        q_corr = np.zeros_like(x)
        converged = False
        for _ in range(cap):
            y = proj_sub(x + p_corr)
            p_corr = x + p_corr - y
            x_new = proj_cone(y + q_corr)
            q_corr = y + q_corr - x_new
            if float(np.linalg.norm(x_new - x)) <= tol * max(1.0, float(np.linalg.norm(x_new))) \
                    and float(np.linalg.norm(x_new - y)) <= 1e-6 * max(1.0, float(np.linalg.norm(x_new))):
                x = x_new
                converged = True
                break
            x = x_new
        if converged:
            # A Dykstra limit must actually lie in both sets; an empty
            # intersection can still produce small update gaps.
            offs = np.cumsum([0] + dims)
            on_sub = float(np.linalg.norm(x - proj_sub(x))) <= 1e-7 * max(1.0, float(np.linalg.norm(x)))
            Rii = sym_unpack(x[offs[1 + i]:offs[2 + i]], system.m[i])
            in_cone = float(np.linalg.eigvalsh(Rii).min()) >= rho * (1.0 - 1e-3)
            if not (on_sub and in_cone):
                converged = False
        if not converged:
            # Certify emptiness on a one-dimensional solution ray, else punt.
            if Z.shape[1] == 1:
                z = Z[:, 0]
                if not (_ray_in_cone(z, dims, system, i, rho) or
                        _ray_in_cone(-z, dims, system, i, rho)):
                    return NearestResult("infeasible_certified_by_identity", None, float("inf"))
            return NearestResult("indeterminate", None, float("inf"))
        offs = np.cumsum([0] + dims)
        Qi = sym_unpack(x[offs[0]:offs[1]], system.n)
        Rrow = [sym_unpack(x[offs[1 + j]:offs[2 + j]], system.m[j]) for j in range(N)]
        dist2 += float(np.linalg.norm(x - x0) ** 2)
        Qs.append(psd_project(Qi))
        Rrows.append([psd_project(Rj, floor=(rho if j == i else 0.0)) for j, Rj in enumerate(Rrow)])
    costs = CostParameters(Qs, Rrows)
    return NearestResult("feasible", costs, float(np.sqrt(dist2)))


def _ray_in_cone(z, dims, system, i, rho) -> bool:
    offs = np.cumsum([0] + dims)
    Q = sym_unpack(z[offs[0]:offs[1]], system.n)
    flags = [float(np.linalg.eigvalsh(Q).min()) >= -1e-9]
    for j in range(system.num_players):
        Rj = sym_unpack(z[offs[1 + j]:offs[2 + j]], system.m[j])
        w = float(np.linalg.eigvalsh(Rj).min())
        if j == i:
            flags.append(w > 1e-12)  # positive scaling can reach R >= rho I
        else:
            flags.append(w >= -1e-9)
    return all(flags)


# ---------------------------------------------------------------------------
# Cross-penalty transforms
# ---------------------------------------------------------------------------

def fold_cross_penalties(costs: CostParameters, profile: StrategyProfile) -> CostParameters:
    """Absorb off-diagonal penalties into the state weights.

    Qbar_i = Q_i + sum_{j != i} K_j' R_ij K_j, Rbar_ii = R_ii, Rbar_ij = 0;
    the per-player frequency-domain identity value is unchanged.
    """
    N = len(costs.Q)
    Qs = [state_weight_with_cross_terms(costs, profile, i) for i in range(N)]
    R = [[costs.R[i][j] if i == j else np.zeros_like(costs.R[i][j]) for j in range(N)]
         for i in range(N)]
    return CostParameters(Qs, R)


def unfold_cross_penalties(costs: CostParameters, profile: StrategyProfile,
                           R_choice, eps: float = 0.0) -> CostParameters:
    """Reintroduce desired cross penalties R_choice[i][j] >= 0 (j != i).

    Requires every Q_i strictly positive definite.  A single scalar
    lambda >= 1 inflates (Q, R_ii) so the subtracted cross terms keep the new
    state weights positive semidefinite; fold(unfold(costs)) = lambda*costs.
    """
    N = len(costs.Q)
    lam = 1.0
    sums = []
    for i in range(N):
        w = np.linalg.eigvalsh(costs.Q[i])
        if w.min() <= 0:
            raise ValueError(f"Q[{i}] must be positive definite to unfold cross penalties")
        acc = np.zeros_like(costs.Q[i])
        for j in range(N):
            if j != i:
                acc += profile.K[j].T @ np.asarray(R_choice[i][j], dtype=float) @ profile.K[j]
        acc = 0.5 * (acc + acc.T)
        sums.append(acc)
        top = float(np.linalg.eigvalsh(acc).max())
        lam = max(lam, (1.0 + eps) * top / float(w.min()))
    Qs = [0.5 * ((lam * costs.Q[i] - sums[i]) + (lam * costs.Q[i] - sums[i]).T)
          for i in range(N)]
    R = [[lam * costs.R[i][j] if i == j else np.asarray(R_choice[i][j], dtype=float)
          for j in range(N)] for i in range(N)]
    return CostParameters(Qs, R)
