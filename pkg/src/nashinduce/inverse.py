"""Frequency-domain Nash-inducibility pipeline.

For each player: build the para-Hermitian mismatch matrix
Phi = Dt'(-s) Dt(s) - D'(-s) D(s), test it on the imaginary axis (circle
criterion), column-compress it to expose its normal rank, check the
closed-right-half-plane rank condition, and recover cost matrices by solving
the frequency-domain identity (Kalman equation) as a linear system in the
unknown weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from . import polymat
from .numerics import (
    NumericalFailureError,
    psd_project,
    psd_sqrt_factor,
    sym_dim,
    sym_pack,
    sym_unpack,
)
from .polymat import PolyMatrix, compress_columns, rhp_roots_matrix, unimodular_det_constant
from .realization import (
    CoprimeFactorization,
    GameSystem,
    StrategyProfile,
    attach_feedback,
    reduced_system,
    right_coprime_factorization,
)

PARA_HERMITIAN_TOL = 1e-8
CIRCLE_GRID_POINTS = 400
PROJECTION_CAP = 10_000
PROJECTION_TOL = 1e-9
R_FLOOR = 1e-6


def build_phi(fac: CoprimeFactorization) -> PolyMatrix:
    """Phi(s) = Dt'(-s) Dt(s) - D'(-s) D(s); para-Hermitian by construction."""
    if fac.D_tilde is None:
        raise ValueError("factorization has no feedback attached")
    phi = fac.D_tilde.paraconjugate() @ fac.D_tilde - fac.D.paraconjugate() @ fac.D
    # Kill the antisymmetric round-off part.
    return 0.5 * (phi + phi.paraconjugate())


def _require_para_hermitian(phi: PolyMatrix, tol: float = PARA_HERMITIAN_TOL) -> None:
    defect = (phi - phi.paraconjugate()).coeff_norm()
    if defect > tol * max(1.0, phi.coeff_norm()):
        raise ValueError("matrix is not para-Hermitian")


def _default_grid(points_per_decade: int = CIRCLE_GRID_POINTS):
    ws = np.logspace(-3.0, 3.0, points_per_decade)
    return np.concatenate([[0.0], ws, -ws])


def _min_eig_at(phi: PolyMatrix, w: float) -> float:
    M = phi.eval(1j * w)
    M = 0.5 * (M + M.conj().T)
    return float(np.linalg.eigvalsh(M).min())


def _principal_minor_polys(phi: PolyMatrix):
    """All principal minors of Phi(jw) as real polynomials in w (m <= 3)."""
    import itertools

    m = phi.rows
    # Entry (i, j) as a complex polynomial in w: c_k s^k -> c_k j^k w^k.
    entries = {}
    for i in range(m):
        for j in range(m):
            c = phi.coeffs[:, i, j].astype(complex)
            for k in range(c.size):
                c[k] *= 1j**k
            entries[(i, j)] = c
    minors = []
    for r in range(1, m + 1):
        for idx in itertools.combinations(range(m), r):
            det = _det_poly(entries, idx)
            if np.max(np.abs(det.imag)) > 1e-7 * max(1.0, np.max(np.abs(det))):
                raise NumericalFailureError("principal minor of a Hermitian matrix came out complex")
            minors.append(polymat.poly_trim(det.real))
    return minors


def _det_poly(entries, idx):
    import itertools

    n = len(idx)
    if n == 1:
        return entries[(idx[0], idx[0])]
    det = np.zeros(1, dtype=complex)
    for perm in itertools.permutations(range(n)):
        sign = _perm_sign(perm)
        term = np.ones(1, dtype=complex)
        for r, c in enumerate(perm):
            term = npoly.polymul(term, entries[(idx[r], idx[c])])
        det = npoly.polyadd(det, sign * term)
    return np.atleast_1d(det)


def _perm_sign(perm) -> int:
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _poly_nonneg_on_reals(g, tol: float):
    """Check g(w) >= -tol for all real w; return (ok, witness or None)."""
    g = polymat.poly_trim(g)
    if polymat.is_zero_poly(g):
        return True, None
    scale = float(np.max(np.abs(g)))
    roots = polymat.poly_roots(g)
    real_roots = sorted({round(float(r.real), 9) for r in roots if abs(r.imag) < 1e-6})
    candidates = [0.0]
    if real_roots:
        lo, hi = real_roots[0] - 1.0, real_roots[-1] + 1.0
        candidates += [lo, hi]
        candidates += real_roots
        for a, b in zip(real_roots, real_roots[1:]):
            candidates.append(0.5 * (a + b))
    for w in candidates:
        val = float(npoly.polyval(w, g))
        if val < -tol * max(1.0, scale):
            return False, float(w)
    # Behaviour at infinity: odd degree or negative even leading coefficient.
    deg = g.size - 1
    lead = g[-1]
    if deg > 0 and (deg % 2 == 1 or lead < 0):
        w = (real_roots[-1] + 2.0 if real_roots else 2.0) if lead > 0 or deg % 2 == 1 else 0.0
        # Walk outward until the sign settles.
        w = abs(w)
        for _ in range(60):
            if float(npoly.polyval(w, g)) < -tol * max(1.0, scale):
                return False, float(w)
            if float(npoly.polyval(-w, g)) < -tol * max(1.0, scale):
                return False, float(-w)
            w *= 2.0
    return True, None


def circle_criterion(phi: PolyMatrix, grid=None, tol: float = 1e-9,
                     points_per_decade: int = CIRCLE_GRID_POINTS):
    """Test Phi(jw) >= 0 for all real w.

    Grid evaluation with bisection refinement at sign changes; for sizes up
    to 3 an exact principal-minor root-isolation pass removes grid risk.
    Returns (ok, witness, method) with method "exact" or "sampled".
    """
    _require_para_hermitian(phi)
    if phi.is_zero():
        return True, None, "exact"
    scale = max(1.0, phi.coeff_norm())
    if phi.rows <= 3:
        # Grid-free: all principal minors of Phi(jw), root-isolated over w.
        for g in _principal_minor_polys(phi):
            ok, w = _poly_nonneg_on_reals(g / max(1.0, np.max(np.abs(g))), tol)
            if not ok:
                return False, w, "exact"
        return True, None, "exact"
    ws = _default_grid(points_per_decade) if grid is None else np.asarray(grid, dtype=float)
    vals = np.array([_min_eig_at(phi, w) for w in ws])
    bad = np.nonzero(vals < -tol * scale)[0]
    if bad.size:
        w_star = float(ws[bad[np.argmin(np.abs(ws[bad]))]])
        return False, w_star, "sampled"
    # Bisection refinement near local minima that approach zero.
    order = np.argsort(ws)
    ws_sorted, vals_sorted = ws[order], vals[order]
    for k in range(1, len(ws_sorted) - 1):
        if vals_sorted[k] <= min(vals_sorted[k - 1], vals_sorted[k + 1]):
            a, b = ws_sorted[k - 1], ws_sorted[k + 1]
            for _ in range(50):
                mid1 = a + (b - a) / 3.0
                mid2 = b - (b - a) / 3.0
                if _min_eig_at(phi, mid1) < _min_eig_at(phi, mid2):
                    b = mid2
                else:
                    a = mid1
            w_star = 0.5 * (a + b)
            if _min_eig_at(phi, w_star) < -tol * scale:
                return False, float(w_star), "sampled"
    return True, None, "sampled"


@dataclass(frozen=True)
class PhiAnalysis:
    """Phi with its unimodular column compression and normal rank."""

    phi: PolyMatrix
    L: PolyMatrix
    phi_tilde: PolyMatrix
    p: int
    circle_ok: bool
    circle_witness: float | None
    circle_method: str
    grid: np.ndarray = field(repr=False, default=None)


def analyze_phi(fac: CoprimeFactorization, grid=None,
                points_per_decade: int = CIRCLE_GRID_POINTS) -> PhiAnalysis:
    phi = build_phi(fac)
    L, phi_tilde, p = compress_columns(phi)
    unimodular_det_constant(L)
    ok, witness, method = circle_criterion(phi, grid, points_per_decade=points_per_decade)
    used = _default_grid(points_per_decade) if grid is None else np.asarray(grid, dtype=float)
    return PhiAnalysis(phi=phi, L=L, phi_tilde=phi_tilde, p=p,
                       circle_ok=ok, circle_witness=witness, circle_method=method, grid=used)


@dataclass(frozen=True)
class RankViolation:
    s0: complex
    v: np.ndarray
    real_v_available: bool
    boundary: bool


@dataclass(frozen=True)
class RankCertificate:
    satisfied: bool
    violations: tuple
    degenerate: bool = False


def check_rank_condition(fac: CoprimeFactorization, analysis: PhiAnalysis,
                         delta: float = polymat.RHP_MARGIN) -> RankCertificate:
    """No s in the closed RHP may admit a nonzero v with D L v = 0 whose
    leading p entries vanish.

    Vacuous when Phi has full normal rank.  The strict verdict only counts
    violations with a real witness vector; complex-only witnesses are
    reported but excluded from `satisfied`.
    """
    m = fac.m
    p = analysis.p
    if p >= m:
        return RankCertificate(satisfied=True, violations=())
    DL = fac.D @ analysis.L
    T = DL.select_columns(range(p, m))
    if T.is_zero():
        return RankCertificate(satisfied=False, violations=(), degenerate=True)
    try:
        roots = rhp_roots_matrix(T, delta)
    except ValueError:
        # Normal rank of T below its column count: deficient everywhere.
        return RankCertificate(satisfied=False, violations=(), degenerate=True)
    violations = []
    for r in roots:
        u = r.null_direction
        s0 = r.location
        real_ok = False
        v_real = None
        if abs(s0.imag) <= 1e-9:
            Tr = T.eval(complex(s0.real)).real
            ns = _null_vec(Tr)
            if ns is not None:
                real_ok, v_real = True, ns
        else:
            M = T.eval(s0)
            ns = _null_vec(np.vstack([M.real, M.imag]))
            if ns is not None:
                real_ok, v_real = True, ns
        u_use = v_real if real_ok else u
        v = np.zeros(m, dtype=float if real_ok else complex)
        v[p:] = u_use
        violations.append(RankViolation(s0=s0, v=v, real_v_available=real_ok, boundary=r.boundary))
    satisfied = not any(v.real_v_available for v in violations)
    return RankCertificate(satisfied=satisfied, violations=tuple(violations))


def _null_vec(M, tol: float = 1e-7):
    u, s, vh = np.linalg.svd(M)
    if s.size == 0 or s[-1] <= tol * max(1.0, s[0]):
        v = vh[-1].conj()
        if np.max(np.abs(v.imag)) < 1e-10:
            v = v.real
        return v / np.linalg.norm(v)
    return None


# ---------------------------------------------------------------------------
# Kalman-equation solvers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KalmanSolution:
    Q: np.ndarray
    R: np.ndarray
    residual: float
    kernel_dim: int
    psd_ok: bool
    status: str  # "solved" | "no_solution" | "infeasible" | "indeterminate"
    N_factor: PolyMatrix | None = None


def _coeff_stack(P: PolyMatrix, dmax: int) -> np.ndarray:
    C = np.zeros((dmax, P.rows, P.cols))
    C[: P.coeffs.shape[0]] = P.coeffs
    return C.ravel()


def solve_kalman_Q(fac: CoprimeFactorization, phi: PolyMatrix,
                   tol: float = 1e-8, cap: int = PROJECTION_CAP) -> KalmanSolution:
    """Find symmetric Q with S'(-s) Q S(s) = Phi(s); R is pinned to I.

    The map from the independent entries of Q to the polynomial coefficients
    is linear; we take the minimum-norm solution, keep the kernel of the map,
    and search the affine solution set for a PSD point by alternating
    projections.  When a PSD point is found the spectral factor
    N(s) = Q^{1/2} S(s) is attached.
    """
    _require_para_hermitian(phi)
    n, m = fac.n, fac.m
    S_para = fac.S.paraconjugate()
    dmax = int(2 * max(fac.S.degree, 0) + max(phi.degree, 0) + 2)
    cols = []
    for t in range(sym_dim(n)):
        e = np.zeros(sym_dim(n))
        e[t] = 1.0
        Eb = sym_unpack(e, n)
        G = S_para @ PolyMatrix.constant(Eb) @ fac.S
        cols.append(_coeff_stack(G, dmax))
    A = np.column_stack(cols)
    b = _coeff_stack(phi, dmax)
    q, *_ = np.linalg.lstsq(A, b, rcond=None)
    resid = float(np.linalg.norm(A @ q - b))
    rel = resid / max(1.0, float(np.linalg.norm(b)))
    # Kernel of the homogeneous map.
    u, sv, vh = np.linalg.svd(A)
    cutoff = 1e-9 * max(1.0, sv[0] if sv.size else 1.0)
    rank = int(np.sum(sv > cutoff))
    Z = vh[rank:].T
    kernel_dim = Z.shape[1]
    if rel > tol:
        return KalmanSolution(Q=sym_unpack(q, n), R=np.eye(m), residual=rel,
                              kernel_dim=kernel_dim, psd_ok=False, status="no_solution")
    # PSD search over the affine set q + range(Z).
    Q_aff = q.copy()
    scale = max(1.0, float(np.linalg.norm(q)))
    converged = False
    for _ in range(cap):
        Qm = psd_project(sym_unpack(Q_aff, n))
        q_psd = sym_pack(Qm)
        Q_next = q + Z @ (Z.T @ (q_psd - q))
        gap = float(np.linalg.norm(Q_next - q_psd))
        Q_aff = Q_next
        if gap <= PROJECTION_TOL * scale:
            converged = True
            break
    Q = sym_unpack(Q_aff, n)
    w = np.linalg.eigvalsh(Q)
    psd_ok = bool(converged and w.min() >= -1e-7 * max(1.0, float(np.abs(w).max())))
    resid_final = float(np.linalg.norm(A @ sym_pack(Q) - b)) / max(1.0, float(np.linalg.norm(b)))
    N = None
    status = "solved" if psd_ok else ("indeterminate" if not converged else "infeasible")
    if psd_ok:
        C = psd_sqrt_factor(psd_project(Q))
        if C.shape[0] > 0:
            N = PolyMatrix.constant(C) @ fac.S
    return KalmanSolution(Q=Q, R=np.eye(m), residual=resid_final, kernel_dim=kernel_dim,
                          psd_ok=psd_ok, status=status, N_factor=N)


def solve_kalman_general(fac: CoprimeFactorization, tol: float = 1e-8,
                         rho: float = R_FLOOR, cap: int = PROJECTION_CAP) -> KalmanSolution:
    """Joint unknowns (Q, R):  Dt'(-s) R Dt(s) - D'(-s) R D(s) = S'(-s) Q S(s).

    The solution set is a cone; trace(R) = m is imposed as the normalization
    slice and alternating projections search for Q >= 0, R >= rho I.
    """
    if fac.D_tilde is None:
        raise ValueError("factorization has no feedback attached")
    n, m = fac.n, fac.m
    S_para = fac.S.paraconjugate()
    D_para = fac.D.paraconjugate()
    Dt_para = fac.D_tilde.paraconjugate()
    dmax = int(2 * max(fac.S.degree, fac.D.degree, fac.D_tilde.degree, 0) + 2)
    nq, nr = sym_dim(n), sym_dim(m)
    cols = []
    for t in range(nq):
        e = np.zeros(nq)
        e[t] = 1.0
        G = S_para @ PolyMatrix.constant(sym_unpack(e, n)) @ fac.S
        cols.append(-_coeff_stack(G, dmax))
    for t in range(nr):
        e = np.zeros(nr)
        e[t] = 1.0
        Rb = PolyMatrix.constant(sym_unpack(e, m))
        G = Dt_para @ Rb @ fac.D_tilde - D_para @ Rb @ fac.D
        cols.append(_coeff_stack(G, dmax))
    A = np.column_stack(cols)
    u, sv, vh = np.linalg.svd(A)
    cutoff = 1e-9 * max(1.0, sv[0] if sv.size else 1.0)
    rank = int(np.sum(sv > cutoff))
    Z = vh[rank:].T  # basis of the homogeneous solution cone's span
    kernel_dim = Z.shape[1]

    def unpack(theta):
        return sym_unpack(theta[:nq], n), sym_unpack(theta[nq:], m)

    def residual_of(theta):
        return float(np.linalg.norm(A @ theta)) / max(1.0, float(np.linalg.norm(A @ theta) + 1.0))

    if kernel_dim == 0:
        return KalmanSolution(Q=np.zeros((n, n)), R=np.zeros((m, m)), residual=0.0,
                              kernel_dim=0, psd_ok=False, status="infeasible")
    # Normalization slice trace(R) = m in kernel coordinates.
    tr = np.zeros(nq + nr)
    for idx, (k, l) in enumerate([(k, l) for k in range(m) for l in range(k, m)]):
        if k == l:
            tr[nq + idx] = 1.0
    a = Z.T @ tr
    if np.linalg.norm(a) < 1e-12:
        # Every solution has trace(R) = 0; no positive-definite R exists.
        return KalmanSolution(Q=np.zeros((n, n)), R=np.zeros((m, m)), residual=0.0,
                              kernel_dim=kernel_dim, psd_ok=False, status="infeasible")
    c0 = a * (float(m) / float(a @ a))

    def proj_affine(theta):
        c = Z.T @ theta
        c = c + a * ((m - a @ c) / (a @ a))
        return Z @ c

    if kernel_dim == 1:
        theta = proj_affine(Z @ c0)
        Qm, Rm = unpack(theta)
        ok = _cone_ok(Qm, Rm, rho)
        resid = float(np.linalg.norm(A @ theta)) / max(1.0, float(np.linalg.norm(theta)))
        status = "solved" if ok else "infeasible"
        N = _spectral_factor(fac, Qm) if ok else None
        return KalmanSolution(Q=Qm, R=Rm, residual=resid, kernel_dim=1,
                              psd_ok=ok, status=status, N_factor=N)

    theta = Z @ c0
    converged = False
    for _ in range(cap):
        Qm, Rm = unpack(theta)
        theta_cone = np.concatenate([
            sym_pack(psd_project(Qm)),
            sym_pack(psd_project(Rm, floor=rho)),
        ])
        theta_next = proj_affine(theta_cone)
        gap = float(np.linalg.norm(theta_next - theta_cone))
        theta = theta_next
        if gap <= PROJECTION_TOL * max(1.0, float(np.linalg.norm(theta))):
            converged = True
            break
    Qm, Rm = unpack(theta)
    ok = bool(converged and _cone_ok(Qm, Rm, rho, slack=1e-7))
    resid = float(np.linalg.norm(A @ theta)) / max(1.0, float(np.linalg.norm(theta)))
    status = "solved" if ok else "indeterminate"
    N = _spectral_factor(fac, Qm) if ok else None
    return KalmanSolution(Q=Qm, R=Rm, residual=resid, kernel_dim=kernel_dim,
                          psd_ok=ok, status=status, N_factor=N)


def _cone_ok(Q, R, rho: float, slack: float = 1e-9) -> bool:
    wq = np.linalg.eigvalsh(0.5 * (Q + Q.T))
    wr = np.linalg.eigvalsh(0.5 * (R + R.T))
    sq = max(1.0, float(np.abs(wq).max())) if wq.size else 1.0
    return bool(wq.min() >= -slack * sq and wr.min() >= rho * (1.0 - 1e-3) - slack)


def _spectral_factor(fac: CoprimeFactorization, Q) -> PolyMatrix | None:
    C = psd_sqrt_factor(psd_project(Q))
    if C.shape[0] == 0:
        return None
    return PolyMatrix.constant(C) @ fac.S


# ---------------------------------------------------------------------------
# Per-player pipeline
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlayerAnalysis:
    index: int
    factorization: CoprimeFactorization
    phi_analysis: PhiAnalysis
    rank_certificate: RankCertificate
    kalman: KalmanSolution | None
    warnings: tuple

    @property
    def circle_ok(self) -> bool:
        return self.phi_analysis.circle_ok

    @property
    def rank_ok(self) -> bool:
        return self.rank_certificate.satisfied and not self.rank_certificate.degenerate

    @property
    def inducible(self) -> bool:
        return self.circle_ok and self.rank_ok


@dataclass(frozen=True)
class InducibilityAnalysis:
    players: tuple
    inducible: bool


def analyze_player(system: GameSystem, profile: StrategyProfile, i: int,
                   solve_costs: bool = True, mode: str = "general",
                   points_per_decade: int = CIRCLE_GRID_POINTS) -> PlayerAnalysis:
    A_tilde, _ = reduced_system(system, profile, i)
    fac = right_coprime_factorization(A_tilde, system.B[i])
    fac = attach_feedback(fac, profile.K[i])
    analysis = analyze_phi(fac, points_per_decade=points_per_decade)
    cert = check_rank_condition(fac, analysis)
    warnings = []
    if not fac.controllable:
        warnings.append(f"player {i}: uncontrollable subspace present; "
                        "frequency-domain statements restricted to the controllable part")
    if analysis.circle_method == "sampled":
        warnings.append(f"player {i}: circle criterion certified on a sampled grid only")
    for v in cert.violations:
        if not v.real_v_available:
            warnings.append(f"player {i}: rank violation at {v.s0} has a complex-only witness; "
                            "excluded from the strict verdict")
        if v.boundary:
            warnings.append(f"player {i}: rank violation on the imaginary-axis boundary at {v.s0}")
    kalman = None
    if solve_costs:
        if mode == "q-only":
            kalman = solve_kalman_Q(fac, analysis.phi)
        else:
            kalman = solve_kalman_general(fac)
    return PlayerAnalysis(index=i, factorization=fac, phi_analysis=analysis,
                          rank_certificate=cert, kalman=kalman, warnings=tuple(warnings))


def is_nash_inducible(system: GameSystem, profile: StrategyProfile,
                      solve_costs: bool = True, mode: str = "general",
                      points_per_decade: int = CIRCLE_GRID_POINTS) -> InducibilityAnalysis:
    """Per-player circle + rank verdicts; overall verdict is their conjunction."""
    players = []
    for i in range(system.num_players):
        try:
            players.append(analyze_player(system, profile, i, solve_costs, mode,
                                          points_per_decade))
        except NumericalFailureError as exc:
            raise NumericalFailureError(f"player {i}: {exc}") from exc
    return InducibilityAnalysis(players=tuple(players),
                                inducible=all(p.inducible for p in players))
