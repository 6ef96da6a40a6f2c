"""Lifting map D_gamma, modal identities, and the reduced closed-loop system.

D_gamma V is the solution psi of the nonlocal problem

    gamma psi - psi'' - alpha psi - 2 sum_k lambda_k <psi, e_k> e_k = 0,
    psi(0) = 0,  psi(1) = V,

with e_k = sqrt(2) sin(k pi x) the L2-normalized unstable eigenfunctions.
Projecting onto phi_i = sin(i pi x) gives

    <psi, phi_i> = -V phi_i'(1) / (gamma - lambda_i),

so the identity holds with normalization constant ``C_NORM = 1``.

Nothing in the closed-loop simulator depends on this module; it only backs
the verification suite.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import BoundaryMismatchError, LiftingError, StepSizeError
from .gains import FeedbackLaw, GainSet, gain_vector
from .spectral import (
    RESONANCE_TOL,
    Grid,
    SpectralData,
    StateField,
    eigenvalue,
    modal_projection,
    projection_matrix,
)

C_NORM = 1.0
LYAPUNOV_RTOL = 1e-8


@dataclass(frozen=True)
class LiftingSolution:
    gamma: float
    v_boundary: float
    psi: StateField
    residual: float


@dataclass(frozen=True)
class ReducedSystem:
    """dv/dt = M v for the unstable modal amplitudes of the lifted state."""

    m_matrix: np.ndarray
    b_matrix: np.ndarray
    gamma1: float
    gammas: np.ndarray


def _check_lift_gamma(gamma: float, spectral: SpectralData) -> None:
    # the nonlocal operator acts as gamma - lambda_k on unstable modes and
    # gamma + lambda_k on the rest
    n = spectral.n_unstable
    if n and np.any(np.abs(gamma - spectral.lambdas) <= RESONANCE_TOL):
        raise LiftingError(f"gamma={gamma} is resonant with an unstable eigenvalue")
    j = max(int(np.rint(np.sqrt(max(spectral.alpha - gamma, 0.0)) / np.pi)), n + 1)
    for k in (j - 1, j, j + 1):
        if k > n and abs(gamma + eigenvalue(spectral.alpha, k)) <= RESONANCE_TOL:
            raise LiftingError(f"gamma={gamma} is resonant with -lambda_{k}")


def _bordered_operator(gamma: float, grid: Grid, spectral: SpectralData):
    m, h, n = grid.m, grid.h, spectral.n_unstable
    k = m - 1
    main = np.full(k, gamma - spectral.alpha + 2.0 / h**2)
    off = np.full(k - 1, -1.0 / h**2)
    lap = sp.diags([off, main, off], [-1, 0, 1])
    if n == 0:
        return lap.tocsc()
    e = np.sqrt(2.0) * spectral.eigenfunctions(grid)[:, 1:-1]
    upper = sp.csc_matrix(-2.0 * e.T * spectral.lambdas[None, :])
    lower = sp.csc_matrix(-h * e)
    return sp.bmat([[lap, upper], [lower, sp.identity(n)]], format="csc")


def solve_lift(
    gamma: float, v_boundary: float, grid: Grid, spectral: SpectralData
) -> LiftingSolution:
    """Second-order finite-difference solve of the lifting problem.

    The rank-N nonlocal term is carried by N extra unknowns (the normalized
    projections), giving a bordered tridiagonal system.
    """
    n = spectral.n_unstable
    if grid.m < 8 * max(n, 1):
        raise LiftingError(f"grid too coarse: m={grid.m} < {8 * max(n, 1)}")
    _check_lift_gamma(gamma, spectral)
    a = _bordered_operator(gamma, grid, spectral)
    rhs = np.zeros(a.shape[0])
    rhs[grid.m - 2] = v_boundary / grid.h**2
    try:
        sol = spla.splu(a).solve(rhs)
    except RuntimeError as exc:
        raise LiftingError(f"singular lifting system for gamma={gamma}") from exc
    if not np.all(np.isfinite(sol)):
        raise LiftingError(f"singular lifting system for gamma={gamma}")
    res = float(np.max(np.abs(a @ sol - rhs))) if rhs.size else 0.0
    scale = max(abs(v_boundary), 1.0) / grid.h**2
    if res > 1e-8 * scale:
        raise LiftingError(f"lifting solve inaccurate (residual {res:.3e})")
    psi = np.concatenate(([0.0], sol[: grid.m - 1], [v_boundary]))
    return LiftingSolution(float(gamma), float(v_boundary), StateField(grid, psi), res)


def verify_modal_identity(lift: LiftingSolution, spectral: SpectralData) -> np.ndarray:
    """|<psi, phi_i>(gamma - lambda_i) + V phi_i'(1)| for i = 1..N."""
    out = np.empty(spectral.n_unstable)
    for i in range(spectral.n_unstable):
        p = modal_projection(lift.psi, i + 1)
        out[i] = abs(
            p * (lift.gamma - spectral.lambdas[i])
            + lift.v_boundary * spectral.normal_derivs[i] * C_NORM
        )
    return out


def modal_identity_refinement(
    gamma: float, v_boundary: float, spectral: SpectralData, ms=(100, 200, 400)
):
    """Max identity residual per grid and the observed orders between grids."""
    res = np.array(
        [
            verify_modal_identity(solve_lift(gamma, v_boundary, Grid(m), spectral), spectral).max()
            for m in ms
        ]
    )
    ms = np.asarray(ms, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        orders = np.log(res[:-1] / res[1:]) / np.log(ms[1:] / ms[:-1])
    return res, orders


def unit_lifts(law: FeedbackLaw, grid: Grid) -> np.ndarray:
    """Row k is D_{gamma_k} 1 on ``grid``."""
    if law.gains is None:
        raise ValueError("law was built without a GainSet")
    return np.array(
        [solve_lift(g, 1.0, grid, law.spectral).psi.values for g in law.gains.gammas]
    )


def _l2(values: np.ndarray, h: float) -> float:
    return float(np.sqrt(h * (np.sum(values**2) - 0.5 * (values[0] ** 2 + values[-1] ** 2))))


def v_transform(
    u: StateField, law: FeedbackLaw, grid: Grid | None = None, lifts=None
) -> StateField:
    """v = u - sum_k D_{gamma_k} U_k(u); vanishes at both ends for closed-loop states."""
    grid = grid or u.grid
    norm = _l2(u.values, grid.h)
    tol = 1e-6 * norm
    if abs(u.values[0]) > tol or abs(u.values[-1] - law(u)) > tol:
        raise BoundaryMismatchError(
            f"state is not a closed-loop state: u(0)={u.values[0]:.3e}, "
            f"u(1)-F(u)={u.values[-1] - law(u):.3e}"
        )
    if lifts is None:
        lifts = unit_lifts(law, grid)
    controls = law.shift_controls(u)
    return StateField(grid, u.values - controls @ lifts, u.time)


def feedback_identity_residuals(u: StateField, law: FeedbackLaw, lifts=None) -> dict:
    """Compare the lifted-mode identities in the u- and v-coordinates.

    With m_u and m_v the modal vectors of u and v, each h_k = D_{gamma_k} U_k
    should satisfy <h_k, phi> = -B_k B m_u and, because m_v = 2 m_u,
    <h_k, phi> = -1/2 B_k B m_v. Returns the max residual of each form
    and the observed ratio |m_v| / |m_u|.
    """
    gains = law.gains
    grid = u.grid
    if lifts is None:
        lifts = unit_lifts(law, grid)
    p = projection_matrix(law.n, grid)
    controls = law.shift_controls(u)
    m_u = p @ u.values
    v = u.values - controls @ lifts
    m_v = p @ v
    res_u, res_v = 0.0, 0.0
    for k in range(law.n):
        hk = p @ (controls[k] * lifts[k])
        res_u = max(res_u, np.max(np.abs(hk + gains.bk[k] @ gains.b @ m_u)))
        res_v = max(res_v, np.max(np.abs(hk + 0.5 * gains.bk[k] @ gains.b @ m_v)))
    ratio = float(np.linalg.norm(m_v) / np.linalg.norm(m_u)) if np.any(m_u) else float("nan")
    return {"u_form": float(res_u), "v_form_half": float(res_v), "mode_ratio": ratio}


def reduced_matrix(gains: GainSet) -> ReducedSystem:
    g = gains.gammas
    n = gains.n
    m = -g[0] * np.eye(n)
    for k in range(1, n):
        m = m + (g[0] - g[k]) * gains.bk[k] @ gains.b
    return ReducedSystem(m, gains.b, float(g[0]), np.asarray(g))


def closed_loop_modal_matrix(gains: GainSet) -> np.ndarray:
    """Generator of the unstable modal amplitudes under U = <g, m(u)>.

    Projecting the PDE onto phi_i gives dm/dt = -diag(lambda) m - d U, so this
    equals the reduced matrix exactly when B is the inverse of sum B_k.
    """
    sp_ = gains.spectral
    return -np.diag(sp_.lambdas) - np.outer(sp_.normal_derivs, gain_vector(gains))


def lyapunov_matrix(rs: ReducedSystem) -> np.ndarray:
    b, m = rs.b_matrix, rs.m_matrix
    q = b @ m + m.T @ b + 2.0 * rs.gamma1 * b
    return 0.5 * (q + q.T)


def lyapunov_certificate(rs: ReducedSystem) -> float:
    """Largest eigenvalue of B M + M^T B + 2 gamma_1 B; <= 0 certifies rate gamma_1."""
    return float(np.linalg.eigvalsh(lyapunov_matrix(rs))[-1])


def certificate_passes(rs: ReducedSystem) -> bool:
    return lyapunov_certificate(rs) <= LYAPUNOV_RTOL * np.linalg.norm(rs.b_matrix, 2)


def reduced_ode_integrate(rs: ReducedSystem, v0, t_end: float, dt: float):
    """Classical RK4 for dv/dt = M v. Returns ``(times, states)``."""
    if dt <= 0 or dt > 0.1 / rs.gammas[-1]:
        raise StepSizeError(f"dt={dt} exceeds 0.1/gamma_N = {0.1 / rs.gammas[-1]:.3e}")
    m = rs.m_matrix
    v = np.asarray(v0, dtype=float).copy()
    if v.shape != (m.shape[0],):
        raise ValueError(f"initial vector must have length {m.shape[0]}")
    steps = max(int(np.ceil(t_end / dt - 1e-9)), 0)
    h = t_end / steps if steps else 0.0
    out = np.empty((steps + 1, v.size))
    out[0] = v
    for s in range(steps):
        k1 = m @ v
        k2 = m @ (v + 0.5 * h * k1)
        k3 = m @ (v + 0.5 * h * k2)
        k4 = m @ (v + h * k3)
        v = v + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[s + 1] = v
    return np.linspace(0.0, t_end, steps + 1), out


def weighted_norm(rs: ReducedSystem, states: np.ndarray) -> np.ndarray:
    """|B^{1/2} v| along a trajectory."""
    states = np.atleast_2d(states)
    return np.sqrt(np.einsum("ti,ij,tj->t", states, rs.b_matrix, states))
