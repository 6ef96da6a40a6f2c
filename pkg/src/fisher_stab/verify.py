"""Invariant suite behind ``fisher-stab verify``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import modal_series, pde_vs_reduced_check
from .gains import FeedbackLaw, GainSet, cauchy_determinant_check, gain_vector
from .lifting import (
    LYAPUNOV_RTOL,
    ReducedSystem,
    closed_loop_modal_matrix,
    lyapunov_certificate,
    modal_identity_refinement,
    reduced_matrix,
)
from .simulate import SimConfig, simulate
from .spectral import ModelParams

ORDER_BAND = (1.7, 2.3)
PDE_ODE_TOL = 0.05
PDE_ODE_GRID = 400
SEED = 20240501


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    passed: bool


def _le(name, value, threshold):
    return Check(name, float(value), float(threshold), bool(value <= threshold))


def _ge(name, value, threshold):
    return Check(name, float(value), float(threshold), bool(value >= threshold))


def form_equivalence(gains: GainSet, n_vectors: int = 20, seed: int = SEED) -> float:
    """Largest relative gap between the three ways of writing U for random modal vectors."""
    rng = np.random.default_rng(seed)
    g = gain_vector(gains)
    ones = np.ones(gains.n)
    worst = 0.0
    for _ in range(n_vectors):
        m = rng.standard_normal(gains.n)
        bm = gains.b @ m
        per_shift = sum(float(bm @ (lam @ gains.spectral.normal_derivs)) for lam in gains.lambda_mats)
        collapsed = float(g @ m)
        t_form = float((gains.t @ bm) @ ones)
        scale = max(abs(per_shift), abs(collapsed), abs(t_form), 1e-300)
        worst = max(worst, abs(per_shift - collapsed) / scale, abs(t_form - collapsed) / scale)
    return worst


def run_checks(cfg, gains: GainSet | None = None, pde_grid: int = PDE_ODE_GRID):
    gains = gains if gains is not None else cfg.gains()
    spectral = gains.spectral
    checks = []

    checks.append(Check("min_eig_sum_bk", gains.min_eig_sum_bk, 0.0, gains.min_eig_sum_bk > 0))
    inv_err = float(np.max(np.abs(gains.b @ gains.sum_bk - np.eye(gains.n))))
    checks.append(_le("inverse_identity", inv_err, 1e-10 * gains.cond_b))

    numeric, closed = cauchy_determinant_check(gains.gammas, spectral.lambdas)
    checks.append(_le("cauchy_rel_diff", abs(numeric - closed) / abs(closed), 1e-8))

    checks.append(_le("form_equivalence", form_equivalence(gains), 1e-10))

    for gamma in gains.gammas:
        _, orders = modal_identity_refinement(gamma, 1.0, spectral)
        checks.append(_ge(f"modal_identity_order_min_gamma{gamma:g}", orders.min(), ORDER_BAND[0]))
        checks.append(_le(f"modal_identity_order_max_gamma{gamma:g}", orders.max(), ORDER_BAND[1]))

    rs = reduced_matrix(gains)
    a_cl = closed_loop_modal_matrix(gains)
    mismatch = np.linalg.norm(a_cl - rs.m_matrix) / np.linalg.norm(rs.m_matrix)
    checks.append(_le("closed_loop_matches_reduced", mismatch, 1e-10))
    actual = ReducedSystem(a_cl, gains.b, rs.gamma1, rs.gammas)
    b_norm = np.linalg.norm(gains.b, 2)
    checks.append(_le("lyapunov_certificate", lyapunov_certificate(actual), LYAPUNOV_RTOL * b_norm))

    law = FeedbackLaw.from_gains(gains)
    sim = SimConfig(
        ModelParams(cfg.alpha, 0.0),
        grid_m=pde_grid,
        dt=min(cfg.dt, 1e-4),
        t_end=0.5,
        law=law,
        u0_spec="5xexp",
        snapshot_every=50,
    )
    res = simulate(sim)
    times, series = modal_series(res.snapshots, law)
    checks.append(_le("pde_vs_reduced", pde_vs_reduced_check(times, series, rs), PDE_ODE_TOL))
    return checks
