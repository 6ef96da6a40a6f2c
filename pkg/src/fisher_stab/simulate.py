"""Finite-difference integration of the controlled Fisher equation

    u_t = u_xx + alpha u - beta u^2,   u(0, t) = 0,   u(1, t) = U(t).

Crank-Nicolson on the linear part and second-order Adams-Bashforth on the
quadratic term (forward Euler on the first step). The feedback only reads
interior nodes (every sin(pi j x) vanishes at x = 1), so each stored state
carries its own control on the boundary node and satisfies u(1) = F(u).

Two boundary treatments are available:

``"implicit"`` (default)
    u(1, t_{n+1}) = F(u_{n+1}), folded into the tridiagonal solve as a rank-one
    correction. Second order in time.
``"lagged"``
    U_n = F(u_n) is held over [t_n, t_{n+1}]. First order in time.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import norms
from .exceptions import ConfigError, SimulationError
from .gains import FeedbackLaw
from .spectral import Grid, ModelParams, StateField

logger = logging.getLogger(__name__)

BLOWUP_LEVEL = 1e6
MAX_NONLINEAR_DT = 1e-2

InitialSpec = Union[str, Sequence[float], np.ndarray, Callable]


def initial_profile(spec: InitialSpec, grid: Grid) -> StateField:
    """Sample an initial condition.

    Presets: ``"5xexp"`` (5 x e^x), ``"sine(j)"`` (sin(pi j x)) and ``"zero"``.
    Arrays must hold one value per node; callables are evaluated at the nodes.
    """
    x = grid.nodes
    if not isinstance(spec, str):
        vals = spec(x) if callable(spec) else spec
        vals = np.asarray(vals, dtype=float)
        if vals.shape == x.shape and not np.all(np.isfinite(vals)):
            raise SimulationError("initial profile has non-finite values")
        return StateField(grid, vals)
    name = spec.strip().lower()
    if name == "5xexp":
        return StateField(grid, 5.0 * x * np.exp(x))
    if name == "zero":
        return StateField(grid, np.zeros_like(x))
    match = re.fullmatch(r"sine\((\d+)\)", name)
    if match:
        j = int(match.group(1))
        if j < 1:
            raise ConfigError("sine preset needs j >= 1")
        vals = np.sin(np.pi * j * x)
        vals[[0, -1]] = 0.0
        return StateField(grid, vals)
    raise ConfigError(f"unknown initial profile preset {spec!r}")


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams
    grid_m: int = 200
    dt: float = 1e-4
    t_end: float = 2.0
    law: FeedbackLaw | None = None
    u0_spec: InitialSpec = "5xexp"
    snapshot_every: int = 0
    feedback: str = "implicit"

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ConfigError(f"dt must be positive, got {self.dt!r}")
        if not (np.isfinite(self.t_end) and self.t_end > 0):
            raise ConfigError(f"t_end must be positive, got {self.t_end!r}")
        if self.params.beta > 0 and self.dt > MAX_NONLINEAR_DT:
            raise ConfigError(f"dt={self.dt} too large for the nonlinear model")
        if self.snapshot_every < 0:
            raise ConfigError("snapshot_every must be >= 0")
        if self.feedback not in ("implicit", "lagged"):
            raise ConfigError(f"unknown feedback treatment {self.feedback!r}")

    @property
    def grid(self) -> Grid:
        return Grid(self.grid_m)

    @property
    def n_steps(self) -> int:
        return max(int(np.ceil(self.t_end / self.dt - 1e-9)), 1)

    @property
    def step(self) -> float:
        """dt shrunk, if needed, so that the run ends exactly at t_end."""
        return self.t_end / self.n_steps

    def with_window(self, a: float, b: float = 1.0) -> "SimConfig":
        if self.law is None:
            raise ConfigError("open-loop config has no window")
        return replace(self, law=replace(self.law, window=(float(a), float(b))))


@dataclass
class Trace:
    times: np.ndarray
    l2: np.ndarray
    h1: np.ndarray
    control: np.ndarray
    blowup_flag: bool = False

    def __len__(self) -> int:
        return len(self.times)

    @property
    def horizon(self) -> float:
        return float(self.times[-1] - self.times[0])

    def norm(self, kind: str = "l2") -> np.ndarray:
        if kind not in ("l2", "h1"):
            raise ValueError(f"unknown norm {kind!r}")
        return getattr(self, kind)


@dataclass
class SimResult:
    trace: Trace
    snapshots: list = field(default_factory=list)
    final: StateField | None = None
    initial: StateField | None = None


def _cn_operators(params: ModelParams, grid: Grid, dt: float):
    n = grid.m - 1
    r = dt / grid.h**2
    off = np.full(n - 1, -0.5 * r)
    main = np.full(n, 1.0 + r - 0.5 * dt * params.alpha)
    lhs = sp.diags([off, main, off], [-1, 0, 1], format="csc")
    return spla.splu(lhs), r


def simulate(config: SimConfig) -> SimResult:
    grid = config.grid
    params = config.params
    dt = config.step
    u0 = initial_profile(config.u0_spec, grid)
    u = u0.values.copy()

    law = config.law
    if law is not None and law.n > 0:
        w_ctrl = law.weights(grid)
    else:
        w_ctrl = None

    lu, r = _cn_operators(params, grid, dt)
    implicit = w_ctrl is not None and config.feedback == "implicit"
    if implicit:
        w_int = w_ctrl[1:-1]
        e_last = np.zeros(grid.m - 1)
        e_last[-1] = 1.0
        z = lu.solve(e_last)
        denom = 1.0 - 0.5 * r * float(w_int @ z)
        if abs(denom) < 1e-12:
            raise SimulationError("closed-loop step matrix is singular")
    diag_rhs = 1.0 - r + 0.5 * dt * params.alpha
    half_r = 0.5 * r
    beta_dt = params.beta * dt

    steps = config.n_steps
    times = np.arange(steps + 1) * dt
    l2 = np.empty(steps + 1)
    h1 = np.empty(steps + 1)
    ctrl = np.empty(steps + 1)
    snaps = []
    blowup = False
    last = steps
    h = grid.h
    f_prev = None

    for n in range(steps + 1):
        control = float(w_ctrl @ u) if w_ctrl is not None else 0.0
        u[0] = 0.0
        u[-1] = control
        l2[n] = norms.l2(u, h)
        h1[n] = norms.h1(u, h)
        ctrl[n] = control
        if not np.isfinite(l2[n]) or not np.isfinite(control):
            raise SimulationError(f"non-finite state at t={times[n]:.6g}")
        if config.snapshot_every and (n % config.snapshot_every == 0 or n == steps):
            snaps.append(StateField(grid, u, times[n]))
        if np.max(np.abs(u)) > BLOWUP_LEVEL:
            blowup = True
            last = n
            logger.warning("blowup at t=%.6g, truncating", times[n])
            if config.snapshot_every and n % config.snapshot_every:
                snaps.append(StateField(grid, u, times[n]))
            break
        if n == steps:
            break
        ui = u[1:-1]
        rhs = diag_rhs * ui
        rhs[1:] += half_r * ui[:-1]
        rhs[:-1] += half_r * ui[1:]
        # boundary value at t_n
        rhs[-1] += half_r * control
        if beta_dt:
            f = ui * ui
            rhs -= beta_dt * (f if f_prev is None else 1.5 * f - 0.5 * f_prev)
            f_prev = f
        if implicit:
            y = lu.solve(rhs)
            u[1:-1] = y + (half_r * float(w_int @ y) / denom) * z
        else:
            # lagged: U_n also stands in for the boundary value at t_{n+1}
            rhs[-1] += half_r * control
            u[1:-1] = lu.solve(rhs)

    k = last + 1
    trace = Trace(times[:k], l2[:k], h1[:k], ctrl[:k], blowup)
    final = StateField(grid, u, times[last])
    return SimResult(trace, snaps, final, u0)


@dataclass(frozen=True)
class CompatibilityReport:
    left_residual: float
    right_residual: float
    control: float
    tolerance: float

    @property
    def compatible(self) -> bool:
        return self.left_residual <= self.tolerance and self.right_residual <= self.tolerance


def compatibility_check(u0: StateField, law: FeedbackLaw | None) -> CompatibilityReport:
    """Residuals of u(0) = 0 and u(1) = F(u) for an initial profile."""
    control = law(u0) if law is not None else 0.0
    tol = 1e-6 * (1.0 + norms.h1(u0.values, u0.grid.h))
    return CompatibilityReport(
        left_residual=abs(float(u0.values[0])),
        right_residual=abs(float(u0.values[-1]) - control),
        control=control,
        tolerance=tol,
    )
