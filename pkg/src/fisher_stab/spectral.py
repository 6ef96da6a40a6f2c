"""Spectrum of A u = -u'' - alpha u on (0, 1) with Dirichlet conditions.

Eigenfunctions are kept unnormalized, ``phi_j(x) = sin(pi j x)``, which is the
convention the feedback matrices are written against.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import ConfigError, WindowError

RESONANCE_TOL = 1e-9


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of u_t = u_xx + alpha u - beta u^2.

    ``beta = 0`` selects the linearized model; ``alpha = 0`` (the heat
    equation) is accepted for scheme validation.
    """

    alpha: float
    beta: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha < 0:
            raise ConfigError(f"alpha must be non-negative, got {self.alpha!r}")
        if not np.isfinite(self.beta) or self.beta < 0:
            raise ConfigError(f"beta must be non-negative, got {self.beta!r}")

    @property
    def linearized(self) -> "ModelParams":
        return ModelParams(self.alpha, 0.0)


@dataclass(frozen=True)
class Grid:
    """Uniform mesh of [0, 1] with ``m`` intervals."""

    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ConfigError(f"grid needs at least 2 intervals, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))

    @property
    def h(self) -> float:
        return 1.0 / self.m

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.m + 1)

    def snap(self, x: float) -> int:
        """Index of the node nearest to ``x``."""
        return int(np.clip(np.rint(x * self.m), 0, self.m))


@dataclass(frozen=True)
class StateField:
    """Solution profile sampled at the nodes of ``grid``."""

    grid: Grid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.m + 1,):
            raise ConfigError(
                f"expected {self.grid.m + 1} nodal values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ConfigError("state field has non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, func, grid: Grid, time: float = 0.0) -> "StateField":
        return cls(grid, func(grid.nodes), time)

    def __add__(self, other: "StateField") -> "StateField":
        return StateField(self.grid, self.values + other.values, self.time)

    def __sub__(self, other: "StateField") -> "StateField":
        return StateField(self.grid, self.values - other.values, self.time)

    def __mul__(self, c: float) -> "StateField":
        return StateField(self.grid, c * self.values, self.time)

    __rmul__ = __mul__


@dataclass(frozen=True)
class SpectralData:
    alpha: float
    rho: float
    n_unstable: int
    lambdas: np.ndarray = field(repr=False)
    normal_derivs: np.ndarray = field(repr=False)

    @classmethod
    def compute(cls, alpha: float, rho: float) -> "SpectralData":
        n = unstable_mode_count(alpha, rho)
        j = np.arange(1, n + 1)
        return cls(
            alpha=float(alpha),
            rho=float(rho),
            n_unstable=n,
            lambdas=eigenvalue(alpha, j),
            normal_derivs=boundary_normal_derivative(j),
        )

    def eigenfunctions(self, grid: Grid) -> np.ndarray:
        """Rows are sin(pi j x) for j = 1..N sampled on ``grid``."""
        j = np.arange(1, self.n_unstable + 1)
        return _sines(j, grid)


def eigenvalue(alpha: float, j):
    """(pi j)^2 - alpha. Accepts scalar or array ``j``."""
    j = np.asarray(j)
    if np.any(j < 1):
        raise ConfigError("mode index must be >= 1")
    out = (np.pi * j) ** 2 - alpha
    return float(out) if out.ndim == 0 else out


def unstable_mode_count(alpha: float, rho: float) -> int:
    """Largest N with lambda_N < rho, so that lambda_{N+1} >= rho."""
    if not rho > 0:
        raise ConfigError(f"rho must be positive, got {rho!r}")
    # first guess from the closed form, then settle exactly against the formula
    n = max(int(np.floor(np.sqrt(max(rho + alpha, 0.0)) / np.pi)), 0)
    while n > 0 and eigenvalue(alpha, n) >= rho:
        n -= 1
    while eigenvalue(alpha, n + 1) < rho:
        n += 1
    for j in (n, n + 1):
        if j >= 1 and abs(eigenvalue(alpha, j) - rho) <= RESONANCE_TOL:
            raise ConfigError(
                f"rho={rho} coincides with lambda_{j}; the unstable cutoff is ambiguous"
            )
    return n


def _sines(j, grid: Grid) -> np.ndarray:
    x = grid.nodes
    out = np.sin(np.pi * np.outer(np.atleast_1d(j), x))
    out[:, 0] = 0.0
    out[:, -1] = 0.0
    return out


def eigenfunction_values(j: int, grid: Grid) -> StateField:
    if j < 1:
        raise ConfigError("mode index must be >= 1")
    return StateField(grid, _sines(j, grid)[0])


def boundary_normal_derivative(j):
    """phi_j'(1) = pi j cos(pi j) = pi j (-1)^j."""
    j = np.asarray(j)
    if np.any(j < 1):
        raise ConfigError("mode index must be >= 1")
    out = np.pi * j * np.where(j % 2 == 0, 1.0, -1.0)
    return float(out) if out.ndim == 0 else out


def window_weights(grid: Grid, window: Sequence[float] = (0.0, 1.0)) -> np.ndarray:
    """Composite trapezoid weights over ``window`` with endpoints snapped to nodes.

    Nodes outside the window get weight zero.
    """
    a, b = float(window[0]), float(window[1])
    if not (0.0 <= a < b <= 1.0):
        raise WindowError(f"window must satisfy 0 <= a < b <= 1, got [{a}, {b}]")
    ia, ib = grid.snap(a), grid.snap(b)
    if ib - ia < 2:
        raise WindowError(
            f"window [{a}, {b}] spans {ib - ia} cell(s); at least 2 are required"
        )
    w = np.zeros(grid.m + 1)
    w[ia : ib + 1] = grid.h
    w[ia] *= 0.5
    w[ib] *= 0.5
    return w


def projection_matrix(spectral_or_n, grid: Grid, window=(0.0, 1.0)) -> np.ndarray:
    """Matrix P with (P @ u)_j equal to the windowed projection of u onto phi_j."""
    n = (
        spectral_or_n.n_unstable
        if isinstance(spectral_or_n, SpectralData)
        else int(spectral_or_n)
    )
    if n == 0:
        return np.zeros((0, grid.m + 1))
    return _sines(np.arange(1, n + 1), grid) * window_weights(grid, window)


def modal_projection(field: StateField, j: int, window=(0.0, 1.0)) -> float:
    """Trapezoid approximation of the integral of u sin(pi j x) over ``window``."""
    if j < 1:
        raise ConfigError("mode index must be >= 1")
    w = window_weights(field.grid, window)
    return float(np.dot(w * _sines(j, field.grid)[0], field.values))


def modal_vector(field: StateField, n: int, window=(0.0, 1.0)) -> np.ndarray:
    return projection_matrix(n, field.grid, window) @ field.values
