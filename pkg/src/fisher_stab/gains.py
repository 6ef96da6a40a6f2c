"""Assembly of the finite-dimensional Dirichlet feedback law.

Given N unstable modes and shifts rho < gamma_1 < ... < gamma_N:

    B0       = d d^T,                     d_i = phi_i'(1)
    Lambda_k = diag(1 / (gamma_k - lambda_i))
    B_k      = Lambda_k B0 Lambda_k
    B        = (B_1 + ... + B_N)^{-1}
    U_k(u)   = <B m(u), Lambda_k d>,       m(u)_i = <u, phi_i>
    U(u)     = sum_k U_k(u) = <g, m(u)>,   g = B sum_k Lambda_k d
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .exceptions import (
    DegenerateInputError,
    GainConfigError,
    ResonanceError,
    SingularGainError,
)
from .spectral import (
    RESONANCE_TOL,
    Grid,
    SpectralData,
    StateField,
    eigenvalue,
    projection_matrix,
    window_weights,
)

MIN_GAMMA_GAP = 1e-6
SINGULAR_RTOL = 1e-12


def default_gammas(rho: float, n: int) -> np.ndarray:
    """Evenly spaced shifts rho + 5k, k = 1..n."""
    return rho + 5.0 * np.arange(1, n + 1)


@dataclass(frozen=True)
class GainConfig:
    gammas: tuple
    rho: float

    def __post_init__(self):
        g = np.asarray(self.gammas, dtype=float).ravel()
        object.__setattr__(self, "gammas", tuple(float(v) for v in g))
        if not np.all(np.isfinite(g)):
            raise GainConfigError("shift constants must be finite")
        if g.size and not g[0] > self.rho:
            raise GainConfigError(
                f"need rho < gamma_1, got rho={self.rho}, gamma_1={g[0]}"
            )
        if g.size > 1 and np.min(np.diff(g)) < MIN_GAMMA_GAP:
            raise GainConfigError(
                f"shift constants must increase with gaps >= {MIN_GAMMA_GAP}: {g.tolist()}"
            )

    def check_against(self, spectral: SpectralData) -> None:
        if len(self.gammas) != spectral.n_unstable:
            raise GainConfigError(
                f"{len(self.gammas)} shift constants given for "
                f"{spectral.n_unstable} unstable modes"
            )
        for gamma in self.gammas:
            # nearest eigenvalue of the whole spectrum, not just the unstable part
            j0 = max(int(np.rint(np.sqrt(max(gamma + spectral.alpha, 0.0)) / np.pi)), 1)
            for j in {max(j0 - 1, 1), j0, j0 + 1}:
                if abs(gamma - eigenvalue(spectral.alpha, j)) <= RESONANCE_TOL:
                    raise ResonanceError(f"gamma={gamma} coincides with lambda_{j}")


@dataclass(frozen=True)
class GainSet:
    spectral: SpectralData
    gammas: np.ndarray
    b0: np.ndarray
    lambda_mats: tuple
    bk: tuple
    sum_bk: np.ndarray
    b: np.ndarray
    t: np.ndarray
    cond_b: float

    @property
    def n(self) -> int:
        return self.spectral.n_unstable

    @property
    def det_sum_bk(self) -> float:
        return float(np.linalg.det(self.sum_bk))

    @property
    def min_eig_sum_bk(self) -> float:
        return float(_squared_singular_values(self.t)[0])

    def shift_vectors(self) -> np.ndarray:
        """Row k is Lambda_k d; this is also the T matrix of the two-mode example."""
        return self.t


def gram_matrix(spectral: SpectralData) -> np.ndarray:
    d = spectral.normal_derivs
    return np.outer(d, d)


def lambda_matrix(gamma: float, spectral: SpectralData) -> np.ndarray:
    gap = gamma - spectral.lambdas
    if np.any(np.abs(gap) <= RESONANCE_TOL):
        j = int(np.argmin(np.abs(gap))) + 1
        raise ResonanceError(f"gamma={gamma} resonates with lambda_{j}")
    return np.diag(1.0 / gap)


def _squared_singular_values(t: np.ndarray) -> np.ndarray:
    return np.linalg.svd(t, compute_uv=False)[::-1] ** 2


def sum_bk_eigenvalues(gammas: Sequence[float], spectral: SpectralData) -> np.ndarray:
    """Eigenvalues of B_1 + ... + B_N, ascending.

    The sum equals T^T T with row k of T equal to Lambda_k d, so the squared
    singular values of T give the spectrum without the cancellation an
    eigensolve of the assembled sum suffers once its condition passes ~1e8.
    """
    t = np.array([np.diag(lambda_matrix(g, spectral)) * spectral.normal_derivs for g in gammas])
    return _squared_singular_values(t)


def assemble_gains(config: GainConfig, spectral: SpectralData) -> GainSet:
    config.check_against(spectral)
    n = spectral.n_unstable
    if n == 0:
        raise GainConfigError("no unstable modes below rho; nothing to stabilize")
    gammas = np.asarray(config.gammas)
    b0 = gram_matrix(spectral)
    lams = tuple(lambda_matrix(g, spectral) for g in gammas)
    bk = tuple(lam @ b0 @ lam for lam in lams)
    s = np.sum(bk, axis=0)
    t = np.array([lam @ spectral.normal_derivs for lam in lams])
    eigs = _squared_singular_values(t)
    if not eigs[0] > SINGULAR_RTOL * eigs[-1]:
        raise SingularGainError(
            f"sum of B_k is numerically singular (eigenvalues {eigs[0]:.3e} .. {eigs[-1]:.3e})"
        )
    lu = scipy.linalg.lu_factor(s)
    b = scipy.linalg.lu_solve(lu, np.eye(n))
    b = 0.5 * (b + b.T)
    return GainSet(
        spectral=spectral,
        gammas=gammas,
        b0=b0,
        lambda_mats=lams,
        bk=bk,
        sum_bk=s,
        b=b,
        t=t,
        cond_b=float(eigs[-1] / eigs[0]),
    )


def cauchy_determinant_check(gammas: Sequence[float], lambdas: Sequence[float]):
    """Determinant of [1 / (gamma_k - lambda_i)] computed two ways.

    Returns ``(numeric, closed_form)``; the closed form is the Cauchy product
    prod_{i<k} (gamma_k - gamma_i)(lambda_i - lambda_k) / prod_{k,i} (gamma_k - lambda_i).
    """
    g = np.asarray(gammas, dtype=float).ravel()
    lam = np.asarray(lambdas, dtype=float).ravel()
    if g.size != lam.size or g.size == 0:
        raise DegenerateInputError("need equally many (>= 1) gammas and lambdas")
    diff = g[:, None] - lam[None, :]
    if (
        np.any(np.abs(diff) <= RESONANCE_TOL)
        or np.unique(g).size != g.size
        or np.unique(lam).size != lam.size
    ):
        raise DegenerateInputError("Cauchy matrix parameters must be pairwise distinct")
    numeric = float(np.linalg.det(1.0 / diff))
    iu = np.triu_indices(g.size, k=1)
    num = np.prod(g[iu[1]] - g[iu[0]]) * np.prod(lam[iu[0]] - lam[iu[1]])
    closed = float(num / np.prod(diff))
    if numeric == 0.0 or closed == 0.0:
        raise DegenerateInputError("Cauchy determinant vanished numerically")
    return numeric, closed


def gain_vector(gains: GainSet) -> np.ndarray:
    return gains.b @ gains.t.sum(axis=0)


@dataclass(frozen=True)
class FeedbackLaw:
    gain_vector: np.ndarray
    window: tuple
    spectral: SpectralData
    gains: GainSet | None = field(default=None, repr=False)

    @classmethod
    def from_gains(cls, gains: GainSet, window=(0.0, 1.0)) -> "FeedbackLaw":
        return cls(gain_vector(gains), tuple(map(float, window)), gains.spectral, gains)

    @classmethod
    def zero(cls, spectral: SpectralData, window=(0.0, 1.0)) -> "FeedbackLaw":
        return cls(np.zeros(spectral.n_unstable), tuple(map(float, window)), spectral)

    @property
    def n(self) -> int:
        return len(self.gain_vector)

    def modal_vector(self, field: StateField) -> np.ndarray:
        return projection_matrix(self.n, field.grid, self.window) @ field.values

    def weights(self, grid: Grid) -> np.ndarray:
        """Nodal weights w with U(u) = w @ u."""
        if self.n == 0:
            window_weights(grid, self.window)
            return np.zeros(grid.m + 1)
        return projection_matrix(self.n, grid, self.window).T @ self.gain_vector

    def shift_controls(self, field: StateField) -> np.ndarray:
        """The individual U_k; they sum to the applied control."""
        if self.gains is None:
            raise ValueError("law was built without a GainSet")
        return self.gains.t @ (self.gains.b @ self.modal_vector(field))

    def __call__(self, field: StateField) -> float:
        return feedback_control(field, self)


def feedback_control(field: StateField, law: FeedbackLaw) -> float:
    if law.n == 0:
        window_weights(field.grid, law.window)
        return 0.0
    return float(law.gain_vector @ law.modal_vector(field))
