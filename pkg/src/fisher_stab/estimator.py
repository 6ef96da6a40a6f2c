"""scikit-learn style front end for the boundary feedback law."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .gains import FeedbackLaw, GainConfig, assemble_gains, default_gammas
from .simulate import SimConfig, simulate
from .spectral import Grid, ModelParams, SpectralData, projection_matrix
from .validation import check_states, check_window


class BoundaryFeedbackController(TransformerMixin, BaseEstimator):
    """Finite-dimensional Dirichlet feedback for u_t = u_xx + alpha u - beta u^2.

    ``fit`` synthesizes the gains for the grid implied by ``X`` (rows are
    nodal states on a uniform mesh of [0, 1]). ``transform`` returns the
    windowed projections onto the unstable eigenfunctions and ``predict``
    the boundary control U = <g, m(u)>.

    Parameters
    ----------
    alpha : float
        Linear growth coefficient.
    rho : float
        Modes with eigenvalue below ``rho`` are fed back.
    gammas : sequence of float, optional
        Shift constants, one per unstable mode. Defaults to rho + 5k.
    window : (float, float)
        Observation window [a, b] used for the projections.
    """

    def __init__(self, alpha=30.0, rho=12.0, gammas=None, window=(0.0, 1.0)):
        self.alpha = alpha
        self.rho = rho
        self.gammas = gammas
        self.window = window

    def fit(self, X, y=None):
        X = check_states(X)
        window = check_window(self.window)
        self.grid_ = Grid(X.shape[1] - 1)
        self.spectral_ = SpectralData.compute(self.alpha, self.rho)
        n = self.spectral_.n_unstable
        gammas = default_gammas(self.rho, n) if self.gammas is None else self.gammas
        self.gains_ = assemble_gains(GainConfig(tuple(gammas), self.rho), self.spectral_)
        self.law_ = FeedbackLaw.from_gains(self.gains_, window)
        self.projection_ = projection_matrix(n, self.grid_, window)
        self.coef_ = self.law_.gain_vector
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "law_")
        X = check_states(X, self.n_features_in_)
        return X @ self.projection_.T

    def predict(self, X):
        return self.transform(X) @ self.coef_

    def simulate(self, u0="5xexp", beta=0.0, dt=1e-4, t_end=2.0, **kwargs):
        """Closed-loop run on the fitted grid."""
        check_is_fitted(self, "law_")
        cfg = SimConfig(
            ModelParams(self.alpha, beta),
            grid_m=self.grid_.m,
            dt=dt,
            t_end=t_end,
            law=self.law_,
            u0_spec=u0,
            **kwargs,
        )
        return simulate(cfg)

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.requires_fit = True
        return tags


def fit_on_grid(m: int, **params) -> BoundaryFeedbackController:
    """Fit a controller for an ``m``-interval grid without sample data."""
    return BoundaryFeedbackController(**params).fit(np.zeros((1, m + 1)))
