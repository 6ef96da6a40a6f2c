"""Explicit finite-dimensional boundary feedback for Fisher's equation."""
from .analysis import (
    DecayFit,
    SweepResult,
    classify_stability,
    fit_decay,
    h1_norm,
    l2_norm,
    pde_vs_reduced_check,
    sweep_window,
)
from .estimator import BoundaryFeedbackController
from .gains import (
    FeedbackLaw,
    GainConfig,
    GainSet,
    assemble_gains,
    cauchy_determinant_check,
    feedback_control,
    gain_vector,
    gram_matrix,
    lambda_matrix,
)
from .lifting import (
    LiftingSolution,
    ReducedSystem,
    lyapunov_certificate,
    reduced_matrix,
    reduced_ode_integrate,
    solve_lift,
    v_transform,
    verify_modal_identity,
)
from .simulate import SimConfig, Trace, compatibility_check, simulate
from .spectral import (
    Grid,
    ModelParams,
    SpectralData,
    StateField,
    boundary_normal_derivative,
    eigenfunction_values,
    eigenvalue,
    modal_projection,
    unstable_mode_count,
)

__version__ = "0.1.0"
