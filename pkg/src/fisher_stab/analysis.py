"""Norms, decay fits, stability verdicts and observation-window sweeps."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import norms
from .exceptions import ConfigError, FisherStabError, InsufficientDataError
from .gains import FeedbackLaw
from .lifting import ReducedSystem, reduced_ode_integrate, unit_lifts, v_transform
from .simulate import SimConfig, Trace, simulate
from .spectral import StateField, projection_matrix

logger = logging.getLogger(__name__)

NORM_FLOOR = 1e-14
MIN_FIT_SAMPLES = 10
STABLE_RATIO = 1e-2
MIN_HORIZON = 2.0
TRANSIENT_FRACTION = 0.2
# No horizon is fixed for the window experiments. At T=2 the
# slowest admissible window (a=0.24, rate ~0.87) cannot reach the 1e-2 ratio.
SWEEP_HORIZON = 4.0

STABILIZED = "stabilized"
NOT_STABILIZED = "not_stabilized"
FAILED = "error"


def l2_norm(field: StateField) -> float:
    return norms.l2(field.values, field.grid.h)


def h1_norm(field: StateField) -> float:
    return norms.h1(field.values, field.grid.h)


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of log ||u(t)|| = log_c - mu t."""

    mu: float
    log_c: float
    r_squared: float
    window: tuple

    @property
    def c(self) -> float:
        return float(np.exp(self.log_c))


def fit_decay(trace: Trace, t_window=None, norm_kind: str = "l2") -> DecayFit:
    """Fit an exponential envelope to a trace.

    The default window drops the first 20% of the horizon, where transients
    from incompatible initial data dominate.
    """
    t = np.asarray(trace.times, dtype=float)
    y = np.asarray(trace.norm(norm_kind), dtype=float)
    if t_window is None:
        t_window = (t[0] + TRANSIENT_FRACTION * (t[-1] - t[0]), t[-1])
    lo, hi = map(float, t_window)
    if lo > hi or lo < t[0] - 1e-12 or hi > t[-1] + 1e-12:
        raise InsufficientDataError(
            f"window [{lo}, {hi}] is outside the trace range [{t[0]}, {t[-1]}]"
        )
    mask = (t >= lo - 1e-12) & (t <= hi + 1e-12) & (y > NORM_FLOOR) & np.isfinite(y)
    if mask.sum() < MIN_FIT_SAMPLES:
        raise InsufficientDataError(
            f"only {mask.sum()} samples above {NORM_FLOOR:g} in [{lo}, {hi}]"
        )
    ts, ly = t[mask], np.log(y[mask])
    slope, intercept = np.polyfit(ts, ly, 1)
    resid = ly - (slope * ts + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot <= 1e-30 * max(len(ly), 1) else max(0.0, 1.0 - ss_res / ss_tot)
    return DecayFit(float(-slope), float(intercept), r2, (lo, hi))


@dataclass(frozen=True)
class Classification:
    verdict: str
    final_ratio: float
    mu_tail: float
    blowup: bool

    @property
    def stabilized(self) -> bool:
        return self.verdict == STABILIZED


def classify_stability(trace: Trace, threshold: float = STABLE_RATIO) -> Classification:
    """Stabilized iff no blowup, ||u(T)|| <= threshold ||u(0)||, and decay on the last half."""
    if trace.blowup_flag:
        return Classification(NOT_STABILIZED, float("inf"), float("nan"), True)
    if trace.horizon < MIN_HORIZON - 1e-9:
        raise ConfigError(f"horizon {trace.horizon:g} is shorter than {MIN_HORIZON:g}")
    l0, lt = float(trace.l2[0]), float(trace.l2[-1])
    if l0 == 0.0:
        # the equilibrium itself
        return Classification(STABILIZED, 0.0, float("inf"), False)
    ratio = lt / l0
    t_end = float(trace.times[-1])
    try:
        mu = fit_decay(trace, (0.5 * t_end, t_end)).mu
    except InsufficientDataError:
        # the tail sank below the fit floor: decayed to rounding level
        mu = float("inf") if lt <= NORM_FLOOR else float("nan")
    ok = ratio <= threshold and mu > 0
    return Classification(STABILIZED if ok else NOT_STABILIZED, ratio, mu, False)


@dataclass
class SweepPoint:
    a: float
    verdict: str
    mu_fit: float
    final_ratio: float
    message: str = ""


@dataclass
class SweepResult:
    a_values: np.ndarray
    verdicts: list
    critical_a: float
    points: list = field(default_factory=list)
    probes: list = field(default_factory=list)
    monotone: bool = True


def _run_point(base: SimConfig, a: float, b: float) -> SweepPoint:
    try:
        res = simulate(base.with_window(a, b))
        cls = classify_stability(res.trace)
        try:
            mu = fit_decay(res.trace).mu
        except InsufficientDataError:
            mu = cls.mu_tail
        return SweepPoint(a, cls.verdict, mu, cls.final_ratio)
    except FisherStabError as exc:
        logger.warning("sweep point a=%g failed: %s", a, exc)
        return SweepPoint(a, FAILED, float("nan"), float("nan"), str(exc))


def sweep_window(
    base_config: SimConfig,
    b: float = 1.0,
    a_range=(0.0, 0.35),
    resolution: float = 0.01,
    grid_step: float = 0.05,
    horizon: float | None = SWEEP_HORIZON,
) -> SweepResult:
    """Classify closed-loop runs with window [a, b] over a grid of a, then bisect.

    ``critical_a`` is the midpoint of the final bracket between the last
    stabilized and first non-stabilized value; NaN when the grid shows no
    such transition.
    """
    if base_config.law is None:
        raise ConfigError("sweep needs a closed-loop base config")
    a_min, a_max = map(float, a_range)
    if not (0.0 <= a_min <= a_max < b <= 1.0):
        raise ConfigError(f"need 0 <= a_min <= a_max < b <= 1, got [{a_min}, {a_max}], b={b}")
    if resolution <= 0 or grid_step <= 0:
        raise ConfigError("resolution and grid step must be positive")
    if horizon is not None:
        base_config = replace(base_config, t_end=float(horizon))

    n = int(np.floor((a_max - a_min) / grid_step + 1e-9))
    a_values = np.round(a_min + grid_step * np.arange(n + 1), 12)
    if a_values[-1] < a_max - 1e-12:
        a_values = np.append(a_values, a_max)
    points = [_run_point(base_config, float(a), b) for a in a_values]
    verdicts = [p.verdict for p in points]

    stable = [v == STABILIZED for v in verdicts]
    valid = [v != FAILED for v in verdicts]
    monotone = True
    seen_unstable = False
    for s, ok in zip(stable, valid):
        if not ok:
            continue
        if not s:
            seen_unstable = True
        elif seen_unstable:
            monotone = False
    if not monotone:
        warnings.warn(
            "window sweep verdicts are not monotone in a: "
            + ", ".join(f"{p.a:g}:{p.verdict}" for p in points),
            RuntimeWarning,
            stacklevel=2,
        )

    critical = float("nan")
    probes = []
    for i in range(len(points) - 1):
        if stable[i] and verdicts[i + 1] == NOT_STABILIZED:
            lo, hi = float(a_values[i]), float(a_values[i + 1])
            while hi - lo > resolution:
                mid = 0.5 * (lo + hi)
                p = _run_point(base_config, mid, b)
                probes.append(p)
                if p.verdict == STABILIZED:
                    lo = mid
                else:
                    hi = mid
            critical = 0.5 * (lo + hi)
            break
    if np.isnan(critical):
        warnings.warn("no stabilized -> not stabilized transition on the sweep grid", RuntimeWarning, stacklevel=2)
    return SweepResult(a_values, verdicts, critical, points, probes, monotone)


def modal_series(snapshots, law: FeedbackLaw, lifts=None):
    """Unstable modal amplitudes of the lifted state v for each snapshot.

    Returns ``(times, series)`` with ``series`` of shape (len(snapshots), N).
    """
    if not snapshots:
        return np.empty(0), np.empty((0, law.n))
    grid = snapshots[0].grid
    if lifts is None:
        lifts = unit_lifts(law, grid)
    p = projection_matrix(law.n, grid)
    times = np.array([s.time for s in snapshots])
    series = np.array([p @ v_transform(s, law, grid, lifts).values for s in snapshots])
    return times, series


def pde_vs_reduced_check(times, modal, rs: ReducedSystem, t_max: float = 0.5) -> float:
    """Max over t <= t_max of |v_pde(t) - v_ode(t)| / |v(0)|.

    The ODE dv/dt = M v is integrated by RK4 from the first PDE sample.
    Sample times must be uniformly spaced and start at 0.
    """
    times = np.asarray(times, dtype=float)
    modal = np.atleast_2d(np.asarray(modal, dtype=float))
    n = rs.m_matrix.shape[0]
    if modal.shape[1] != n or modal.shape[0] != times.size:
        raise ValueError(
            f"modal series of shape {modal.shape} does not match {times.size} times x {n} modes"
        )
    keep = times <= t_max + 1e-12
    times, modal = times[keep], modal[keep]
    v0 = modal[0]
    scale = float(np.linalg.norm(v0))
    if scale == 0.0:
        return 0.0 if not np.any(modal) else float("inf")
    if times.size == 1:
        return 0.0
    spacing = np.diff(times)
    if not np.allclose(spacing, spacing[0], rtol=1e-9, atol=1e-12) or abs(times[0]) > 1e-12:
        raise ValueError("PDE samples must be uniform in time and start at t=0")
    sub = int(np.ceil(spacing[0] / (0.1 / rs.gammas[-1]) - 1e-9))
    dt = spacing[0] / max(sub, 1)
    _, ode = reduced_ode_integrate(rs, v0, float(times[-1]), dt)
    ode = ode[:: max(sub, 1)][: times.size]
    return float(np.max(np.linalg.norm(modal - ode, axis=1)) / scale)
