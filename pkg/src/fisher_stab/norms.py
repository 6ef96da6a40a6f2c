"""Array-level L2 / H1 norms on a uniform grid (trapezoid rule)."""
import numpy as np


def trapz_sq(values: np.ndarray, h: float) -> float:
    return float(h * (np.dot(values, values) - 0.5 * (values[0] ** 2 + values[-1] ** 2)))


def l2(values: np.ndarray, h: float) -> float:
    return float(np.sqrt(trapz_sq(values, h)))


def h1(values: np.ndarray, h: float) -> float:
    """sqrt(|u|^2 + |u_x|^2); u_x centered inside, one-sided at the ends."""
    du = np.gradient(values, h)
    return float(np.sqrt(trapz_sq(values, h) + trapz_sq(du, h)))
