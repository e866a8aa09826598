"""Low-dimensional similarity curve 1 / (1 + a d^(2b)) and its (a, b) fit."""

from __future__ import annotations

import warnings

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from ..errors import FitDiverged

N_GRID = 300
MAX_RMS_RESIDUAL = 0.1


def phi_ab(d, a: float, b: float):
    """Similarity in the embedding; equals 1 at d = 0 and lies in (0, 1] for d >= 0."""
    d = np.asarray(d, dtype=np.float64)
    return 1.0 / (1.0 + a * d ** (2.0 * b))


def target_curve(x, min_dist: float, spread: float):
    x = np.asarray(x, dtype=np.float64)
    return np.where(x <= min_dist, 1.0, np.exp(-(x - min_dist) / spread))


def fit_ab(min_dist: float = 0.1, spread: float = 1.0) -> tuple[float, float]:
    """Least-squares fit of phi_ab to the offset exponential on (0, 3*spread]."""
    if not spread > 0:
        raise ValueError(f"spread must be > 0, got {spread}")
    if not 0 <= min_dist < 3 * spread:
        raise ValueError(f"min_dist must lie in [0, 3*spread), got {min_dist}")

    x = np.linspace(3 * spread / N_GRID, 3 * spread, N_GRID)
    y = target_curve(x, min_dist, spread)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", OptimizeWarning)
            (a, b), _ = curve_fit(phi_ab, x, y, p0=(1.0, 1.0), maxfev=10000)
    except (RuntimeError, OptimizeWarning) as exc:
        raise FitDiverged(f"curve fit failed for min_dist={min_dist}, spread={spread}: {exc}") from None

    rms = float(np.sqrt(np.mean((phi_ab(x, a, b) - y) ** 2)))
    if not (np.isfinite(a) and np.isfinite(b) and a > 0 and b > 0) or rms > MAX_RMS_RESIDUAL:
        raise FitDiverged(f"curve fit unusable: a={a}, b={b}, rms residual {rms:.3g}")
    return float(a), float(b)
