"""
Classical two-line Theta method.

The theta = 0 line is the least-squares trend ``a + b t``. The theta = 2
line ``2 y_t - (a + b t)`` doubles the local curvature and is extrapolated
by simple exponential smoothing (flat forecast at the final level). The
forecast is the equal-weight mean of the two extrapolations, which works out
to the smoothed level plus half the trend slope per step.
"""

import numpy as np
from scipy.signal import lfilter

from ..errors import DomainError


def ses_levels(z, alpha):
    """
    Smoothed levels ``l_t = alpha z_t + (1 - alpha) l_{t-1}`` with ``l_1 = z_1``.
    """
    z = np.asarray(z, dtype=float)
    if z.size == 1:
        return z.copy()
    levels, _ = lfilter([alpha], [1.0, alpha - 1.0], z[1:], zi=[(1.0 - alpha) * z[0]])
    return np.concatenate([[z[0]], levels])


def ses_sse(z, alpha):
    """Sum of squared one-step-ahead errors ``z_t - l_{t-1}``, t = 2..n."""
    levels = ses_levels(z, alpha)
    err = np.asarray(z)[1:] - levels[:-1]
    return float(err @ err)


def alpha_grid(step=0.01):
    k = int(round(1.0 / step))
    return np.arange(1, k) * step


def fit_alpha(z, step=0.01):
    """Smoothing constant minimising the one-step SSE over an evenly spaced grid in (0, 1)."""
    grid = alpha_grid(step)
    sse = np.array([ses_sse(z, a) for a in grid])
    return float(grid[int(np.argmin(sse))]), sse


class ThetaMethod:
    """Fits on the raw training prefix; windows are ignored."""

    def fit_series(self, values, params):
        y = np.asarray(values, dtype=float)
        y = y[np.isfinite(y)]
        n = y.size
        if n < 3:
            raise DomainError(f"Theta needs at least 3 training values, got {n}")
        t = np.arange(1, n + 1, dtype=float)
        tc = t - t.mean()
        self.slope = float(tc @ (y - y.mean()) / (tc @ tc))
        self.intercept = float(y.mean() - self.slope * t.mean())
        self.n = n
        if np.ptp(y) == 0.0:
            self.alpha = 1.0
            self.level = float(y[-1])
            sse = np.zeros(1)
        else:
            z = 2.0 * y - (self.intercept + self.slope * t)
            self.alpha, sse = fit_alpha(z, params["alpha_step"])
            self.level = float(ses_levels(z, self.alpha)[-1])
        self.diagnostics = {
            "alpha": self.alpha,
            "slope_per_step": self.slope,
            "intercept": self.intercept,
            "sse": float(np.min(sse)),
        }
        return self

    def forecast(self, horizon):
        """Forecasts for steps ``n+1 .. n+horizon``."""
        h = np.arange(1, int(horizon) + 1, dtype=float)
        line = self.intercept + self.slope * (self.n + h)
        return 0.5 * (line + self.level)
