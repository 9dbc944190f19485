"""Gaussian-process regression: exact posterior mean with fixed hyperparameters."""

import logging

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ..errors import ConditioningError
from .kernels import Kernel

logger = logging.getLogger(__name__)


class GaussianProcess:
    """
    Posterior mean ``m + k(x, X) (K + s2 I)^-1 (y - m)``.

    ``m`` is the mean of the training targets (constant-mean handling), so
    a common shift of inputs and targets shifts predictions by the same
    amount for the stationary kernel. The noise variance is ``noise`` times
    the target variance; ``jitter`` (relative to the signal variance) is
    added to the diagonal for numerical safety only.
    """

    def fit(self, x, y, params, rng=None):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self.x = x.copy()
        self.mean = float(np.mean(y))
        yc = y - self.mean
        var_y = float(np.var(y))
        signal = params["signal_variance"]
        if signal is None:
            signal = var_y if var_y > 0 else 1.0
        self.kernel = Kernel(params["kernel"], x, params["length_scale"], signal)
        noise_var = params["noise"] * var_y
        jitter = params["jitter"] * signal
        if not np.any(yc):
            # constant targets: the posterior mean is the constant itself
            self.alpha = np.zeros_like(yc)
            self.factor = None
        else:
            k = self.kernel(x, x)
            k[np.diag_indices_from(k)] += noise_var + jitter
            try:
                self.factor = cho_factor(k, lower=True, check_finite=True)
            except LinAlgError:
                raise ConditioningError(
                    f"GP kernel matrix not positive definite with jitter {params['jitter']:g}; "
                    "increase the jitter or the noise level"
                ) from None
            self.alpha = cho_solve(self.factor, yc)
        resid = yc - (self.kernel(x, x) @ self.alpha if self.factor is not None else 0.0)
        self.diagnostics = {
            "noise_variance": noise_var,
            "jitter": jitter,
            "training_rmse": float(np.sqrt(np.mean(resid**2))) if y.size else 0.0,
            **self.kernel.describe(),
        }
        return self

    def predict(self, xq):
        kq = self.kernel(np.atleast_2d(xq), self.x)
        return self.mean + kq @ self.alpha

    def predict_variance(self, xq):
        xq = np.atleast_2d(xq)
        prior = np.diag(self.kernel(xq, xq)).copy()
        if self.factor is None:
            return prior
        kq = self.kernel(xq, self.x)
        v = cho_solve(self.factor, kq.T)
        var = prior - np.einsum("ij,ji->i", kq, v)
        logger.debug("GP predictive variance %s", var)
        return np.maximum(var, 0.0)
