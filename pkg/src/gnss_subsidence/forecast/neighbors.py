"""Memory-based regressors: k nearest neighbours and the general regression network."""

import numpy as np
from scipy.special import logsumexp

from .kernels import pairwise_sq_distances


class NearestNeighbors:
    """
    Weighted mean of the targets of the ``k`` closest training windows.

    With inverse-distance weights an exact match takes all the weight
    (shared equally among exact matches). Ties in distance go to the
    earlier training pair.
    """

    def fit(self, x, y, params, rng=None):
        self.x = np.array(x, dtype=float)
        self.y = np.array(y, dtype=float)
        self.k = min(int(params["k"]), self.y.size)
        self.weights = params["weights"]
        self.diagnostics = {"k": self.k, "weights": self.weights, "stored_pairs": int(self.y.size)}
        return self

    def predict(self, xq):
        d2 = pairwise_sq_distances(np.atleast_2d(xq), self.x)
        idx = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
        d = np.sqrt(np.take_along_axis(d2, idx, axis=1))
        ty = self.y[idx]
        if self.weights == "uniform":
            return ty.mean(axis=1)
        out = np.empty(d.shape[0])
        for i in range(d.shape[0]):
            exact = d[i] == 0.0
            if exact.any():
                out[i] = ty[i, exact].mean()
            else:
                w = 1.0 / d[i]
                out[i] = np.dot(w, ty[i]) / w.sum()
        return out


def silverman_bandwidth(x):
    """Silverman-style rule ``s * (4 / ((d + 2) n)) ** (1 / (d + 4))``, ``s`` the mean per-lag std."""
    x = np.atleast_2d(x)
    n, d = x.shape
    s = float(np.mean(np.std(x, axis=0)))
    if not s > 0:
        s = 1.0
    return s * (4.0 / ((d + 2) * n)) ** (1.0 / (d + 4))


class GeneralRegression:
    """
    Nadaraya-Watson estimator with a Gaussian kernel.

    Weights are normalised in log space, so very small bandwidths degrade
    gracefully to the nearest-neighbour prediction instead of 0/0.
    """

    def fit(self, x, y, params, rng=None):
        self.x = np.array(x, dtype=float)
        self.y = np.array(y, dtype=float)
        bw = params["bandwidth"]
        self.bandwidth = silverman_bandwidth(self.x) if bw is None else float(bw)
        self.diagnostics = {"bandwidth": self.bandwidth}
        return self

    def weights(self, xq):
        logw = -0.5 * pairwise_sq_distances(np.atleast_2d(xq), self.x) / self.bandwidth**2
        return np.exp(logw - logsumexp(logw, axis=1, keepdims=True))

    def predict(self, xq):
        return self.weights(xq) @ self.y
