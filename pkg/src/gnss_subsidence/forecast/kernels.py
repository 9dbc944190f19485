"""Covariance functions and the scale rules shared by the kernel models."""

import numpy as np
from scipy.spatial.distance import cdist


def pairwise_sq_distances(a, b):
    """Pairwise squared Euclidean distances computed from explicit differences."""
    return cdist(np.atleast_2d(a), np.atleast_2d(b), "sqeuclidean")


def median_distance(x, max_points=2000):
    """Median pairwise distance between distinct rows; 1.0 when all coincide."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] > max_points:
        # evenly spaced subset keeps the rule deterministic
        x = x[np.linspace(0, x.shape[0] - 1, max_points).astype(int)]
    d2 = pairwise_sq_distances(x, x)
    iu = np.triu_indices(x.shape[0], k=1)
    d = np.sqrt(d2[iu])
    d = d[d > 0]
    return float(np.median(d)) if d.size else 1.0


def mean_sq_norm(x):
    """Scale for the linear kernel; 1.0 for all-zero inputs."""
    s = float(np.mean(np.sum(np.asarray(x, dtype=float) ** 2, axis=1))) if np.size(x) else 0.0
    return s if s > 0 else 1.0


def se_kernel(a, b, length_scale, variance=1.0):
    return variance * np.exp(-0.5 * pairwise_sq_distances(a, b) / length_scale**2)


def linear_kernel(a, b, scale, variance=1.0):
    """``variance * (1 + a.b / scale)``; the constant term carries the intercept."""
    return variance * (1.0 + np.atleast_2d(a) @ np.atleast_2d(b).T / scale)


class Kernel:
    """A fixed-hyperparameter kernel built from training inputs."""

    def __init__(self, name, x, length_scale=None, variance=1.0):
        self.name = name
        self.variance = float(variance)
        self.length_scale = float(length_scale) if length_scale is not None else median_distance(x)
        self.linear_scale = mean_sq_norm(x)

    def __call__(self, a, b):
        if self.name == "se":
            return se_kernel(a, b, self.length_scale, self.variance)
        if self.name == "linear":
            return linear_kernel(a, b, self.linear_scale, self.variance)
        if self.name == "se+linear":
            return (se_kernel(a, b, self.length_scale, self.variance)
                    + linear_kernel(a, b, self.linear_scale, self.variance))
        raise ValueError(f"unknown kernel {self.name!r}")

    def describe(self):
        return {"kernel": self.name, "length_scale": self.length_scale,
                "linear_scale": self.linear_scale, "variance": self.variance}
