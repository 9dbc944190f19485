"""Radial basis function network: Gaussian units on k-means centres, linear output."""

import numpy as np

from ..errors import ConditioningError
from .kernels import pairwise_sq_distances


def kmeanspp_seeds(x, k, rng):
    """k-means++ seeding: each new centre drawn with probability proportional to D^2."""
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = pairwise_sq_distances(x, x[chosen[0]][None, :])[:, 0]
    while len(chosen) < k:
        total = d2.sum()
        if not total > 0:
            break
        nxt = int(rng.choice(n, p=d2 / total))
        chosen.append(nxt)
        d2 = np.minimum(d2, pairwise_sq_distances(x, x[nxt][None, :])[:, 0])
    return x[chosen].copy()


def lloyd(x, centers, iterations):
    for _ in range(iterations):
        label = np.argmin(pairwise_sq_distances(x, centers), axis=1)
        moved = centers.copy()
        for j in range(centers.shape[0]):
            members = x[label == j]
            if members.shape[0]:
                moved[j] = members.mean(axis=0)
        if np.array_equal(moved, centers):
            break
        centers = moved
    return centers


class RadialBasisNetwork:
    """
    ``f(x) = b + sum_j w_j exp(-|x - c_j|^2 / (2 s^2))``.

    Centres come from k-means++ seeding (drawn from the spec seed) refined
    by a few Lloyd iterations; the common width defaults to
    ``d_max / sqrt(2 M)`` over the centres. The output weights are the
    minimum-norm least-squares solution.
    """

    def fit(self, x, y, params, rng):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        m = min(int(params["centers"]), x.shape[0])
        centers = lloyd(x, kmeanspp_seeds(x, m, rng), int(params["lloyd_iterations"]))
        self.centers = centers
        if params["width"] is not None:
            self.width = float(params["width"])
        else:
            dmax = float(np.sqrt(pairwise_sq_distances(centers, centers).max())) if len(centers) > 1 else 0.0
            self.width = dmax / np.sqrt(2.0 * len(centers)) if dmax > 0 else 1.0
        design = self._design(x)
        coef, _, rank, sv = np.linalg.lstsq(design, y, rcond=None)
        if rank == 0 or not np.all(np.isfinite(coef)):
            raise ConditioningError("RBF output layer is singular; reduce the number of centres or set a width")
        self.coef = coef
        resid = y - design @ coef
        self.diagnostics = {
            "centers": int(len(centers)),
            "width": self.width,
            "rank": int(rank),
            "columns": int(design.shape[1]),
            "training_rmse": float(np.sqrt(np.mean(resid**2))),
        }
        return self

    def _design(self, x):
        phi = np.exp(-0.5 * pairwise_sq_distances(np.atleast_2d(x), self.centers) / self.width**2)
        return np.column_stack([phi, np.ones(phi.shape[0])])

    def predict(self, xq):
        return self._design(xq) @ self.coef
