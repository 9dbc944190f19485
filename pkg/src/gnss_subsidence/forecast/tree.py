"""Regression tree grown by exhaustive axis-aligned squared-error splits."""

import numpy as np


def best_split(x, y, min_leaf):
    """
    Best ``(feature, threshold, gain)`` over all axis-aligned splits.

    Gain is the drop in the sum of squared errors. Thresholds are midpoints
    between consecutive distinct values and each side keeps at least
    ``min_leaf`` samples. Ties resolve to the lowest feature, then the
    lowest threshold. Returns None when no admissible split reduces the
    error.
    """
    n, d = x.shape
    yc = y - y.mean()
    total = float(yc @ yc)
    best = None
    best_gain = 0.0
    for j in range(d):
        order = np.argsort(x[:, j], kind="stable")
        xs = x[order, j]
        ys = yc[order]
        csum = np.cumsum(ys)
        csq = np.cumsum(ys * ys)
        left_n = np.arange(1, n)
        right_n = n - left_n
        left_sse = csq[:-1] - csum[:-1] ** 2 / left_n
        right_sse = (csq[-1] - csq[:-1]) - (csum[-1] - csum[:-1]) ** 2 / right_n
        gain = total - left_sse - right_sse
        ok = (xs[1:] > xs[:-1]) & (left_n >= min_leaf) & (right_n >= min_leaf)
        if not ok.any():
            continue
        gain = np.where(ok, gain, -np.inf)
        i = int(np.argmax(gain))
        if gain[i] > best_gain * (1.0 + 1e-12) and gain[i] > 1e-14 * max(total, 1e-300):
            best_gain = float(gain[i])
            best = (j, 0.5 * (xs[i] + xs[i + 1]), best_gain)
    return best


class RegressionTree:
    """
    Binary tree of ``x[feature] <= threshold`` tests with mean-valued leaves.

    Growth stops at ``max_depth``, when a node cannot be split into two
    children of ``min_leaf`` samples, or when no split lowers the error.
    Nodes live in flat arrays; ``feature == -1`` marks a leaf.
    """

    def fit(self, x, y, params, rng=None):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self.max_depth = int(params["max_depth"])
        self.min_leaf = int(params["min_leaf"])
        feature, threshold, left, right, value = [], [], [], [], []

        def grow(rows, depth):
            node = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(float(np.mean(y[rows])))
            if depth >= self.max_depth or rows.size < 2 * self.min_leaf:
                return node
            split = best_split(x[rows], y[rows], self.min_leaf)
            if split is None:
                return node
            j, thr, _ = split
            mask = x[rows, j] <= thr
            feature[node] = j
            threshold[node] = thr
            left[node] = grow(rows[mask], depth + 1)
            right[node] = grow(rows[~mask], depth + 1)
            return node

        grow(np.arange(y.size), 0)
        self.feature = np.array(feature, dtype=int)
        self.threshold = np.array(threshold)
        self.left = np.array(left, dtype=int)
        self.right = np.array(right, dtype=int)
        self.value = np.array(value)
        leaves = self.feature < 0
        self.diagnostics = {
            "nodes": int(self.feature.size),
            "leaves": int(leaves.sum()),
            "depth": self.depth(),
            "training_rmse": float(np.sqrt(np.mean((self.predict(x) - y) ** 2))),
        }
        return self

    def depth(self):
        def walk(node):
            if self.feature[node] < 0:
                return 0
            return 1 + max(walk(self.left[node]), walk(self.right[node]))

        return walk(0)

    def predict(self, xq):
        xq = np.atleast_2d(xq)
        out = np.empty(xq.shape[0])
        for i, row in enumerate(xq):
            node = 0
            while self.feature[node] >= 0:
                node = self.left[node] if row[self.feature[node]] <= self.threshold[node] else self.right[node]
            out[i] = self.value[node]
        return out
