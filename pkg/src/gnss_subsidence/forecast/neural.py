"""
One-hidden-layer tanh networks trained by full-batch gradient descent.

The parameter vector is laid out as ``[W1 (h x d), b1 (h), w2 (h), b2]``.
Inputs and targets are standardised with scalar statistics before training
(one mean and one spread over all window entries), which keeps a common
shift of the data a pure shift of the predictions.
"""

import logging
import warnings

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ..errors import TrainingError

logger = logging.getLogger(__name__)


def unpack(theta, d, h):
    i = 0
    w1 = theta[i:i + h * d].reshape(h, d)
    i += h * d
    b1 = theta[i:i + h]
    i += h
    w2 = theta[i:i + h]
    i += h
    return w1, b1, w2, theta[i]


def n_parameters(d, h):
    return h * d + 2 * h + 1


def forward(theta, x, h):
    w1, b1, w2, b2 = unpack(theta, x.shape[1], h)
    hidden = np.tanh(x @ w1.T + b1)
    return hidden @ w2 + b2, hidden


def loss_and_grad(theta, x, y, h, decay=0.0):
    """
    ``0.5 * mean(r^2) + 0.5 * decay * |theta|^2`` and its gradient.

    ``r = f(x) - y``. The gradient is back-propagated analytically.
    """
    x = np.atleast_2d(x)
    n, d = x.shape
    w1, b1, w2, b2 = unpack(theta, d, h)
    hidden = np.tanh(x @ w1.T + b1)
    r = hidden @ w2 + b2 - y
    loss = 0.5 * float(r @ r) / n + 0.5 * decay * float(theta @ theta)
    g_out = r / n
    g_w2 = hidden.T @ g_out
    g_b2 = g_out.sum()
    g_pre = np.outer(g_out, w2) * (1.0 - hidden**2)
    g_w1 = g_pre.T @ x
    g_b1 = g_pre.sum(axis=0)
    grad = np.concatenate([g_w1.ravel(), g_b1, g_w2, [g_b2]]) + decay * theta
    return loss, grad


def output_jacobian(theta, x, h):
    """Rows are d f(x_i) / d theta."""
    n, d = x.shape
    w1, b1, w2, b2 = unpack(theta, d, h)
    hidden = np.tanh(x @ w1.T + b1)
    dpre = (1.0 - hidden**2) * w2
    j_w1 = (dpre[:, :, None] * x[:, None, :]).reshape(n, h * d)
    return np.hstack([j_w1, dpre, hidden, np.ones((n, 1))])


def _scalar_standardiser(a):
    mu = float(np.mean(a))
    sd = float(np.std(a))
    return mu, (sd if sd > 0 else 1.0)


def train_gd(theta, x, y, h, decay, learning_rate, epochs, tol):
    """
    Fixed-step gradient descent.

    Stops when the relative loss decrease falls below ``tol`` or the
    gradient vanishes. Raises TrainingError if the loss becomes non-finite.
    """
    curve = np.empty(epochs + 1)
    loss, grad = loss_and_grad(theta, x, y, h, decay)
    curve[0] = loss
    converged = False
    epoch = 0
    for epoch in range(1, epochs + 1):
        theta = theta - learning_rate * grad
        new_loss, grad = loss_and_grad(theta, x, y, h, decay)
        curve[epoch] = new_loss
        if not np.isfinite(new_loss):
            raise TrainingError(
                f"loss diverged at epoch {epoch}; lower the learning rate",
                {"loss_curve": curve[: epoch + 1].tolist(), "epoch": epoch},
            )
        grad_norm = float(np.sqrt(grad @ grad))
        if abs(loss - new_loss) <= tol * max(abs(new_loss), 1e-300) or grad_norm == 0.0:
            loss = new_loss
            converged = True
            break
        loss = new_loss
    return theta, {
        "loss_curve": curve[: epoch + 1],
        "epochs_run": epoch,
        "converged": converged,
        "final_loss": float(loss),
        "grad_norm": float(np.sqrt(grad @ grad)),
    }


class _Network:
    decay_param = None

    def _decay(self, params, n):
        return 0.0

    def fit(self, x, y, params, rng):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self.h = int(params["hidden"])
        n, d = x.shape
        self.x_mu, self.x_sd = _scalar_standardiser(x)
        self.y_mu, self.y_sd = _scalar_standardiser(y)
        xs = (x - self.x_mu) / self.x_sd
        ys = (y - self.y_mu) / self.y_sd
        theta = np.zeros(n_parameters(d, self.h))
        limit = np.sqrt(6.0 / (d + self.h))
        theta[: self.h * d] = rng.uniform(-limit, limit, self.h * d)
        # zero output layer: the untrained network predicts the target mean
        decay = self._decay(params, n)
        theta, diag = train_gd(theta, xs, ys, self.h, decay,
                               params["learning_rate"], int(params["epochs"]), params["tol"])
        if not diag["converged"]:
            msg = (f"{type(self).__name__} stopped at the {params['epochs']} epoch cap "
                   f"(relative loss change above {params['tol']:g})")
            if params["strict"]:
                raise TrainingError(msg, diag)
            logger.info(msg)
        self.theta = theta
        self.diagnostics = dict(diag, decay=decay, parameters=int(theta.size))
        return self

    def _standardised(self, xq):
        return (np.atleast_2d(np.asarray(xq, dtype=float)) - self.x_mu) / self.x_sd

    def predict(self, xq):
        out, _ = forward(self.theta, self._standardised(xq), self.h)
        return self.y_mu + self.y_sd * out


class Perceptron(_Network):
    """Multi-layer perceptron with optional L2 weight decay."""

    def _decay(self, params, n):
        return float(params["weight_decay"])


class BayesianNetwork(_Network):
    """
    The perceptron with an isotropic Gaussian prior on all parameters.

    The mode of the posterior is found by gradient descent (the prior acts
    as weight decay ``prior_precision * noise_variance / n`` on the
    standardised loss). A Laplace approximation with the generalised
    Gauss-Newton Hessian ``J^T J / noise_variance + prior_precision I``
    gives predictive variances; the predictive mean is the network at the
    mode.
    """

    def _decay(self, params, n):
        return float(params["prior_precision"]) * float(params["noise_variance"]) / n

    def fit(self, x, y, params, rng):
        super().fit(x, y, params, rng)
        xs = self._standardised(x)
        jac = output_jacobian(self.theta, xs, self.h)
        beta = 1.0 / float(params["noise_variance"])
        hess = beta * jac.T @ jac
        hess[np.diag_indices_from(hess)] += float(params["prior_precision"])
        self.noise_variance = float(params["noise_variance"])
        try:
            self.posterior = cho_factor(hess, lower=True)
        except LinAlgError:
            warnings.warn("Laplace Hessian not positive definite; predictive variance unavailable",
                          RuntimeWarning, stacklevel=2)
            self.posterior = None
        return self

    def predict_variance(self, xq):
        xs = self._standardised(xq)
        if self.posterior is None:
            return np.full(xs.shape[0], np.nan)
        jac = output_jacobian(self.theta, xs, self.h)
        v = cho_solve(self.posterior, jac.T)
        var = self.noise_variance + np.einsum("ij,ji->i", jac, v)
        var = var * self.y_sd**2
        logger.debug("BNN predictive variance %s", var)
        return var
