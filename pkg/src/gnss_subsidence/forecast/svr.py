"""Support vector regression solved in the dual by coordinate descent."""

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ..errors import TrainingError
from .kernels import Kernel


def kkt_violation(b, qb, y, epsilon, c):
    """
    Largest violation of the optimality conditions of the dual.

    With ``g = Qb - y`` an optimum has ``g + epsilon sign(b) = 0`` on free
    coefficients, ``|g| <= epsilon`` at zero, and the matching one-sided
    inequality at the box bounds.
    """
    g = qb - y
    viol = np.where(b > 0, np.abs(g + epsilon), np.where(b < 0, np.abs(g - epsilon), np.maximum(np.abs(g) - epsilon, 0.0)))
    viol = np.where(b >= c, np.maximum(g + epsilon, 0.0), viol)
    viol = np.where(b <= -c, np.maximum(epsilon - g, 0.0), viol)
    return float(viol.max()) if viol.size else 0.0


def dual_objective(q, y, b, epsilon):
    return 0.5 * float(b @ q @ b) - float(y @ b) + epsilon * float(np.abs(b).sum())


def _free_set_newton(q, y, b, qb, epsilon, c):
    """
    Projected Newton step on the free coefficients.

    Free coefficients are nonzero and strictly inside the box; on that face
    the objective is a smooth quadratic whose minimiser is found by one
    Cholesky solve. The step towards it is projected back onto each
    coefficient's sign orthant and the box, and halved until the objective
    decreases. Returns ``b`` unchanged when no decrease is found.
    """
    free = np.flatnonzero((b != 0.0) & (np.abs(b) < c))
    if free.size == 0:
        return b
    sign = np.sign(b[free])
    qff = q[np.ix_(free, free)]
    rhs = y[free] - epsilon * sign - (qb[free] - qff @ b[free])
    try:
        target = cho_solve(cho_factor(qff, lower=True), rhs)
    except LinAlgError:
        target = np.linalg.lstsq(qff, rhs, rcond=None)[0]
    current = dual_objective(q, y, b, epsilon)
    t = 1.0
    while t > 1e-6:
        v = b[free] + t * (target - b[free])
        v = np.where(sign > 0, np.clip(v, 0.0, c), np.clip(v, -c, 0.0))
        cand = b.copy()
        cand[free] = v
        if dual_objective(q, y, cand, epsilon) < current:
            return cand
        t *= 0.5
    return b


def dual_coordinate_descent(q, y, epsilon, c, tol, max_sweeps, newton_every=1):
    """
    Minimise ``0.5 b'Qb - y'b + epsilon |b|_1`` subject to ``-c <= b <= c``.

    Cyclic sweeps over the coordinates, each step the exact one-dimensional
    minimiser (a soft-threshold clipped to the box). After every
    ``newton_every`` sweeps the free coefficients take a projected Newton
    step, which removes the slow linear convergence of plain sweeps on
    ill-conditioned kernels. Iteration stops once the optimality
    conditions hold to ``tol`` (in the units of ``y``).

    Returns ``(b, sweeps)``; raises TrainingError when ``max_sweeps`` is hit.
    """
    n = y.size
    b = np.zeros(n)
    qb = np.zeros(n)
    diag = np.diag(q).copy()
    if np.any(diag <= 0):
        raise TrainingError("kernel matrix has a non-positive diagonal entry")
    viol = kkt_violation(b, qb, y, epsilon, c)
    if viol <= tol:
        return b, 0
    for sweep in range(1, max_sweeps + 1):
        for i in range(n):
            rest = y[i] - (qb[i] - diag[i] * b[i])
            new = np.sign(rest) * max(abs(rest) - epsilon, 0.0) / diag[i]
            new = min(max(new, -c), c)
            delta = new - b[i]
            if delta != 0.0:
                # q is symmetric; a row is contiguous in memory
                qb += delta * q[i]
                b[i] = new
        if newton_every and sweep % newton_every == 0:
            b = _free_set_newton(q, y, b, qb, epsilon, c)
            qb = q @ b
        viol = kkt_violation(b, qb, y, epsilon, c)
        if viol <= tol:
            return b, sweep
    raise TrainingError(
        f"SVR dual coordinate descent did not converge in {max_sweeps} sweeps "
        f"(KKT violation {viol:.3e} > {tol:g})",
        {"kkt_violation": viol, "max_abs_coef": float(np.max(np.abs(b))), "sweeps": max_sweeps},
    )


class SupportVectorRegression:
    """
    Epsilon-insensitive kernel regression.

    Targets are standardised internally, so the box constraint ``C`` and the
    tube half-width are relative to unit-variance targets. The bias is
    absorbed by adding a constant 1 to the kernel, which removes the
    equality constraint of the classical dual. ``epsilon`` defaults to
    0.01 target standard deviations.
    """

    def fit(self, x, y, params, rng=None):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self.x = x.copy()
        self.y_mu = float(np.mean(y))
        sd = float(np.std(y))
        self.y_sd = sd if sd > 0 else 1.0
        ys = (y - self.y_mu) / self.y_sd
        eps = 0.01 * sd if params["epsilon"] is None else float(params["epsilon"])
        self.kernel = Kernel(params["kernel"], x, params["length_scale"], 1.0)
        q = self.kernel(x, x) + 1.0
        self.beta, sweeps = dual_coordinate_descent(
            q, ys, eps / self.y_sd, float(params["C"]), float(params["tol"]), int(params["max_sweeps"])
        )
        resid = ys - q @ self.beta
        self.diagnostics = {
            "sweeps": sweeps,
            "epsilon": eps,
            "support_vectors": int(np.count_nonzero(self.beta)),
            "at_bound": int(np.count_nonzero(np.abs(self.beta) >= float(params["C"]))),
            "training_rmse": float(self.y_sd * np.sqrt(np.mean(resid**2))),
            **self.kernel.describe(),
        }
        return self

    def predict(self, xq):
        k = self.kernel(np.atleast_2d(xq), self.x) + 1.0
        return self.y_mu + self.y_sd * (k @ self.beta)
