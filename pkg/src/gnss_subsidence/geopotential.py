"""
Gravity potential in ellipsoidal harmonics, normal gravity and deflections.

Potentials are expanded as

    V(u, beta, lam) = sum_n sum_m  Q_nm(i u/E) / Q_nm(i b/E)
                      * (C_nm cos(m lam) + S_nm sin(m lam)) * Pbar_nm(sin beta)

in ellipsoidal coordinates ``(u, beta, lam)`` (confocal semi-minor axis,
reduced latitude, longitude). Public functions take the latitude ``phi`` of
the normal to the confocal ellipsoid through the point, which is the geodetic
latitude on the reference ellipsoid itself.

Coefficients are fully normalised (``sum_m Pbar_nm^2 = 2n + 1``) and scaled by
``GM / R`` of the coefficient file.

The disturbing (residual) potential ``T`` uses the model coefficients minus the
even zonals of the normal field whenever the model carries one. The full
potential ``W`` is the normal potential in closed ellipsoidal form (monopole,
the degree-2 zonal of the level ellipsoid and the centrifugal term) plus the
disturbing terms, so its gradient on the reference ellipsoid reproduces
Somigliana's normal gravity up to the gravity anomaly.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np

from .errors import DomainError, NumericError
from .geodesy import (
    WGS84,
    DeflectionComponents,
    EllipsoidParams,
    meridian_radius,
    prime_vertical_radius,
    reduced_latitude,
)

#: EGM2008 / EGM96 conventions, used when a coefficient file has no header
DEFAULT_GM = 3.986004415e14
DEFAULT_RADIUS = 6378136.3

_SERIES_TOL = 1e-17
_SERIES_MAX_TERMS = 2000


# --------------------------------------------------------------- normal field


@dataclass(frozen=True)
class NormalField:
    """Level ellipsoid defined by ``(a, e2, GM, omega)``."""

    ell: EllipsoidParams = WGS84
    gm: float = 3.986004418e14
    omega: float = 7.292115e-5

    @property
    def second_eccentricity(self):
        return self.ell.E / self.ell.b

    @property
    def q0(self):
        ep = self.second_eccentricity
        return 0.5 * ((1.0 + 3.0 / ep**2) * math.atan(ep) - 3.0 / ep)

    @property
    def m(self):
        a, b = self.ell.a, self.ell.b
        return self.omega**2 * a**2 * b / self.gm

    @property
    def j2(self):
        ep = self.second_eccentricity
        return self.ell.e2 / 3.0 * (1.0 - 2.0 * self.m * ep / (15.0 * self.q0))

    def zonal_coefficients(self, max_degree, gm=None, radius=None):
        """
        Fully normalised even zonals of the normal gravitational potential.

        Returned as ``{degree: Cbar}`` rescaled to a model with constants
        ``gm`` and ``radius`` (defaults: the normal field's own, radius ``a``).
        """
        gm = self.gm if gm is None else gm
        radius = self.ell.a if radius is None else radius
        e2, j2 = self.ell.e2, self.j2
        out = {}
        for k in range(1, max_degree // 2 + 1):
            j2n = (-1) ** (k + 1) * 3.0 * e2**k / ((2 * k + 1) * (2 * k + 3)) * (1.0 - k + 5.0 * k * j2 / e2)
            cbar = -j2n / math.sqrt(4 * k + 1)
            out[2 * k] = cbar * (self.gm / gm) * (self.ell.a / radius) ** (2 * k)
        return out

    def degree2_surface_coefficient(self):
        """Coefficient of the normalised ellipsoidal P20 term of the normal potential at u = b."""
        return self.omega**2 * self.ell.a**2 / (3.0 * math.sqrt(5.0))

    def somigliana(self, phi):
        """Closed-form normal gravity on the ellipsoid surface (m/s^2)."""
        a, b, gm = self.ell.a, self.ell.b, self.gm
        ep, m, q0 = self.second_eccentricity, self.m, self.q0
        q0p = 3.0 * (1.0 + 1.0 / ep**2) * (1.0 - math.atan(ep) / ep) - 1.0
        gamma_e = gm / (a * b) * (1.0 - m - m * ep * q0p / (6.0 * q0))
        gamma_p = gm / a**2 * (1.0 + m * ep * q0p / (3.0 * q0))
        c2, s2 = np.cos(phi) ** 2, np.sin(phi) ** 2
        return (a * gamma_e * c2 + b * gamma_p * s2) / np.sqrt(a * a * c2 + b * b * s2)


WGS84_NORMAL = NormalField()


# ------------------------------------------------------------ coefficient model


@dataclass(frozen=True)
class GeopotentialModel:
    """
    Dense table of fully normalised coefficients ``c[n, m]``, ``s[n, m]``.

    Parameters
    ----------
    c, s : ndarray(N+1, N+1)
        lower-triangular coefficient tables
    gm : float
        geocentric gravitational constant of the coefficients (m^3/s^2)
    ref_radius : float
        reference radius of the coefficients (m)
    ell : EllipsoidParams
        ellipsoid defining the ellipsoidal coordinates
    normal : NormalField or None
        normal field removed from ``T`` and used in closed form inside ``W``;
        ``None`` evaluates both as a plain sum over the raw coefficients
    """

    c: np.ndarray
    s: np.ndarray
    gm: float = DEFAULT_GM
    ref_radius: float = DEFAULT_RADIUS
    ell: EllipsoidParams = WGS84
    normal: NormalField = WGS84_NORMAL
    name: str = ""
    missing: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        s = np.array(self.s, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape != s.shape:
            raise DomainError("coefficient tables must be square and of equal shape")
        if c.shape[0] - 1 > 360:
            raise DomainError("maximum supported degree is 360")
        if not self.gm > 0:
            raise DomainError("GM must be positive")
        tri = np.tril(np.ones_like(c, dtype=bool))
        c[~tri] = 0.0
        s[~tri] = 0.0
        s[:, 0] = 0.0
        c.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "s", s)

    @property
    def max_degree(self):
        return self.c.shape[0] - 1

    @property
    def scale(self):
        return self.gm / self.ref_radius

    @classmethod
    def zeros(cls, max_degree, **kwargs):
        shape = (max_degree + 1, max_degree + 1)
        return cls(np.zeros(shape), np.zeros(shape), **kwargs)

    def truncated(self, max_degree):
        n = max_degree + 1
        return GeopotentialModel(
            self.c[:n, :n], self.s[:n, :n], self.gm, self.ref_radius, self.ell, self.normal, self.name
        )

    def with_coefficients(self, c=None, s=None):
        return GeopotentialModel(
            self.c if c is None else c,
            self.s if s is None else s,
            self.gm,
            self.ref_radius,
            self.ell,
            self.normal,
            self.name,
        )

    def residual_coefficients(self):
        """Coefficients with the normal field's even zonals removed."""
        c = np.array(self.c)
        if self.normal is not None:
            for n, cn in self.normal.zonal_coefficients(self.max_degree, self.gm, self.ref_radius).items():
                c[n, 0] -= cn
        return c, np.array(self.s)


@dataclass(frozen=True)
class GravityContext:
    """Gravity magnitude and curvature radii at an evaluation point."""

    gamma0: float
    r_m: float
    r_n: float


# ------------------------------------------------------------------- Legendre


@lru_cache(maxsize=32)
def _recursion_coefficients(max_degree):
    n = np.arange(max_degree + 1, dtype=float)[:, None]
    m = np.arange(max_degree + 1, dtype=float)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.sqrt((2 * n - 1) * (2 * n + 1) / ((n - m) * (n + m)))
        b = np.sqrt((2 * n + 1) * (n + m - 1) * (n - m - 1) / ((n - m) * (n + m) * (2 * n - 3)))
    a[~np.isfinite(a)] = 0.0
    b[~np.isfinite(b)] = 0.0
    a.setflags(write=False)
    b.setflags(write=False)
    return a, b


def legendre_p_normalized(max_degree, x):
    """
    Fully normalised associated Legendre functions and latitude derivatives.

    Parameters
    ----------
    max_degree : int
    x : float
        sine of the latitude, ``|x| <= 1``

    Returns
    -------
    p : ndarray(N+1, N+1)
        ``p[n, m] = Pbar_nm(x)``
    dp : ndarray(N+1, N+1)
        ``dp[n, m] = d Pbar_nm / d latitude``
    """
    if not abs(x) <= 1.0:
        raise DomainError(f"Legendre argument {x} outside [-1, 1]")
    N = int(max_degree)
    if N < 0:
        raise DomainError("max_degree must be non-negative")
    t = math.sqrt(max(0.0, 1.0 - x * x))
    p = np.zeros((N + 1, N + 1))
    p[0, 0] = 1.0
    if N >= 1:
        p[1, 1] = math.sqrt(3.0) * t
    for m in range(2, N + 1):
        p[m, m] = math.sqrt((2 * m + 1) / (2.0 * m)) * t * p[m - 1, m - 1]
    a, b = _recursion_coefficients(N)
    for n in range(1, N + 1):
        # m = n - 1 needs only the previous degree; lower orders use both
        p[n, n - 1] = a[n, n - 1] * x * p[n - 1, n - 1]
        if n >= 2:
            p[n, : n - 1] = a[n, : n - 1] * x * p[n - 1, : n - 1] - b[n, : n - 1] * p[n - 2, : n - 1]

    # derivative with respect to colatitude, then flipped to latitude
    dp = np.zeros_like(p)
    for n in range(1, N + 1):
        m = np.arange(1, n + 1)
        c1 = np.sqrt((n + m) * (n - m + 1.0))
        c1[0] *= math.sqrt(2.0)
        c2 = np.sqrt((n - m) * (n + m + 1.0))
        upper = np.zeros(n)
        upper[: n - 1] = p[n, 2 : n + 1]
        dtheta = 0.5 * (c1 * p[n, :n] - c2 * upper)
        dp[n, 1 : n + 1] = -dtheta
        dp[n, 0] = math.sqrt(n * (n + 1) / 2.0) * p[n, 1]
    return p, dp


# ------------------------------------------------------ second-kind ratio


def _hyp_series(A, B, C, x):
    """Power series of 2F1(A, B; C; x) for 0 <= x < 1 and positive parameters."""
    total = np.ones(np.broadcast(A, B, C).shape)
    term = np.ones_like(total)
    for k in range(_SERIES_MAX_TERMS):
        term = term * ((A + k) * (B + k) / ((C + k) * (k + 1.0)) * x)
        total = total + term
        if np.all(term <= _SERIES_TOL * total):
            return total
    raise NumericError("hypergeometric series for the second-kind Legendre ratio did not converge")


def _check_u(u, ell):
    if not u > 0 or not np.isfinite(u):
        raise DomainError(f"u = {u} must be positive and finite")
    if u < ell.b:
        raise DomainError(f"u = {u:.3f} m lies below the reference ellipsoid (b = {ell.b:.3f} m)")


def q_ratio_table(max_degree, u, ell=WGS84):
    """
    ``Q_nm(i u/E) / Q_nm(i b/E)`` and its u-derivative for all ``m <= n <= N``.

    Uses ``Q_nm(iz) ~ (z^2 + 1)^(-(n+1)/2) * 2F1((n+m+1)/2, (n-m+1)/2; n+3/2; 1/(z^2+1))``
    (a Pfaff transform of the standard representation), whose series has only
    positive terms; the geometric prefactor collapses to
    ``(a / sqrt(u^2 + E^2))^(n+1)``.
    """
    _check_u(u, ell)
    N = int(max_degree)
    E2 = ell.E**2
    n = np.arange(N + 1, dtype=float)[:, None]
    m = np.arange(N + 1, dtype=float)[None, :]
    A = (n + m + 1.0) / 2.0
    B = np.maximum(n - m + 1.0, 1.0) / 2.0
    C = n + 1.5
    b = ell.b
    big2 = u * u + E2
    x, x0 = E2 / big2, E2 / (b * b + E2)
    g = _hyp_series(A, B, C, x)
    g0 = _hyp_series(A, B, C, x0)
    dg = A * B / C * _hyp_series(A + 1.0, B + 1.0, C + 1.0, x)
    if u == b:
        ratio = np.ones_like(g)
    else:
        ratio = (ell.a**2 / big2) ** ((n + 1.0) / 2.0) * (g / g0)
    dx_du = -2.0 * E2 * u / big2**2
    dlog = -(n + 1.0) * u / big2 + dg / g * dx_du
    tri = np.tril(np.ones((N + 1, N + 1), dtype=bool))
    ratio = np.where(tri, ratio, 0.0)
    dratio = np.where(tri, ratio * dlog, 0.0)
    return ratio, dratio


def q_ratio(n, m, u, b=WGS84.b, E=WGS84.E):
    """Ratio of second-kind Legendre functions ``Q_nm(i u/E) / Q_nm(i b/E)``."""
    if not (0 <= m <= n):
        raise DomainError("need 0 <= m <= n")
    if not (b > 0 and E > 0):
        raise DomainError("b and E must be positive")
    ell = EllipsoidParams(a=math.hypot(b, E), e2=E * E / (b * b + E * E))
    _check_u(u, ell)
    if u == b:
        return 1.0
    A = (n + m + 1.0) / 2.0
    B = (n - m + 1.0) / 2.0
    C = n + 1.5
    x, x0 = E * E / (u * u + E * E), E * E / (b * b + E * E)
    g = float(_hyp_series(A, B, C, x))
    g0 = float(_hyp_series(A, B, C, x0))
    return ((b * b + E * E) / (u * u + E * E)) ** ((n + 1) / 2.0) * g / g0


# --------------------------------------------------------------- synthesis


def _trig(max_degree, lam):
    m = np.arange(max_degree + 1)
    return np.cos(m * lam), np.sin(m * lam), m


def _harmonic_sum(c, s, max_degree, min_degree, u, beta, lam, ell):
    """Value and (u, beta, lam) partials of the ratio-weighted harmonic sum."""
    N = max_degree
    p, dp = legendre_p_normalized(N, math.sin(beta))
    ratio, dratio = q_ratio_table(N, u, ell)
    cm, sm, m = _trig(N, lam)
    trig = c * cm[None, :] + s * sm[None, :]
    dtrig = (-c * sm[None, :] + s * cm[None, :]) * m[None, :]
    rows = slice(min_degree, N + 1)
    v = np.sum((ratio * trig * p)[rows])
    v_u = np.sum((dratio * trig * p)[rows])
    v_beta = np.sum((ratio * trig * dp)[rows])
    v_lam = np.sum((ratio * dtrig * p)[rows])
    return v, v_u, v_beta, v_lam


def _check_latitude(phi, limit_deg=None):
    if not abs(phi) <= 0.5 * math.pi:
        raise DomainError(f"latitude {phi} outside [-pi/2, pi/2]")
    if limit_deg is not None and abs(phi) >= math.radians(limit_deg):
        raise DomainError(f"latitude {math.degrees(phi):.3f} deg too close to the pole (limit {limit_deg} deg)")


def residual_potential_partials(model, u, beta, lam):
    """``(T, dT/du, dT/dbeta, dT/dlam)`` in ellipsoidal coordinates."""
    if model.max_degree < 2:
        raise DomainError("the residual potential needs coefficients up to at least degree 2")
    c, s = model.residual_coefficients()
    v = _harmonic_sum(c, s, model.max_degree, 2, u, beta, lam, model.ell)
    return tuple(model.scale * x for x in v)


def residual_potential_t(model, phi, lam, u):
    """
    Residual (disturbing) potential in m^2/s^2, summed from degree 2.

    ``phi`` is the latitude of the normal to the confocal ellipsoid ``u``;
    on the reference ellipsoid (``u = b``) it is the geodetic latitude.
    """
    _check_latitude(phi)
    beta = float(reduced_latitude(u, phi, model.ell))
    return residual_potential_partials(model, u, beta, lam)[0]


def potential_w_partials(model, u, beta, lam, centrifugal=True):
    """
    Full potential ``W`` and its partials ``(W, W_u, W_beta, W_lam)``.

    With a normal field attached, the degree-0 term is the exact ellipsoidal
    monopole ``C00 * GM / E * arctan(E / u)`` and the level ellipsoid's
    degree-2 zonal enters in its own ellipsoidal coefficient; every other
    term is the disturbing series. Without one, ``W`` is the plain sum from
    degree 0 over the raw coefficients, scaled by ``GM / R``.
    """
    _check_u(u, model.ell)
    ell = model.ell
    N = model.max_degree
    if model.c[0, 0] == 0.0:
        raise DomainError("coefficient C00 is zero; the potential needs its degree-0 term")
    E = ell.E
    if model.normal is None:
        v = _harmonic_sum(model.c, model.s, N, 0, u, beta, lam, ell)
        w, w_u, w_b, w_l = (model.scale * x for x in v)
    else:
        gm0 = model.c[0, 0] * model.gm
        w = gm0 / E * math.atan(E / u)
        w_u = -gm0 / (u * u + E * E)
        w_b = w_l = 0.0
        if N >= 1:
            c, s = model.residual_coefficients()
            v = _harmonic_sum(c, s, N, 1, u, beta, lam, ell)
            w += model.scale * v[0]
            w_u += model.scale * v[1]
            w_b += model.scale * v[2]
            w_l += model.scale * v[3]
        if N >= 2:
            k2 = model.normal.degree2_surface_coefficient()
            ratio, dratio = q_ratio_table(2, u, ell)
            sb, cb = math.sin(beta), math.cos(beta)
            p20 = math.sqrt(5.0) * (1.5 * sb * sb - 0.5)
            dp20 = math.sqrt(5.0) * 3.0 * sb * cb
            w += k2 * ratio[2, 0] * p20
            w_u += k2 * dratio[2, 0] * p20
            w_b += k2 * ratio[2, 0] * dp20
    if centrifugal:
        omega = model.normal.omega if model.normal is not None else WGS84_NORMAL.omega
        big2 = u * u + E * E
        cb, sb = math.cos(beta), math.sin(beta)
        w += 0.5 * omega**2 * big2 * cb * cb
        w_u += omega**2 * u * cb * cb
        w_b += -(omega**2) * big2 * sb * cb
    return w, w_u, w_b, w_l


def gradient_norm(u, beta, w_u, w_b, w_l, ell=WGS84):
    """Norm of a gradient given its ellipsoidal partials (metric scale factors applied)."""
    E2 = ell.E**2
    sb2 = math.sin(beta) ** 2
    h_u = math.sqrt((u * u + E2 * sb2) / (u * u + E2))
    h_b = math.sqrt(u * u + E2 * sb2)
    h_l = math.sqrt(u * u + E2) * math.cos(beta)
    g2 = (w_u / h_u) ** 2 + (w_b / h_b) ** 2
    if w_l != 0.0:
        g2 += (w_l / h_l) ** 2
    return math.sqrt(g2)


def potential_w_and_gamma0(model, phi, lam, u, centrifugal=True):
    """
    Full potential (m^2/s^2) and the gravity context at ``(phi, lam, u)``.

    ``gamma0`` is the norm of the ellipsoidal gradient of ``W``; ``r_m`` and
    ``r_n`` are the meridian and prime-vertical radii at ``phi``.
    """
    _check_latitude(phi)
    beta = float(reduced_latitude(u, phi, model.ell))
    w, w_u, w_b, w_l = potential_w_partials(model, u, beta, lam, centrifugal)
    gamma0 = gradient_norm(u, beta, w_u, w_b, w_l, model.ell)
    ctx = GravityContext(
        gamma0=gamma0,
        r_m=float(meridian_radius(phi, model.ell)),
        r_n=float(prime_vertical_radius(phi, model.ell)),
    )
    return w, ctx


def dbeta_dphi(u, phi, ell=WGS84):
    k = u / math.sqrt(u * u + ell.E**2)
    c, s = math.cos(phi), math.sin(phi)
    return k / (c * c + k * k * s * s)


def deflections(model, phi, lam, u, ctx=None, max_latitude_deg=89.0):
    """
    Deflection of the vertical from the residual potential.

    xi  = dT/dphi / (R_M * gamma0)
    eta = dT/dlam / (R_N * cos(phi) * gamma0)

    Both partials are taken term by term; ``dT/dphi`` is ``dT/dbeta`` times
    ``dbeta/dphi`` on the confocal ellipsoid ``u``.
    """
    _check_latitude(phi, max_latitude_deg)
    if ctx is None:
        _, ctx = potential_w_and_gamma0(model, phi, lam, u)
    beta = float(reduced_latitude(u, phi, model.ell))
    _, _, t_beta, t_lam = residual_potential_partials(model, u, beta, lam)
    t_phi = t_beta * dbeta_dphi(u, phi, model.ell)
    xi = float(t_phi / (ctx.r_m * ctx.gamma0))
    eta = float(t_lam / (ctx.r_n * math.cos(phi) * ctx.gamma0))
    return DeflectionComponents(xi, eta, eta * math.tan(phi))


def deflection_grid(model, phis, lams, u=None):
    """Rows of ``(phi, lam, xi, eta, gamma0)`` on a latitude/longitude grid."""
    u = model.ell.b if u is None else u
    rows = []
    for phi in np.atleast_1d(phis):
        for lam in np.atleast_1d(lams):
            _, ctx = potential_w_and_gamma0(model, float(phi), float(lam), u)
            d = deflections(model, float(phi), float(lam), u, ctx)
            rows.append((float(phi), float(lam), d.xi, d.eta, ctx.gamma0))
    return rows
