"""
Coordinate conversions between ECEF, geodetic, ellipsoidal and local frames.

The ECEF to geodetic conversion is the classic fixed-point iteration on
latitude: starting from a height referred to the geometric-mean radius
``a * (1 - e2) ** 0.25``, alternate between the prime-vertical radius, the
height and the latitude until two successive latitudes agree to ``epsilon``.

Local geodetic axes are (north, east, up), obtained as
``S2 @ R2(phi - pi/2) @ R3(lam - pi)``; the reflection ``S2`` makes the frame
left-handed. The astronomical frame follows from the geodetic one through the
deflection of the vertical: ``R1(-eta) @ R2(xi) @ R3(-dA)`` with
``dA = eta * tan(phi)``.
"""

from dataclasses import dataclass, field
import logging
import math

import numpy as np

from .errors import ConvergenceError, DomainError, FrameError
from .series import EcefCoord, Frame, LocalCoord

logger = logging.getLogger(__name__)

_ANGLE_SLACK = 1e-12


@dataclass(frozen=True)
class EllipsoidParams:
    """Reference ellipsoid given by semi-major axis ``a`` (m) and ``e2``."""

    a: float
    e2: float

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError("semi-major axis must be positive")
        if not 0 < self.e2 < 1:
            raise DomainError("e2 must lie in (0, 1)")

    @property
    def b(self):
        return self.a * math.sqrt(1.0 - self.e2)

    @property
    def E(self):
        """Linear eccentricity ``a * e``."""
        return self.a * math.sqrt(self.e2)

    @property
    def f(self):
        return 1.0 - math.sqrt(1.0 - self.e2)


WGS84 = EllipsoidParams(a=6378137.0, e2=6.69437999014e-3)


@dataclass(frozen=True)
class ConversionSettings:
    epsilon: float = 1e-12
    max_iterations: int = 20

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be at least 1")


@dataclass(frozen=True)
class GeodeticCoord:
    phi: float
    lam: float
    h: float
    u: float = float("nan")
    iterations: int = field(default=0, compare=False)


@dataclass(frozen=True)
class DeflectionComponents:
    """Deflection of the vertical in radians; ``delta_a`` is ``eta * tan(phi)``."""

    xi: float
    eta: float
    delta_a: float = None

    def with_azimuth(self, phi):
        return DeflectionComponents(self.xi, self.eta, self.eta * math.tan(phi))

    def check(self, limit=1e-3):
        """Reject deflections larger than any realistic gravity field produces."""
        if abs(self.xi) >= limit or abs(self.eta) >= limit:
            raise DomainError(f"deflection ({self.xi:.3e}, {self.eta:.3e}) rad exceeds {limit} rad")
        return self


ZERO_DEFLECTION = DeflectionComponents(0.0, 0.0, 0.0)


def prime_vertical_radius(phi, ell=WGS84):
    """R_N = a / sqrt(1 - e2 sin^2 phi)."""
    s = np.sin(phi)
    return ell.a / np.sqrt(1.0 - ell.e2 * s * s)


def meridian_radius(phi, ell=WGS84):
    """R_M = a (1 - e2) / (1 - e2 sin^2 phi)^(3/2)."""
    s = np.sin(phi)
    return ell.a * (1.0 - ell.e2) / (1.0 - ell.e2 * s * s) ** 1.5


def geodetic_to_ecef(phi, lam, h, ell=WGS84):
    """Closed-form forward mapping; broadcasts over array inputs."""
    phi, lam, h = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (phi, lam, h)))
    n = prime_vertical_radius(phi, ell)
    cp = np.cos(phi)
    x = (n + h) * cp * np.cos(lam)
    y = (n + h) * cp * np.sin(lam)
    z = (n * (1.0 - ell.e2) + h) * np.sin(phi)
    return np.stack([x, y, z], axis=-1)


# ---------------------------------------------------------------- iteration


def _as_xyz(p):
    if isinstance(p, EcefCoord):
        return p.as_array()[None, :]
    arr = np.asarray(p, dtype=float)
    return arr.reshape(-1, 3)


def ecef_to_geodetic_array(xyz, ell=WGS84, cfg=ConversionSettings(), polar_branch=False, trace=None):
    """
    Vectorised ECEF to geodetic conversion.

    Parameters
    ----------
    xyz : array_like(N, 3)
        ECEF positions in metres
    ell : EllipsoidParams
    cfg : ConversionSettings
    polar_branch : bool
        if True, points with P = sqrt(X^2 + Y^2) < 1 m are handled in closed
        form; otherwise they raise DomainError
    trace : list, optional
        receives the per-iteration maximum latitude change

    Returns
    -------
    phi, lam, h : ndarray(N,)
    iterations : ndarray(N,) of int
    """
    xyz = _as_xyz(xyz)
    x, y, z = xyz[:, 0], xyz[:, 1], xyz[:, 2]
    p = np.hypot(x, y)
    polar = p < 1.0
    if np.any(polar) and not polar_branch:
        raise DomainError("point within 1 m of the polar axis; use the polar branch (polar_branch=True)")

    a, e2 = ell.a, ell.e2
    lam = np.where(polar, 0.0, np.arctan2(y, x))
    phi = np.zeros_like(p)
    h = np.zeros_like(p)
    iterations = np.zeros(p.shape, dtype=int)

    reg = ~polar
    if np.any(reg):
        pr, zr = p[reg], z[reg]
        n_i = np.full_like(pr, a)
        h_i = np.sqrt(pr * pr + zr * zr) - a * (1.0 - e2) ** 0.25
        phi_prev = np.arctan2(zr, pr * (1.0 - e2 * n_i / (n_i + h_i)))
        its = np.zeros(pr.shape, dtype=int)
        active = np.ones(pr.shape, dtype=bool)
        done_phi = phi_prev.copy()
        for i in range(1, cfg.max_iterations + 1):
            ph = phi_prev[active]
            s = np.sin(ph)
            n_i = a / np.sqrt(1.0 - e2 * s * s)
            h_i = pr[active] / np.cos(ph) - n_i
            ph_new = np.arctan2(zr[active], pr[active] * (1.0 - e2 * n_i / (n_i + h_i)))
            delta = np.abs(ph_new - ph)
            if trace is not None:
                trace.append(float(delta.max()))
            idx = np.flatnonzero(active)
            done_phi[idx] = ph_new
            phi_prev[idx] = ph_new
            its[idx] = i
            conv = delta < cfg.epsilon
            active[idx[conv]] = False
            if not active.any():
                break
        if active.any():
            raise ConvergenceError(
                f"latitude iteration did not reach {cfg.epsilon} rad in {cfg.max_iterations} steps "
                f"for {int(active.sum())} point(s)",
                last_iterate=done_phi.copy(),
            )
        # height refreshed at the converged latitude (next iteration's h-update,
        # written in a form that stays well conditioned near the poles)
        s, c = np.sin(done_phi), np.cos(done_phi)
        h_r = pr * c + zr * s - a * np.sqrt(1.0 - e2 * s * s)
        phi[reg], h[reg], iterations[reg] = done_phi, h_r, its

    if np.any(polar):
        phi[polar] = np.where(z[polar] >= 0, 0.5 * np.pi, -0.5 * np.pi)
        h[polar] = np.abs(z[polar]) - ell.b

    return phi, lam, h, iterations


def ecef_to_geodetic(p, ell=WGS84, cfg=ConversionSettings(), polar_branch=False):
    """Convert one ECEF point to geodetic coordinates (see ``ecef_to_geodetic_array``)."""
    xyz = _as_xyz(p)
    if xyz.shape[0] != 1:
        raise DomainError("ecef_to_geodetic takes a single point; use ecef_to_geodetic_array")
    phi, lam, h, its = ecef_to_geodetic_array(xyz, ell, cfg, polar_branch=polar_branch)
    u = float(ellipsoidal_u(xyz, ell)[0])
    return GeodeticCoord(float(phi[0]), float(lam[0]), float(h[0]), u, int(its[0]))


# ----------------------------------------------------- ellipsoidal coordinates


def ellipsoidal_u(xyz, ell=WGS84):
    """
    Semi-minor axis ``u`` of the confocal ellipsoid through each point.

    Equals ``b`` on the reference ellipsoid. Computed from the Cartesian
    position directly, so there is no singularity at the equator.
    """
    xyz = _as_xyz(xyz)
    e2_lin = ell.E ** 2
    r2 = np.einsum("ij,ij->i", xyz, xyz)
    d = r2 - e2_lin
    disc = np.sqrt(d * d + 4.0 * e2_lin * xyz[:, 2] ** 2)
    # u^2 = (d + disc) / 2, rewritten to avoid cancellation when d < 0
    u2 = np.where(d >= 0, 0.5 * (d + disc), 2.0 * e2_lin * xyz[:, 2] ** 2 / np.maximum(disc - d, 1e-300))
    return np.sqrt(u2)


def ellipsoidal_u_from_latitude(z, phi, ell=WGS84):
    """u = Z sqrt(1 - e2 sin^2 phi) / (sqrt(1 - e2) sin phi); undefined at phi = 0."""
    s = np.sin(phi)
    return z * np.sqrt(1.0 - ell.e2 * s * s) / (np.sqrt(1.0 - ell.e2) * s)


def ecef_to_ellipsoidal(xyz, ell=WGS84):
    """Return ``(u, beta, lam)``: confocal semi-minor axis, reduced latitude, longitude."""
    xyz = _as_xyz(xyz)
    u = ellipsoidal_u(xyz, ell)
    p = np.hypot(xyz[:, 0], xyz[:, 1])
    beta = np.arctan2(xyz[:, 2] * np.sqrt(u * u + ell.E ** 2), u * p)
    lam = np.arctan2(xyz[:, 1], xyz[:, 0])
    return u, beta, lam


def ellipsoidal_to_ecef(u, beta, lam, ell=WGS84):
    u, beta, lam = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (u, beta, lam)))
    big = np.sqrt(u * u + ell.E ** 2)
    return np.stack(
        [big * np.cos(beta) * np.cos(lam), big * np.cos(beta) * np.sin(lam), u * np.sin(beta)], axis=-1
    )


def normal_latitude(u, beta, ell=WGS84):
    """Latitude of the normal to the confocal ellipsoid ``u`` at reduced latitude ``beta``."""
    return np.arctan2(np.sin(beta) * np.sqrt(u * u + ell.E ** 2), u * np.cos(beta))


def reduced_latitude(u, phi, ell=WGS84):
    """Inverse of ``normal_latitude``: ``tan(beta) = u / sqrt(u^2 + E^2) * tan(phi)``."""
    return np.arctan2(u * np.sin(phi), np.sqrt(u * u + ell.E ** 2) * np.cos(phi))


# ------------------------------------------------------------------ rotations


@dataclass(frozen=True)
class RotationMatrix:
    """A 3x3 frame rotation (or reflection) with the axis and angle that built it."""

    matrix: np.ndarray
    axis: int = 0
    theta: float = 0.0

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise DomainError("rotation matrices are 3x3")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __matmul__(self, other):
        if isinstance(other, RotationMatrix):
            return RotationMatrix(self.matrix @ other.matrix)
        return self.matrix @ other

    @property
    def det(self):
        return float(np.linalg.det(self.matrix))

    def is_orthonormal(self, tol=1e-12):
        return bool(np.max(np.abs(self.matrix.T @ self.matrix - np.eye(3))) <= tol)


_DOMAINS = {1: 2 * math.pi, 2: math.pi, 3: 2 * math.pi}


def make_rotation(axis, theta):
    """
    Elementary rotation about ``axis`` (1, 2 or 3) by ``theta`` radians.

    R2 accepts theta in [-pi, pi]; R1 and R3 accept [-2 pi, 2 pi].
    """
    if axis not in _DOMAINS:
        raise DomainError(f"axis must be 1, 2 or 3, got {axis}")
    bound = _DOMAINS[axis]
    if not abs(theta) <= bound + _ANGLE_SLACK:
        raise DomainError(f"R{axis} angle {theta} outside [-{bound}, {bound}]")
    c, s = math.cos(theta), math.sin(theta)
    if axis == 1:
        m = [[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]]
    elif axis == 2:
        m = [[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]]
    else:
        m = [[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]]
    return RotationMatrix(m, axis, float(theta))


def make_reflection_s2():
    """Reflection of the second axis; turns (south, west) style axes into (north, east)."""
    return RotationMatrix([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]], 2, 0.0)


def local_geodetic_matrix(phi, lam):
    return make_reflection_s2() @ make_rotation(2, phi - 0.5 * math.pi) @ make_rotation(3, lam - math.pi)


def astronomical_matrix(d, phi=None):
    delta_a = d.delta_a
    if delta_a is None:
        if phi is None:
            raise DomainError("delta_a missing and no latitude given to derive it")
        delta_a = d.eta * math.tan(phi)
    return make_rotation(1, -d.eta) @ make_rotation(2, d.xi) @ make_rotation(3, -delta_a)


def ecef_to_local_geodetic(p, phi, lam):
    """Rotate an ECEF vector into the local geodetic (north, east, up) axes."""
    v = local_geodetic_matrix(phi, lam) @ _as_xyz(p)[0]
    return LocalCoord(*v, frame=Frame.LOCAL_GEODETIC)


def ecef_to_local_geodetic_array(xyz, phi, lam):
    """Apply the same local geodetic rotation to every row of ``xyz``."""
    return _as_xyz(xyz) @ local_geodetic_matrix(phi, lam).matrix.T


def local_geodetic_to_astronomical(p, d, phi=None):
    """Rotate a local geodetic coordinate into the local astronomical frame."""
    if p.frame is not Frame.LOCAL_GEODETIC:
        raise FrameError(f"expected a {Frame.LOCAL_GEODETIC.value} coordinate, got {p.frame.value}")
    v = astronomical_matrix(d, phi) @ p.as_array()
    return LocalCoord(*v, frame=Frame.LOCAL_ASTRONOMICAL)


def local_geodetic_to_astronomical_array(enu, d, phi=None):
    return np.asarray(enu, dtype=float).reshape(-1, 3) @ astronomical_matrix(d, phi).matrix.T
