import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gnss_subsidence.errors import ConvergenceError, DomainError, FrameError
from gnss_subsidence.geodesy import (
    WGS84,
    ZERO_DEFLECTION,
    ConversionSettings,
    DeflectionComponents,
    EllipsoidParams,
    astronomical_matrix,
    ecef_to_ellipsoidal,
    ecef_to_geodetic,
    ecef_to_geodetic_array,
    ecef_to_local_geodetic,
    ecef_to_local_geodetic_array,
    ellipsoidal_to_ecef,
    ellipsoidal_u,
    ellipsoidal_u_from_latitude,
    geodetic_to_ecef,
    local_geodetic_matrix,
    local_geodetic_to_astronomical,
    local_geodetic_to_astronomical_array,
    make_reflection_s2,
    make_rotation,
    meridian_radius,
    normal_latitude,
    prime_vertical_radius,
    reduced_latitude,
)
from gnss_subsidence.series import Frame, LocalCoord

lat = st.floats(-math.radians(89.9), math.radians(89.9))
lon = st.floats(-math.pi, math.pi)
height = st.floats(-500.0, 9000.0)


def test_ellipsoid_constants():
    assert WGS84.b == pytest.approx(6356752.314245, abs=1e-6)
    assert WGS84.E == pytest.approx(521854.0084, abs=1e-3)
    with pytest.raises(DomainError):
        EllipsoidParams(1.0, 1.5)


def test_radii_at_equator_and_pole():
    assert prime_vertical_radius(0.0) == pytest.approx(WGS84.a, rel=1e-15)
    assert meridian_radius(0.0) == pytest.approx(WGS84.a * (1 - WGS84.e2), rel=1e-15)
    assert prime_vertical_radius(math.pi / 2) == pytest.approx(meridian_radius(math.pi / 2), rel=1e-14)


def test_forward_mapping_known_points():
    assert np.allclose(np.ravel(geodetic_to_ecef(0.0, 0.0, 0.0)), [WGS84.a, 0, 0], atol=1e-9)
    assert np.allclose(np.ravel(geodetic_to_ecef(math.pi / 2, 0.0, 0.0)), [0, 0, WGS84.b], atol=1e-6)


@given(lat, lon, height)
def test_geodetic_round_trip(phi, lam, h):
    p = np.ravel(geodetic_to_ecef(phi, lam, h))
    g = ecef_to_geodetic(p)
    assert abs(g.phi - phi) <= 1e-11
    assert abs(math.remainder(g.lam - lam, 2 * math.pi)) <= 1e-11
    assert abs(g.h - h) <= 1e-6


def test_vectorised_matches_scalar(rng):
    phi = rng.uniform(-1.5, 1.5, 20)
    lam = rng.uniform(-3, 3, 20)
    h = rng.uniform(0, 1000, 20)
    xyz = geodetic_to_ecef(phi, lam, h)
    pa, la, ha, _ = ecef_to_geodetic_array(xyz)
    for i in range(20):
        g = ecef_to_geodetic(xyz[i])
        assert (g.phi, g.lam, g.h) == (pa[i], la[i], ha[i])


def test_polar_branch():
    p = np.array([0.1, 0.0, WGS84.b + 50.0])
    with pytest.raises(DomainError):
        ecef_to_geodetic(p)
    g = ecef_to_geodetic(p, polar_branch=True)
    assert g.phi == math.pi / 2 and g.h == pytest.approx(50.0, abs=1e-9)


def test_iteration_cap_reports_last_iterate():
    p = np.ravel(geodetic_to_ecef(0.7, 0.2, 100.0))
    with pytest.raises(ConvergenceError) as info:
        ecef_to_geodetic(p, cfg=ConversionSettings(epsilon=1e-300, max_iterations=1))
    assert info.value.last_iterate is not None


def test_iteration_trace_decreases():
    trace = []
    ecef_to_geodetic_array(np.ravel(geodetic_to_ecef(0.9, 0.2, 2000.0)), trace=trace)
    assert trace[-1] < 1e-12 and trace[0] >= trace[-1]


def test_u_is_b_on_the_ellipsoid(rng):
    phi = rng.uniform(-1.5, 1.5, 50)
    xyz = geodetic_to_ecef(phi, rng.uniform(-3, 3, 50), 0.0)
    assert np.allclose(ellipsoidal_u(xyz), WGS84.b, rtol=0, atol=1e-6)
    assert np.allclose(ellipsoidal_u_from_latitude(xyz[:, 2], phi), WGS84.b, rtol=0, atol=1e-6)


def test_u_at_equator_is_finite():
    u = ellipsoidal_u(np.array([WGS84.a + 100.0, 0.0, 0.0]))[0]
    assert u == pytest.approx(math.sqrt((WGS84.a + 100.0) ** 2 - WGS84.E**2), rel=1e-14)


@given(st.floats(6.0e6, 7.0e6), st.floats(-1.5, 1.5), lon)
def test_ellipsoidal_coordinates_round_trip(u, beta, lam):
    xyz = ellipsoidal_to_ecef(u, beta, lam)
    u2, b2, l2 = ecef_to_ellipsoidal(xyz)
    assert abs(u2[0] - u) <= 1e-6 and abs(b2[0] - beta) <= 1e-12
    assert abs(math.remainder(l2[0] - lam, 2 * math.pi)) <= 1e-12


@given(st.floats(6.3e6, 7.0e6), st.floats(-1.5, 1.5))
def test_normal_and_reduced_latitude_invert(u, phi):
    assert abs(normal_latitude(u, reduced_latitude(u, phi)) - phi) <= 1e-12


@given(st.integers(1, 3), st.floats(-math.pi, math.pi))
def test_rotations_orthonormal(axis, theta):
    r = make_rotation(axis, theta)
    assert r.is_orthonormal(1e-12)
    assert r.det == pytest.approx(1.0, abs=1e-12)


def test_rotation_domains():
    with pytest.raises(DomainError):
        make_rotation(2, 4.0)
    with pytest.raises(DomainError):
        make_rotation(4, 0.1)
    make_rotation(3, 2 * math.pi)


def test_reflection_is_an_exact_involution():
    s = make_reflection_s2()
    assert np.array_equal((s @ s).matrix, np.eye(3))
    assert s.det == -1.0


def test_rotation_composition_adds_angles():
    a, b = 0.3, -1.1
    assert np.allclose((make_rotation(3, a) @ make_rotation(3, b)).matrix, make_rotation(3, a + b).matrix,
                       rtol=0, atol=1e-15)


@given(lat, lon)
def test_local_frame_axes(phi, lam):
    r = local_geodetic_matrix(phi, lam).matrix
    up = np.array([math.cos(phi) * math.cos(lam), math.cos(phi) * math.sin(lam), math.sin(phi)])
    north = np.array([-math.sin(phi) * math.cos(lam), -math.sin(phi) * math.sin(lam), math.cos(phi)])
    east = np.array([-math.sin(lam), math.cos(lam), 0.0])
    assert np.allclose(r @ up, [0, 0, 1], atol=1e-12)
    assert np.allclose(r @ north, [1, 0, 0], atol=1e-12)
    assert np.allclose(r @ east, [0, 1, 0], atol=1e-12)
    assert np.max(np.abs(r.T @ r - np.eye(3))) <= 1e-12


def test_local_transform_preserves_distances(rng):
    pts = geodetic_to_ecef(0.8 + rng.normal(scale=1e-4, size=30),
                           0.2 + rng.normal(scale=1e-4, size=30), rng.uniform(0, 50, 30))
    lg = ecef_to_local_geodetic_array(pts, 0.8, 0.2)
    d0 = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    d1 = np.linalg.norm(lg[:, None] - lg[None], axis=-1)
    off = d0 > 0
    assert np.max(np.abs(d1[off] - d0[off]) / d0[off]) <= 1e-9


def test_single_point_transform_tags_frame():
    p = ecef_to_local_geodetic(np.array([WGS84.a, 0.0, 0.0]), 0.0, 0.0)
    assert p.frame is Frame.LOCAL_GEODETIC
    assert p.as_array() == pytest.approx([0, 0, WGS84.a], abs=1e-9)


def test_astronomical_transform():
    p = LocalCoord(1.0, 2.0, 3.0, Frame.LOCAL_GEODETIC)
    same = local_geodetic_to_astronomical(p, ZERO_DEFLECTION)
    assert same.frame is Frame.LOCAL_ASTRONOMICAL
    assert np.array_equal(same.as_array(), p.as_array())
    with pytest.raises(FrameError):
        local_geodetic_to_astronomical(same, ZERO_DEFLECTION)


def test_astronomical_matrix_small_angles():
    d = DeflectionComponents(1e-5, -2e-5).with_azimuth(0.7)
    r = astronomical_matrix(d).matrix
    assert np.max(np.abs(r.T @ r - np.eye(3))) <= 1e-12
    # to first order the up axis tilts by (-xi, -eta)
    assert np.allclose(r @ [0, 0, 1], [-1e-5, 2e-5, 1], atol=1e-9)
    with pytest.raises(DomainError):
        astronomical_matrix(DeflectionComponents(1e-5, 1e-5))


def test_astronomical_array_matches_point(rng):
    d = DeflectionComponents(3e-6, 4e-6).with_azimuth(0.5)
    enu = rng.normal(size=(5, 3))
    arr = local_geodetic_to_astronomical_array(enu, d)
    one = local_geodetic_to_astronomical(LocalCoord(*enu[2], Frame.LOCAL_GEODETIC), d).as_array()
    assert np.allclose(arr[2], one, rtol=0, atol=1e-15)


def test_deflection_sanity_gate():
    with pytest.raises(DomainError):
        DeflectionComponents(2e-3, 0.0).check()
