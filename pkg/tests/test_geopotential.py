import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import lpmv

from gnss_subsidence.errors import DomainError
from gnss_subsidence.geodesy import WGS84, geodetic_to_ecef, ellipsoidal_u
from gnss_subsidence.geopotential import (
    WGS84_NORMAL,
    GeopotentialModel,
    deflection_grid,
    deflections,
    legendre_p_normalized,
    potential_w_and_gamma0,
    q_ratio,
    q_ratio_table,
    residual_potential_t,
)
from gnss_subsidence.ingest import bundled_gfc_path, parse_gfc

B, E = WGS84.b, WGS84.E


def normal_only_model(max_degree):
    c = np.zeros((max_degree + 1, max_degree + 1))
    s = np.zeros_like(c)
    c[0, 0] = 1.0
    m = GeopotentialModel(c, s)
    for n, cn in WGS84_NORMAL.zonal_coefficients(max_degree, m.gm, m.ref_radius).items():
        c[n, 0] = cn
    return GeopotentialModel(c, s)


def synthetic_model(max_degree, seed=8):
    rng = np.random.default_rng(seed)
    base = normal_only_model(max_degree)
    c, s = np.array(base.c), np.array(base.s)
    for n in range(2, max_degree + 1):
        c[n, : n + 1] += 1e-5 / n**2 * rng.standard_normal(n + 1)
        s[n, 1 : n + 1] += 1e-5 / n**2 * rng.standard_normal(n)
    return GeopotentialModel(c, s)


def closed_form_q2(u):
    # the bracket cancels badly for large u/E, so it is evaluated in extended precision
    with mpmath.workdps(40):
        z = mpmath.mpf(u) / mpmath.mpf(E)
        return 0.5 * ((1 + 3 * z * z) * mpmath.atan(1 / z) - 3 * z)


# ------------------------------------------------------------------ Legendre


@given(st.floats(-0.999, 0.999))
def test_legendre_matches_scipy(x):
    p, _ = legendre_p_normalized(20, x)
    for n in range(21):
        for m in range(n + 1):
            norm = math.sqrt((2 - (m == 0)) * (2 * n + 1) * math.factorial(n - m) / math.factorial(n + m))
            ref = (-1) ** m * norm * lpmv(m, n, x)
            assert abs(p[n, m] - ref) <= 1e-11 * max(1.0, abs(ref))


def test_legendre_high_degree_against_mpmath():
    mpmath.mp.dps = 40
    x = 0.61
    p, _ = legendre_p_normalized(120, x)
    for n, m in [(60, 0), (90, 45), (120, 119), (120, 3)]:
        norm = mpmath.sqrt((2 - (m == 0)) * (2 * n + 1) * mpmath.factorial(n - m) / mpmath.factorial(n + m))
        ref = (-1) ** m * float(norm * mpmath.legenp(n, m, x))
        assert abs(p[n, m] - ref) <= 1e-10 * max(1.0, abs(ref))


@given(st.floats(-1.0, 1.0))
def test_legendre_sum_rule(x):
    p, _ = legendre_p_normalized(30, x)
    for n in range(31):
        assert abs(np.sum(p[n, : n + 1] ** 2) - (2 * n + 1)) <= 1e-9 * (2 * n + 1)


def test_legendre_derivative_matches_finite_difference():
    phi, h = 0.4, 1e-6
    _, dp = legendre_p_normalized(36, math.sin(phi))
    pp, _ = legendre_p_normalized(36, math.sin(phi + h))
    pm, _ = legendre_p_normalized(36, math.sin(phi - h))
    fd = (pp - pm) / (2 * h)
    assert np.max(np.abs(dp - fd)) <= 1e-6 * np.max(np.abs(dp))


def test_legendre_domain():
    with pytest.raises(DomainError):
        legendre_p_normalized(4, 1.5)


# ------------------------------------------------------------------ Q ratio


def test_q_ratio_is_one_on_the_ellipsoid():
    for n in range(0, 12):
        for m in range(n + 1):
            assert q_ratio(n, m, B) == 1.0
    ratio, _ = q_ratio_table(10, B)
    assert np.all(ratio[np.tril_indices(11)] == 1.0)


@given(st.floats(B, B + 1e6))
def test_q_ratio_degree_two_closed_form(u):
    expect = float(closed_form_q2(u) / closed_form_q2(B))
    assert abs(q_ratio(2, 0, u) - expect) <= 1e-10 * expect


def test_q_ratio_against_mpmath_second_kind():
    mpmath.mp.dps = 40
    for n, m in [(2, 1), (5, 3), (10, 10), (20, 7), (36, 0)]:
        for u in (B + 100.0, B + 9000.0, 7.0e6):
            q = lambda uu: mpmath.legenq(n, m, 1j * mpmath.mpf(uu) / E, type=3)
            ref = float(mpmath.re(q(u) / q(B)))
            assert abs(q_ratio(n, m, u) - ref) <= 1e-10 * abs(ref)


def test_q_ratio_table_matches_scalar():
    u = B + 3000.0
    ratio, _ = q_ratio_table(12, u)
    for n in range(13):
        for m in range(n + 1):
            assert ratio[n, m] == pytest.approx(q_ratio(n, m, u), rel=1e-13)


def test_q_ratio_derivative():
    u, h = B + 2000.0, 1.0
    _, d = q_ratio_table(20, u)
    fd = (q_ratio_table(20, u + h)[0] - q_ratio_table(20, u - h)[0]) / (2 * h)
    assert np.max(np.abs(d - fd)) <= 1e-9 * np.max(np.abs(d))


def test_q_ratio_decays_outwards():
    assert q_ratio(8, 3, B + 1e5) < q_ratio(8, 3, B + 1e3) < 1.0


def test_q_ratio_domain():
    with pytest.raises(DomainError):
        q_ratio(2, 0, B - 1.0)
    with pytest.raises(DomainError):
        q_ratio(2, 3, B)


# ------------------------------------------------------------ normal gravity


def test_normal_field_constants():
    assert WGS84_NORMAL.j2 == pytest.approx(1.082629821e-3, rel=1e-8)
    assert WGS84_NORMAL.somigliana(0.0) == pytest.approx(9.7803253359, abs=1e-9)
    assert WGS84_NORMAL.somigliana(math.pi / 2) == pytest.approx(9.8321849378, abs=1e-9)


def test_normal_potential_on_the_ellipsoid():
    m = normal_only_model(8)
    for phi in (0.0, 0.5, 1.2):
        w, ctx = potential_w_and_gamma0(m, phi, 0.3, B)
        # U0 of WGS84 scaled by the coefficient file's GM
        assert w == pytest.approx(62636851.7146 * m.gm / WGS84_NORMAL.gm, rel=1e-6)
        assert ctx.gamma0 == pytest.approx(WGS84_NORMAL.somigliana(phi), abs=1e-3)


def test_gamma_accuracy_at_equator():
    w, ctx = potential_w_and_gamma0(normal_only_model(2), 0.0, 0.0, B)
    assert abs(ctx.gamma0 - WGS84_NORMAL.somigliana(0.0)) <= 1e-3


def test_residual_potential_vanishes_for_normal_field():
    m = normal_only_model(10)
    assert abs(residual_potential_t(m, 0.7, 1.0, B)) < 1e-6
    d = deflections(m, 0.7, 1.0, B)
    assert abs(d.xi) < 1e-15 and abs(d.eta) < 1e-15


def test_residual_potential_linear_in_coefficients():
    m = synthetic_model(8)
    normal = normal_only_model(8)
    doubled = m.with_coefficients(c=normal.c + 2 * (m.c - normal.c), s=2 * m.s)
    t1 = residual_potential_t(m, 0.3, 0.2, B)
    assert residual_potential_t(doubled, 0.3, 0.2, B) == pytest.approx(2 * t1, rel=1e-9)


# ------------------------------------------------------------- deflections


def fd_deflections(model, phi, lam, u, h=1e-5):
    _, ctx = potential_w_and_gamma0(model, phi, lam, u)
    t_phi = (residual_potential_t(model, phi + h, lam, u) - residual_potential_t(model, phi - h, lam, u)) / (2 * h)
    t_lam = (residual_potential_t(model, phi, lam + h, u) - residual_potential_t(model, phi, lam - h, u)) / (2 * h)
    return t_phi / (ctx.r_m * ctx.gamma0), t_lam / (ctx.r_n * math.cos(phi) * ctx.gamma0)


@pytest.mark.parametrize("phi,lam", [(0.1, 0.2), (0.8, -2.0), (-1.2, 3.0)])
def test_deflections_match_finite_differences_degree_8(phi, lam):
    m = synthetic_model(8)
    d = deflections(m, phi, lam, B)
    xi, eta = fd_deflections(m, phi, lam, B)
    assert abs(d.xi - xi) <= 1e-8 and abs(d.eta - eta) <= 1e-8


def test_deflections_match_finite_differences_bundled_field():
    m = parse_gfc(bundled_gfc_path(), max_degree=36)
    for phi, lam in [(0.785, 0.17), (0.2, -1.0)]:
        d = deflections(m, phi, lam, B)
        xi, eta = fd_deflections(m, phi, lam, B)
        assert abs(d.xi - xi) <= 1e-6 * abs(xi)
        assert abs(d.eta - eta) <= 1e-6 * abs(eta)


def test_deflections_above_the_ellipsoid():
    m = synthetic_model(8)
    u = float(ellipsoidal_u(geodetic_to_ecef(0.6, 0.4, 2000.0))[0])
    d = deflections(m, 0.6, 0.4, u)
    xi, eta = fd_deflections(m, 0.6, 0.4, u)
    assert abs(d.xi - xi) <= 1e-8 and abs(d.eta - eta) <= 1e-8


def test_deflection_magnitude_realistic():
    m = parse_gfc(bundled_gfc_path())
    rows = deflection_grid(m, [0.3, 0.8], [0.0, 1.0])
    assert len(rows) == 4
    for _, _, xi, eta, g in rows:
        assert abs(xi) < 1e-4 and abs(eta) < 1e-4
        assert 9.77 < g < 9.84


def test_deflection_domain_errors():
    m = synthetic_model(4)
    with pytest.raises(DomainError):
        deflections(m, math.radians(89.5), 0.0, B)
    with pytest.raises(DomainError):
        deflections(m, 0.3, 0.0, B - 10.0)
