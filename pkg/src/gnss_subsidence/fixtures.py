"""
Synthetic station generator.

A station is placed at a geodetic position and given a vertical (up)
displacement made of a linear trend, sinusoids at chosen periods and white
noise; north and east get the same noise level. The local displacement is
rotated into ECEF and added to the station position. Days can be dropped at
random and a contiguous outage cut out. Everything random comes from
``numpy.random.default_rng(seed)``.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import DomainError
from .geodesy import WGS84, geodetic_to_ecef, local_geodetic_matrix
from .series import JULIAN_YEAR_DAYS, SIDEREAL_YEAR_DAYS, PositionSeries, julian_to_sidereal

#: default up-component harmonics: (period in days, cosine amplitude, sine amplitude) in metres
DEFAULT_HARMONICS = ((180.1, 0.003, 0.001), (359.5, 0.002, -0.004))


@dataclass(frozen=True)
class FixtureSpec:
    station_id: str = "SYNT"
    slope: float = -0.003
    start_year: float = 2015.0
    years: float = 4.0
    lat_deg: float = 45.0
    lon_deg: float = 10.0
    height: float = 100.0
    harmonics: tuple = DEFAULT_HARMONICS
    noise: float = 0.001
    gap_fraction: float = 0.0
    outage: tuple = None
    seed: int = 0

    def __post_init__(self):
        if self.years <= 0:
            raise DomainError("years must be positive")
        if self.noise < 0:
            raise DomainError("noise must be non-negative")
        if not 0 <= self.gap_fraction < 1:
            raise DomainError("gap_fraction must lie in [0, 1)")
        if not -90 < self.lat_deg < 90:
            raise DomainError("latitude must lie strictly between the poles")


@dataclass(frozen=True)
class Fixture:
    series: PositionSeries
    up: np.ndarray
    trend: np.ndarray
    periodic: np.ndarray
    reference: np.ndarray
    spec: FixtureSpec


def periodic_signal(t_sidereal, harmonics):
    """Sum of ``a cos(2 pi f t) + b sin(2 pi f t)`` with ``f`` in cycles per sidereal year."""
    out = np.zeros_like(t_sidereal, dtype=float)
    for period, a, b in harmonics:
        phase = 2.0 * np.pi * (SIDEREAL_YEAR_DAYS / period) * t_sidereal
        out += a * np.cos(phase) + b * np.sin(phase)
    return out


def make_fixture(spec=FixtureSpec()):
    rng = np.random.default_rng(spec.seed)
    n_days = int(round(spec.years * JULIAN_YEAR_DAYS))
    years = spec.start_year + np.arange(n_days) / JULIAN_YEAR_DAYS
    t = julian_to_sidereal(years)

    trend = spec.slope * (years - spec.start_year)
    periodic = periodic_signal(t, spec.harmonics)
    noise = spec.noise * rng.standard_normal((n_days, 3))
    up = trend + periodic + noise[:, 2]
    local = np.column_stack([noise[:, 0], noise[:, 1], up])

    phi, lam = math.radians(spec.lat_deg), math.radians(spec.lon_deg)
    reference = np.asarray(geodetic_to_ecef(phi, lam, spec.height, WGS84), dtype=float).ravel()
    rot = local_geodetic_matrix(phi, lam).matrix
    xyz = reference + local @ rot

    keep = np.ones(n_days, dtype=bool)
    if spec.gap_fraction > 0:
        n_drop = int(round(spec.gap_fraction * n_days))
        # first and last days stay so the span is fixed
        drop = rng.choice(np.arange(1, n_days - 1), size=n_drop, replace=False)
        keep[drop] = False
    if spec.outage is not None:
        start, length = spec.outage
        keep[int(start):int(start) + int(length)] = False
    series = PositionSeries(
        station_id=spec.station_id,
        epochs=t[keep],
        xyz=xyz[keep],
        epoch_years=years[keep],
        frame_label="synthetic",
    )
    return Fixture(series, up[keep], trend[keep], periodic[keep], reference, spec)
