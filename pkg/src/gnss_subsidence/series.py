"""
Epoch-indexed coordinate series.

Time is carried internally in decimal *sidereal* years, the unit the tidal and
atmospheric frequency table is expressed in. Files carry decimal Julian years;
``julian_to_sidereal`` / ``sidereal_to_julian`` convert between the two.

Every container here is immutable: dataclasses are frozen and the numpy arrays
they hold are flagged read-only, so series can be shared freely between
concurrent station pipelines.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError

SIDEREAL_YEAR_DAYS = 365.25636
JULIAN_YEAR_DAYS = 365.25

#: one day in sidereal years
DAY = 1.0 / SIDEREAL_YEAR_DAYS
#: daily sampling, the default for NGL-style products
NOMINAL_STEP = DAY

#: smallest ECEF norm accepted for a ground station (m)
MIN_STATION_NORM = 6.0e6


def julian_to_sidereal(t):
    """Convert decimal Julian years to decimal sidereal years."""
    return np.asarray(t, dtype=float) * (JULIAN_YEAR_DAYS / SIDEREAL_YEAR_DAYS)


def sidereal_to_julian(t):
    """Convert decimal sidereal years to decimal Julian years."""
    return np.asarray(t, dtype=float) * (SIDEREAL_YEAR_DAYS / JULIAN_YEAR_DAYS)


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


class Frame(str, Enum):
    LOCAL_GEODETIC = "LocalGeodetic"
    LOCAL_ASTRONOMICAL = "LocalAstronomical"


@dataclass(frozen=True)
class EcefCoord:
    """Earth-centred Earth-fixed position in metres."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (self.x, self.y, self.z)):
            raise DomainError(f"non-finite ECEF coordinate {self!r}")

    def as_array(self):
        return np.array([self.x, self.y, self.z], dtype=float)

    @property
    def norm(self):
        return float(np.linalg.norm(self.as_array()))

    def check_station(self, min_norm=MIN_STATION_NORM):
        """Raise if the point is too close to the geocentre to be a ground station."""
        if min_norm is not None and self.norm <= min_norm:
            raise DomainError(f"|p| = {self.norm:.3f} m is below the station gate {min_norm} m")
        return self


@dataclass(frozen=True)
class LocalCoord:
    """Position in a local frame; ``frame`` is fixed at construction."""

    e1: float
    e2: float
    e3: float
    frame: Frame

    def __post_init__(self):
        object.__setattr__(self, "frame", Frame(self.frame))

    def as_array(self):
        return np.array([self.e1, self.e2, self.e3], dtype=float)


def _check_increasing(epochs):
    if epochs.ndim != 1:
        raise DomainError("epochs must be one-dimensional")
    if not np.all(np.isfinite(epochs)):
        raise DomainError("epochs must be finite")
    if epochs.size > 1 and np.any(np.diff(epochs) <= 0):
        raise DomainError("epochs must be strictly increasing")


@dataclass(frozen=True)
class ScalarSeries:
    """A scalar value (metres) per epoch (sidereal years)."""

    epochs: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        epochs = _frozen(self.epochs)
        values = _frozen(self.values)
        if epochs.shape != values.shape:
            raise DomainError(f"epochs {epochs.shape} and values {values.shape} differ in length")
        _check_increasing(epochs)
        object.__setattr__(self, "epochs", epochs)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    def head(self, n):
        return ScalarSeries(self.epochs[:n], self.values[:n])

    def tail(self, start):
        return ScalarSeries(self.epochs[start:], self.values[start:])

    def with_values(self, values):
        return ScalarSeries(self.epochs, values)


@dataclass(frozen=True)
class CenteredSeries:
    """A series shifted so its first ``n_train`` values average to zero."""

    base: ScalarSeries
    training_mean: float
    n_train: int
    values: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.values is None:
            values = self.base.values - self.training_mean
        else:
            values = self.values
        values = _frozen(values)
        if values.shape != self.base.values.shape:
            raise DomainError("centred values do not match the base series")
        object.__setattr__(self, "values", values)

    @property
    def epochs(self):
        return self.base.epochs

    def __len__(self):
        return self.values.size


def center_on_training_mean(s, n):
    """
    Subtract the mean of the first ``n`` values from every value.

    Parameters
    ----------
    s : ScalarSeries
    n : int
        number of training values, ``1 <= n <= len(s)``

    Returns
    -------
    CenteredSeries
    """
    if not 1 <= n <= len(s):
        raise DomainError(f"training count {n} outside [1, {len(s)}]")
    mean = float(np.mean(s.values[:n]))
    return CenteredSeries(base=s, training_mean=mean, n_train=int(n))


def uncenter(c):
    """Add the training mean back, returning absolute metres."""
    return ScalarSeries(c.epochs, np.asarray(c.values) + c.training_mean)


def detect_gaps(epochs, nominal_step=NOMINAL_STEP, tolerance_fraction=0.25):
    """
    Presence mask over the regular grid ``start + k * nominal_step``.

    An expected epoch counts as present when some sample lies within
    ``tolerance_fraction * nominal_step`` of it. ``mask.size`` is the expected
    epoch count and ``(~mask).sum()`` the number of gaps.
    """
    epochs = np.asarray(epochs, dtype=float)
    if nominal_step <= 0:
        raise DomainError("nominal_step must be positive")
    if not 0 < tolerance_fraction < 0.5:
        raise DomainError("tolerance_fraction must lie in (0, 0.5)")
    if epochs.size == 0:
        return np.zeros(0, dtype=bool)
    if np.any(np.diff(epochs) < 0):
        raise DomainError("samples must be sorted by epoch")
    count = int(np.rint((epochs[-1] - epochs[0]) / nominal_step)) + 1
    expected = epochs[0] + nominal_step * np.arange(count)
    idx = np.clip(np.searchsorted(epochs, expected), 1, epochs.size - 1) if epochs.size > 1 else None
    if idx is None:
        nearest = np.abs(expected - epochs[0])
    else:
        nearest = np.minimum(np.abs(epochs[idx] - expected), np.abs(epochs[idx - 1] - expected))
    return nearest <= tolerance_fraction * nominal_step


@dataclass(frozen=True)
class PositionSeries:
    """
    Raw ECEF station time series.

    ``xyz`` has shape ``(N, 3)``; ``gap_mask`` flags presence (True) for every
    epoch of the regular grid implied by the span and ``nominal_step``.
    ``epoch_years`` keeps the decimal Julian years the epochs were read from.
    """

    station_id: str
    epochs: np.ndarray
    xyz: np.ndarray
    nominal_step: float = NOMINAL_STEP
    gap_mask: np.ndarray = field(default=None, repr=False)
    min_norm: float = field(default=MIN_STATION_NORM, repr=False)
    epoch_years: np.ndarray = field(default=None, repr=False)
    frame_label: str = ""

    def __post_init__(self):
        epochs = _frozen(self.epochs)
        xyz = _frozen(self.xyz).reshape(-1, 3) if np.size(self.xyz) else np.zeros((0, 3))
        if xyz.shape[0] != epochs.size:
            raise DomainError("one ECEF triplet is required per epoch")
        _check_increasing(epochs)
        if not np.all(np.isfinite(xyz)):
            raise DomainError("ECEF coordinates must be finite")
        if self.min_norm is not None and xyz.size:
            norms = np.linalg.norm(xyz, axis=1)
            bad = np.flatnonzero(norms <= self.min_norm)
            if bad.size:
                raise DomainError(
                    f"{bad.size} samples below the station norm gate {self.min_norm} m "
                    f"(first at epoch {epochs[bad[0]]})"
                )
        mask = self.gap_mask
        if mask is None:
            mask = detect_gaps(epochs, self.nominal_step)
        object.__setattr__(self, "epochs", epochs)
        object.__setattr__(self, "xyz", xyz)
        object.__setattr__(self, "gap_mask", _frozen(mask, dtype=bool))
        # file-unit epochs are kept verbatim so a write/parse cycle is lossless
        years = sidereal_to_julian(epochs) if self.epoch_years is None else self.epoch_years
        years = _frozen(years)
        if years.shape != epochs.shape:
            raise DomainError("epoch_years must match epochs")
        object.__setattr__(self, "epoch_years", years)

    def __len__(self):
        return self.epochs.size

    @property
    def samples(self):
        return [(t, EcefCoord(*p)) for t, p in zip(self.epochs, self.xyz)]

    @property
    def n_gaps(self):
        return int(np.count_nonzero(~self.gap_mask))

    @property
    def is_continuous(self):
        return self.n_gaps == 0

    def component(self, axis):
        """One ECEF component (0, 1, 2 for X, Y, Z) as a ScalarSeries."""
        return ScalarSeries(self.epochs, self.xyz[:, axis])
