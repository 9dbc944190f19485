"""
Trend and periodic-signal removal for scalar coordinate series.

A least-squares line is fitted first and subtracted; a sum of sinusoids at the
fundamental tidal and atmospheric frequencies is then fitted to the residual
and subtracted from the original values to leave the trend-only series.
"""

from dataclasses import dataclass, field
import io
import logging
import math
import warnings

import numpy as np

from .errors import ConditioningError, DomainError
from .series import DAY, SIDEREAL_YEAR_DAYS, ScalarSeries, sidereal_to_julian

logger = logging.getLogger(__name__)

#: fundamental periods of the dominant tidal and atmospheric signals (days)
FUNDAMENTAL_PERIODS_DAYS = (0.5, 1.0, 14.0, 30.0, 180.1, 359.5)

#: design matrices with a larger 2-norm condition number are rejected
MAX_CONDITION = 1e10


@dataclass(frozen=True)
class FrequencyTable:
    """
    Signal periods and the matching frequencies.

    ``listed_values`` are the periods expressed in sidereal years (the
    numbers usually tabulated); ``frequencies`` are their inverses in cycles
    per sidereal year, which is what the harmonic model uses.
    """

    periods_days: tuple = FUNDAMENTAL_PERIODS_DAYS

    def __post_init__(self):
        periods = tuple(float(p) for p in self.periods_days)
        if not periods or any(p <= 0 for p in periods):
            raise DomainError("periods must be positive")
        if len(set(periods)) != len(periods):
            raise DomainError("periods must be distinct")
        object.__setattr__(self, "periods_days", tuple(sorted(periods)))

    @property
    def listed_values(self):
        return np.array(self.periods_days) / SIDEREAL_YEAR_DAYS

    @property
    def frequencies(self):
        return SIDEREAL_YEAR_DAYS / np.array(self.periods_days)

    def __len__(self):
        return len(self.periods_days)


def default_frequency_table():
    return FrequencyTable(FUNDAMENTAL_PERIODS_DAYS)


@dataclass(frozen=True)
class TrendLine:
    """``y = c * t + d``; evaluated about ``t_ref`` to avoid cancellation."""

    c: float
    d_ref: float
    t_ref: float = 0.0

    @property
    def d(self):
        """Intercept at t = 0."""
        return self.d_ref - self.c * self.t_ref

    def __call__(self, t):
        return self.c * (np.asarray(t, dtype=float) - self.t_ref) + self.d_ref


ZERO_LINE = TrendLine(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class HarmonicTerm:
    frequency: float
    a: float
    b: float
    period_days: float
    resolved: bool = True


@dataclass(frozen=True)
class HarmonicModel:
    """Sum of ``a cos(2 pi f t) + b sin(2 pi f t)``, terms by increasing frequency."""

    terms: tuple = ()
    condition_number: float = field(default=float("nan"), compare=False)

    def __post_init__(self):
        terms = tuple(self.terms)
        freqs = [t.frequency for t in terms]
        if any(f <= 0 for f in freqs) or any(f2 <= f1 for f1, f2 in zip(freqs, freqs[1:])):
            raise DomainError("harmonic frequencies must be positive and strictly increasing")
        object.__setattr__(self, "terms", terms)

    @property
    def m(self):
        return len(self.terms)

    def term_for_period(self, period_days):
        for t in self.terms:
            if math.isclose(t.period_days, period_days, rel_tol=1e-12):
                return t
        raise KeyError(period_days)

    @classmethod
    def from_periods(cls, coefficients):
        """Build from ``{period_days: (a, b)}``."""
        terms = [
            HarmonicTerm(SIDEREAL_YEAR_DAYS / p, float(a), float(b), float(p))
            for p, (a, b) in coefficients.items()
        ]
        return cls(tuple(sorted(terms, key=lambda t: t.frequency)))


@dataclass(frozen=True)
class SeriesDecomposition:
    original: ScalarSeries
    trend: ScalarSeries
    periodic: ScalarSeries
    trend_only: ScalarSeries

    def to_csv(self):
        out = io.StringIO()
        out.write("epoch_year,y,y_trend,y_periodic,y_trendonly\n")
        years = sidereal_to_julian(self.original.epochs)
        for row in zip(years, self.original.values, self.trend.values, self.periodic.values, self.trend_only.values):
            out.write(",".join(repr(float(v)) for v in row) + "\n")
        return out.getvalue()


def fit_trend_line(s):
    """
    Least-squares line through ``(t_k, y_k)``.

    Solved by QR factorisation of the centred design ``[1, t - mean(t)]``.
    The values are centred as well: ECEF coordinates sit near 6e6 m, and
    subtracting their mean first is exact, so the slope keeps full relative
    precision.
    """
    t = np.asarray(s.epochs, dtype=float)
    y = np.asarray(s.values, dtype=float)
    if t.size < 2 or np.ptp(t) == 0.0:
        raise ConditioningError("a trend line needs at least two distinct epochs")
    t_ref = float(np.mean(t))
    y_ref = float(np.mean(y))
    design = np.column_stack([np.ones_like(t), t - t_ref])
    q, r = np.linalg.qr(design)
    d_off, c = np.linalg.solve(r, q.T @ (y - y_ref))
    return TrendLine(float(c), y_ref + float(d_off), t_ref)


def detrend(s, line):
    return s.with_values(s.values - line(s.epochs))


def _sampling_step(epochs, nominal_step):
    if nominal_step is not None:
        return nominal_step
    if len(epochs) < 2:
        return DAY
    return float(np.median(np.diff(epochs)))


def harmonic_design(epochs, frequencies):
    t = np.asarray(epochs, dtype=float)[:, None]
    phase = 2.0 * np.pi * np.asarray(frequencies, dtype=float)[None, :] * t
    design = np.empty((t.shape[0], 2 * phase.shape[1]))
    design[:, 0::2] = np.cos(phase)
    design[:, 1::2] = np.sin(phase)
    return design


def fit_harmonics(p, freqs=None, nominal_step=None):
    """
    Fit the periodic model to a detrended series.

    Frequencies at or above the Nyquist limit of the sampling step cannot be
    separated from a constant (a 12 h or 24 h signal sampled once a day is
    aliased to zero frequency); they are kept in the model with zero
    coefficients and ``resolved=False``.

    Parameters
    ----------
    p : ScalarSeries
        detrended values
    freqs : FrequencyTable, optional
        defaults to the six fundamental periods
    nominal_step : float, optional
        sampling step in sidereal years; the median spacing when omitted

    Returns
    -------
    HarmonicModel
        carries the 2-norm condition number of the design matrix

    Raises
    ------
    ConditioningError
        fewer samples than unknowns, or a rank-deficient design
    """
    freqs = default_frequency_table() if freqs is None else freqs
    t = np.asarray(p.epochs, dtype=float)
    y = np.asarray(p.values, dtype=float)
    step = _sampling_step(t, nominal_step)
    nyquist_period_days = 2.0 * step * SIDEREAL_YEAR_DAYS
    periods = np.array(freqs.periods_days)
    resolved = periods > nyquist_period_days * (1.0 + 1e-9)
    for period in periods[~resolved]:
        logger.info("period %.4g d is not resolvable with a %.4g d step; coefficient fixed at 0",
                       period, step * SIDEREAL_YEAR_DAYS)
    f_used = freqs.frequencies[resolved]
    k = int(f_used.size)
    if y.size < 2 * k:
        raise ConditioningError(f"{y.size} samples cannot determine {2 * k} harmonic coefficients")
    coef = np.zeros(2 * k)
    cond = 1.0
    if k:
        span = float(np.ptp(t)) if t.size else 0.0
        if span < 1.0 / f_used.min():
            warnings.warn(
                f"series span {span:.3f} yr is shorter than one cycle of the lowest frequency "
                f"({1.0 / f_used.min():.3f} yr); the fit is poorly conditioned",
                RuntimeWarning,
                stacklevel=2,
            )
        design = harmonic_design(t, f_used)
        sv = np.linalg.svd(design, compute_uv=False)
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
        if not cond <= MAX_CONDITION:
            raise ConditioningError(f"harmonic design matrix is rank deficient (condition {cond:.3e})")
        coef = np.linalg.lstsq(design, y, rcond=None)[0]

    terms = []
    used = iter(range(k))
    for period, ok in zip(periods, resolved):
        if ok:
            j = next(used)
            a, b = coef[2 * j], coef[2 * j + 1]
        else:
            a = b = 0.0
        terms.append(HarmonicTerm(SIDEREAL_YEAR_DAYS / period, float(a), float(b), float(period), bool(ok)))
    terms.sort(key=lambda tm: tm.frequency)
    return HarmonicModel(tuple(terms), condition_number=cond)


def evaluate_harmonics(model, epochs):
    """Periodic signal of ``model`` at ``epochs`` (an array or a ScalarSeries)."""
    if isinstance(epochs, ScalarSeries):
        epochs = epochs.epochs
    t = np.asarray(epochs, dtype=float)
    values = np.zeros_like(t)
    for term in model.terms:
        phase = 2.0 * np.pi * term.frequency * t
        values = values + term.a * np.cos(phase) + term.b * np.sin(phase)
    return ScalarSeries(t, values)


def remove_periodic(s, model, line=None):
    """
    Split ``s`` into trend, periodic and trend-only parts.

    ``trend_only = original - periodic`` holds pointwise. ``line`` defaults
    to the least-squares line of ``s``.
    """
    line = fit_trend_line(s) if line is None else line
    periodic = evaluate_harmonics(model, s.epochs)
    return SeriesDecomposition(
        original=s,
        trend=s.with_values(line(s.epochs)),
        periodic=periodic,
        trend_only=s.with_values(s.values - periodic.values),
    )


@dataclass(frozen=True)
class PreprocessResult:
    decomposition: SeriesDecomposition
    line: TrendLine
    model: HarmonicModel


def preprocess_series(s, freqs=None, n_train=None, nominal_step=None):
    """
    Trend fit, harmonic fit and periodic removal in one call.

    Both fits use only the first ``n_train`` samples (all of them by
    default); the periodic model is then removed from the whole series.
    """
    n = len(s) if n_train is None else int(n_train)
    if not 2 <= n <= len(s):
        raise DomainError(f"training count {n} outside [2, {len(s)}]")
    train = s.head(n)
    line = fit_trend_line(train)
    model = fit_harmonics(detrend(train, line), freqs, nominal_step)
    return PreprocessResult(remove_periodic(s, model, line), line, model)
