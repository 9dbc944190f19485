import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gnss_subsidence.errors import ConditioningError, DomainError
from gnss_subsidence.preprocess import (
    FUNDAMENTAL_PERIODS_DAYS,
    FrequencyTable,
    HarmonicModel,
    HarmonicTerm,
    TrendLine,
    default_frequency_table,
    detrend,
    evaluate_harmonics,
    fit_harmonics,
    fit_trend_line,
    harmonic_design,
    preprocess_series,
    remove_periodic,
)
from gnss_subsidence.series import DAY, SIDEREAL_YEAR_DAYS, ScalarSeries

FOUR_YEARS = np.arange(int(4 * 365.25)) * DAY


def tone(period, a, b, t=FOUR_YEARS):
    ph = 2 * np.pi * SIDEREAL_YEAR_DAYS / period * t
    return a * np.cos(ph) + b * np.sin(ph)


def test_frequency_table_defaults():
    ft = default_frequency_table()
    assert len(ft) == 6
    assert ft.periods_days == FUNDAMENTAL_PERIODS_DAYS
    assert np.allclose(ft.frequencies, SIDEREAL_YEAR_DAYS / np.array(FUNDAMENTAL_PERIODS_DAYS), rtol=0, atol=0)
    assert np.allclose(ft.listed_values * ft.frequencies, 1.0, rtol=1e-15)


def test_frequency_table_validation():
    with pytest.raises(DomainError):
        FrequencyTable((1.0, 1.0))
    with pytest.raises(DomainError):
        FrequencyTable((-3.0,))
    assert FrequencyTable((30.0, 14.0)).periods_days == (14.0, 30.0)


def test_trend_line_exact_examples():
    line = fit_trend_line(ScalarSeries([0.0, 1.0, 2.0], [1.0, 3.0, 5.0]))
    assert line.c == pytest.approx(2.0, abs=1e-14) and line.d == pytest.approx(1.0, abs=1e-14)
    line = fit_trend_line(ScalarSeries([0.0, 1.0, 2.0], [5.0, 5.0, 5.0]))
    assert abs(line.c) < 1e-15 and line.d == pytest.approx(5.0, abs=1e-14)


def test_trend_line_needs_distinct_epochs():
    with pytest.raises(ConditioningError):
        fit_trend_line(ScalarSeries([1.0], [2.0]))


def test_trend_line_matches_extended_precision(rng):
    t = 2015.0 + np.sort(rng.uniform(0, 5, 500))
    y = 4.2e6 - 0.003 * (t - 2015) + rng.normal(scale=0.002, size=500)
    line = fit_trend_line(ScalarSeries(t, y))
    mpmath.mp.dps = 50
    tt = [mpmath.mpf(float(v)) for v in t]
    yy = [mpmath.mpf(float(v)) for v in y]
    n = len(tt)
    st_, sy = mpmath.fsum(tt), mpmath.fsum(yy)
    stt = mpmath.fsum(v * v for v in tt)
    sty = mpmath.fsum(a * b for a, b in zip(tt, yy))
    c = (n * sty - st_ * sy) / (n * stt - st_ * st_)
    d = (sy - c * st_) / n
    assert abs(line.c - float(c)) <= 1e-9 * abs(float(c))
    assert abs(line(2017.0) - float(c * 2017 + d)) <= 1e-9 * abs(float(c * 2017 + d))


def test_detrended_residuals_sum_to_zero(rng):
    t = np.arange(200) * DAY
    s = ScalarSeries(t, 3.0 + 0.5 * t + rng.normal(size=200))
    r = detrend(s, fit_trend_line(s))
    assert abs(r.values.sum()) < 1e-9


def test_zero_input_zero_coefficients():
    m = fit_harmonics(ScalarSeries(FOUR_YEARS, np.zeros_like(FOUR_YEARS)))
    assert all(t.a == 0 and t.b == 0 for t in m.terms)


def test_single_tone_recovered():
    m = fit_harmonics(ScalarSeries(FOUR_YEARS, 3.0 * tone(359.5, 1.0, 0.0)))
    for term in m.terms:
        if term.period_days == 359.5:
            assert abs(term.a - 3.0) <= 1e-6 and abs(term.b) <= 1e-6
        else:
            assert abs(term.a) <= 1e-6 and abs(term.b) <= 1e-6


@given(st.floats(-0.01, 0.01), st.floats(-0.01, 0.01), st.floats(-0.01, 0.01), st.floats(-0.01, 0.01),
       st.sampled_from([(14.0, 180.1), (30.0, 359.5), (180.1, 359.5), (14.0, 30.0)]))
def test_resolvable_two_tone_recovered(a1, b1, a2, b2, pair):
    p1, p2 = pair
    y = tone(p1, a1, b1) + tone(p2, a2, b2)
    m = fit_harmonics(ScalarSeries(FOUR_YEARS, y))
    t1, t2 = m.term_for_period(p1), m.term_for_period(p2)
    assert max(abs(t1.a - a1), abs(t1.b - b1), abs(t2.a - a2), abs(t2.b - b2)) <= 1e-6


def test_subdaily_periods_are_unresolved_under_daily_sampling():
    m = fit_harmonics(ScalarSeries(FOUR_YEARS, tone(180.1, 0.01, 0.0)))
    assert not m.term_for_period(0.5).resolved and not m.term_for_period(1.0).resolved
    assert m.term_for_period(14.0).resolved
    assert m.term_for_period(1.0).a == 0.0


def test_daily_tone_is_aliased_to_a_constant():
    # cos(2 pi t / 1 day) sampled once a day is identically 1
    assert np.allclose(tone(1.0, 1.0, 0.0), 1.0, atol=1e-9)
    assert np.allclose(tone(1.0, 0.0, 1.0), 0.0, atol=1e-9)


def test_subdaily_resolved_with_finer_sampling():
    t = np.arange(4 * 400) * DAY / 4
    m = fit_harmonics(ScalarSeries(t, tone(1.0, 0.002, -0.001, t)), FrequencyTable((0.5, 1.0, 359.5)))
    term = m.term_for_period(1.0)
    assert term.resolved and abs(term.a - 0.002) < 1e-9 and abs(term.b + 0.001) < 1e-9


def test_matches_extended_precision_least_squares(rng):
    t = np.arange(800) * DAY
    y = tone(30.0, 0.002, 0.001, t) + rng.normal(scale=0.001, size=t.size)
    ft = FrequencyTable((14.0, 30.0, 359.5))
    m = fit_harmonics(ScalarSeries(t, y), ft)
    mpmath.mp.dps = 40
    a = mpmath.matrix(harmonic_design(t, ft.frequencies[::-1]).tolist())
    coef = mpmath.lu_solve(a.T * a, a.T * mpmath.matrix(y.tolist()))
    # design columns above are ordered 359.5, 30, 14 days
    order = [m.term_for_period(p) for p in (359.5, 30.0, 14.0)]
    got = [v for term in order for v in (term.a, term.b)]
    assert np.allclose(got, [float(c) for c in coef], rtol=0, atol=1e-12)


def test_too_few_samples():
    t = np.arange(5) * DAY
    with pytest.raises(ConditioningError):
        fit_harmonics(ScalarSeries(t, np.zeros(5)))


def test_short_span_warns():
    t = np.arange(100) * DAY
    with pytest.warns(RuntimeWarning, match="shorter than one cycle"):
        fit_harmonics(ScalarSeries(t, tone(14.0, 0.001, 0.0, t)))


def test_rank_deficient_design_rejected():
    t = np.arange(400) * DAY
    # two periods so close the columns are numerically identical over the span
    with pytest.raises(ConditioningError):
        fit_harmonics(ScalarSeries(t, np.zeros(400)), FrequencyTable((30.0, 30.0 + 1e-12)))


def test_evaluate_harmonics_examples():
    assert np.all(evaluate_harmonics(HarmonicModel(), np.arange(3.0)).values == 0)
    m = HarmonicModel((HarmonicTerm(2.0, 1.0, 0.0, SIDEREAL_YEAR_DAYS / 2.0),))
    assert evaluate_harmonics(m, np.array([0.0])).values[0] == 1.0


def test_evaluate_harmonics_matches_term_sum(rng):
    coeffs = {p: tuple(rng.normal(size=2)) for p in FUNDAMENTAL_PERIODS_DAYS}
    m = HarmonicModel.from_periods(coeffs)
    t = np.sort(rng.uniform(0, 5, 50))
    expect = [sum(a * np.cos(2 * np.pi * SIDEREAL_YEAR_DAYS / p * tk) + b * np.sin(2 * np.pi * SIDEREAL_YEAR_DAYS / p * tk)
                  for p, (a, b) in coeffs.items()) for tk in t]
    assert np.allclose(evaluate_harmonics(m, t).values, expect, rtol=0, atol=1e-12)


def test_harmonic_model_order_enforced():
    t1 = HarmonicTerm(2.0, 0, 0, 1.0)
    t2 = HarmonicTerm(1.0, 0, 0, 2.0)
    with pytest.raises(DomainError):
        HarmonicModel((t1, t2))


@given(st.lists(st.floats(-1e7, 1e7, allow_nan=False), min_size=30, max_size=120))
def test_trend_only_plus_periodic_is_original(values):
    t = np.arange(len(values)) * DAY
    s = ScalarSeries(t, values)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        m = fit_harmonics(detrend(s, fit_trend_line(s)), FrequencyTable((14.0, 30.0)))
    d = remove_periodic(s, m)
    scale = 1.0 + np.max(np.abs(values))
    assert np.all(np.abs(d.trend_only.values + d.periodic.values - s.values) <= 1e-12 * scale)


def test_preprocess_fits_on_training_prefix_only(rng):
    y = tone(180.1, 0.003, 0.001) - 0.003 * FOUR_YEARS + rng.normal(scale=0.001, size=FOUR_YEARS.size)
    n = 1000
    r1 = preprocess_series(ScalarSeries(FOUR_YEARS, y), n_train=n)
    y2 = y.copy()
    y2[n:] += 10.0
    r2 = preprocess_series(ScalarSeries(FOUR_YEARS, y2), n_train=n)
    assert r1.model == r2.model and r1.line == r2.line
    assert np.array_equal(r1.decomposition.periodic.values, r2.decomposition.periodic.values)


def test_preprocess_with_known_line_recovers_tones():
    y = tone(180.1, 0.003, 0.001) + tone(359.5, 0.002, -0.004)
    s = ScalarSeries(FOUR_YEARS, y - 0.003 * FOUR_YEARS + 5.0)
    m = fit_harmonics(detrend(s, TrendLine(-0.003, 5.0, 0.0)))
    t = m.term_for_period(359.5)
    assert abs(t.a - 0.002) < 1e-9 and abs(t.b + 0.004) < 1e-9


def test_decomposition_csv_columns():
    y = tone(180.1, 0.003, 0.001) + 2.0
    d = preprocess_series(ScalarSeries(FOUR_YEARS, y)).decomposition
    lines = d.to_csv().strip().split("\n")
    assert lines[0] == "epoch_year,y,y_trend,y_periodic,y_trendonly"
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    assert len(rows) == FOUR_YEARS.size
    assert np.allclose(rows[:, 1], rows[:, 3] + rows[:, 4], rtol=0, atol=1e-12)


def test_preprocess_training_bounds():
    with pytest.raises(DomainError):
        preprocess_series(ScalarSeries(FOUR_YEARS, np.zeros_like(FOUR_YEARS)), n_train=1)
