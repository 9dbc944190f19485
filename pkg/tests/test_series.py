import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gnss_subsidence.errors import DomainError
from gnss_subsidence.series import (
    DAY,
    EcefCoord,
    Frame,
    LocalCoord,
    PositionSeries,
    ScalarSeries,
    center_on_training_mean,
    detect_gaps,
    julian_to_sidereal,
    sidereal_to_julian,
    uncenter,
)


def test_year_conversion_inverts():
    t = np.array([2000.0, 2015.5, 2020.999])
    assert np.allclose(sidereal_to_julian(julian_to_sidereal(t)), t, rtol=0, atol=1e-12)
    # one sidereal year is slightly longer than a Julian year
    assert julian_to_sidereal(1.0) < 1.0


def test_scalar_series_rejects_bad_epochs():
    with pytest.raises(DomainError):
        ScalarSeries([0.0, 0.0], [1.0, 2.0])
    with pytest.raises(DomainError):
        ScalarSeries([0.0, 1.0], [1.0])
    with pytest.raises(DomainError):
        ScalarSeries([0.0, np.nan], [1.0, 2.0])


def test_series_arrays_are_read_only():
    s = ScalarSeries([0.0, 1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        s.values[0] = 5.0


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=50), st.data())
def test_centering_zero_mean_and_round_trip(values, data):
    n = data.draw(st.integers(1, len(values)))
    s = ScalarSeries(np.arange(len(values), dtype=float), values)
    c = center_on_training_mean(s, n)
    assert abs(np.mean(c.values[:n])) <= 1e-9 * (1 + np.max(np.abs(values)))
    back = uncenter(c)
    assert np.allclose(back.values, s.values, rtol=0, atol=1e-9 * (1 + np.max(np.abs(values))))


def test_centering_bounds():
    s = ScalarSeries([0.0, 1.0], [1.0, 2.0])
    with pytest.raises(DomainError):
        center_on_training_mean(s, 0)
    with pytest.raises(DomainError):
        center_on_training_mean(s, 3)


def test_detect_gaps_marks_missing_days():
    epochs = np.array([0, 1, 2, 5, 6]) * DAY
    mask = detect_gaps(epochs)
    assert mask.tolist() == [True, True, True, False, False, True, True]


def test_detect_gaps_edge_cases():
    assert detect_gaps(np.array([])).size == 0
    assert detect_gaps(np.array([3.0])).tolist() == [True]
    with pytest.raises(DomainError):
        detect_gaps(np.array([1.0, 0.0]))


@given(st.sets(st.integers(1, 98), max_size=40))
def test_gap_count_matches_removed_days(dropped):
    keep = np.array([k for k in range(100) if k not in dropped])
    mask = detect_gaps(keep * DAY)
    assert mask.size == 100
    assert int((~mask).sum()) == len(dropped)


def test_position_series_norm_gate():
    xyz = np.array([[6.4e6, 0, 0], [1.0, 0, 0]])
    with pytest.raises(DomainError):
        PositionSeries("X", [0.0, DAY], xyz)


def test_position_series_component_and_gaps():
    xyz = np.tile([6.4e6, 1.0, 2.0], (3, 1))
    s = PositionSeries("X", np.array([0, 1, 3]) * DAY, xyz)
    assert s.n_gaps == 1 and not s.is_continuous
    assert np.all(s.component(2).values == 2.0)


def test_ecef_coord_checks():
    with pytest.raises(DomainError):
        EcefCoord(np.inf, 0, 0)
    with pytest.raises(DomainError):
        EcefCoord(1.0, 0, 0).check_station()
    assert EcefCoord(6.4e6, 0, 0).check_station().norm == 6.4e6


def test_local_coord_frame_tag():
    p = LocalCoord(1, 2, 3, "LocalGeodetic")
    assert p.frame is Frame.LOCAL_GEODETIC
    with pytest.raises(ValueError):
        LocalCoord(1, 2, 3, "bogus")
