import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gnss_subsidence.fixtures import FixtureSpec, make_fixture
from gnss_subsidence.ingest import write_station_csv

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def station_fixture():
    return make_fixture(FixtureSpec(station_id="SYNT", slope=-0.003, years=3.0, seed=1))


@pytest.fixture
def station_file(tmp_path, station_fixture):
    path = tmp_path / "SYNT.csv"
    write_station_csv(station_fixture.series, path)
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion(request):
    """``criterion(name, ok, detail)`` records one acceptance line, prints it and asserts ``ok``."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(name, ok, detail="", informational=False):
        tag = ("PASS" if ok else "FAIL") + (" (informational)" if informational else "")
        line = f"{tag:<20} {name}: {detail}"
        lines.append(line)
        print(line)
        if not informational:
            assert ok, line

    return record


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
