import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fracpme import make_torus

settings.register_profile(
    "default", deadline=None, max_examples=30, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def circle():
    return make_torus(1, grid=64)


@pytest.fixture
def cube():
    return make_torus(3, grid=16)


@pytest.fixture
def unit_cube():
    return make_torus(3, grid=16, volume_normalized=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance summary ---------------------------------------------------------
# Tests marked ``acceptance(number, title)`` get one PASS/FAIL line each in the
# terminal summary; a test may attach a short measured value via
# ``record_property("measured", text)``.

_ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    measured = dict(item.user_properties).get("measured", "")
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        _ACCEPTANCE[number] = ("PASS" if rep.passed else "FAIL", title, measured)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        status, title, measured = _ACCEPTANCE[number]
        line = f"criterion {number:2d}: {status}  {title}"
        if measured:
            line += f"  [{measured}]"
        terminalreporter.write_line(line)
