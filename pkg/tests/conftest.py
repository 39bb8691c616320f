import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from spinbath.model import ModelParams, SpinVector

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion checked by this test")


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None and (report.when == "call" or report.outcome != "passed"):
        number, text = marker.args
        previous = _CRITERIA.get(number, (text, "PASS"))[1]
        outcome = "PASS" if report.outcome == "passed" and previous == "PASS" else "FAIL"
        if report.outcome == "skipped":
            outcome = "SKIP"
        _CRITERIA[number] = (text, outcome)
    return report


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        text, outcome = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:>2}: {outcome}  {text}")


@pytest.fixture
def defaults():
    return ModelParams()


@pytest.fixture
def strong():
    return ModelParams(mu=0.75)


def sphere_point(cos_theta: float, phi: float, radius: float = 1.0) -> SpinVector:
    return SpinVector.from_angles(cos_theta, phi, radius)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
