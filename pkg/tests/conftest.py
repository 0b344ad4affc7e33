import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, derandomize=True, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(params=["numba", "numpy"])
def kernel_path(request, monkeypatch):
    """Run a test once per kernel path."""
    monkeypatch.setenv("AQDS_NO_NUMBA", "1" if request.param == "numpy" else "0")
    return request.param


_ACCEPTANCE: list[str] = []


@pytest.fixture
def record_criterion():
    """Record one acceptance line; printed together at the end of the run."""

    def record(number: int, passed: bool, detail: str) -> None:
        _ACCEPTANCE.append(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
