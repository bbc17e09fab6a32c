import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gpliouville.grid import Grid

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def grid():
    """Default resolution: L = 30, h = 0.02."""
    return Grid(30.0, 3001)


@pytest.fixture(scope="session")
def coarse_grid():
    return Grid.from_spacing(30.0, 0.05)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


CRITERION_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one pass/fail line for an acceptance criterion, then assert it."""

    def record(k: int, ok: bool, detail: str):
        line = f"CRITERION {k}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        CRITERION_LINES.append(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERION_LINES):
            terminalreporter.write_line(line)
