import pytest
from hypothesis import HealthCheck, settings

from gasket_density import build_context

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list = []


@pytest.fixture(scope="session")
def ctx2():
    return build_context(2)


@pytest.fixture(scope="session")
def ctx3():
    return build_context(3)


@pytest.fixture(scope="session", params=[2, 3])
def ctx(request):
    return build_context(request.param)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
