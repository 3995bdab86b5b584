import pytest
from hypothesis import HealthCheck, settings

from tmclock import catalog as cat
from tmclock.catalog import Level, LineCatalog, TransitionLine

settings.register_profile(
    "deterministic", derandomize=True, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("deterministic")


@pytest.fixture(scope="session")
def bundled():
    return cat.bundled_catalog()


@pytest.fixture(scope="session")
def cross_sections():
    return cat.bundled_cross_sections()


def toy_catalog(levels, lines):
    """Catalog from (id, energy, two_J, parity) tuples and (upper, lower, A) tuples."""
    lv = [Level(*x) for x in levels]
    energy = {x.id: x.energy for x in lv}
    tl = [TransitionLine(u, l, 1e7 / (energy[u] - energy[l]), A) for u, l, A in lines]
    return LineCatalog(lv, tl)


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Reporter for acceptance criteria: records one PASS/FAIL line and asserts."""

    def report(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
