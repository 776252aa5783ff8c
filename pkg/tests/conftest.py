from functools import lru_cache

import pytest
from hypothesis import HealthCheck, settings

from vquad.correspondence import polar_to_veldkamp
from vquad.polar import LineSpace
from vquad.spaces import enumerate_singular, preset

settings.register_profile("vquad", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("vquad")


@lru_cache(maxsize=None)
def built(name):
    """(lambda, catalog, line space, incidence graph) for a preset, built once per session."""
    lam = preset(name)
    cat = enumerate_singular(lam)
    S = LineSpace(len(cat.points), cat.lines)
    return lam, cat, S, polar_to_veldkamp(S)


@pytest.fixture(scope="session")
def build():
    return built


# criterion number -> (title, passed, detail); filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {n:2d} {title}: {detail}")
