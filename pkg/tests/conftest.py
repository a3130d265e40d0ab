import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=15,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def unit_square():
    from curvtrefftz.geometry import mesh_generate
    return mesh_generate("square", 1)


@pytest.fixture(scope="session")
def pegboard1():
    from curvtrefftz.geometry import mesh_generate
    return mesh_generate("pegboard", 1)


@pytest.fixture(scope="session")
def lshape1():
    from curvtrefftz.geometry import mesh_generate
    return mesh_generate("lshape", 1)


_ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def acceptance(request):
    """Recorder for acceptance parts: ``acceptance(n, part, ok, detail)``."""
    table = request.config.stash.setdefault(_ACCEPTANCE_KEY, {})

    def record(n, part, ok, detail=""):
        table.setdefault(n, []).append((part, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    table = config.stash.get(_ACCEPTANCE_KEY, None)
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(table):
        parts = table[n]
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        terminalreporter.write_line(f"{status} criterion {n}")
        for part, ok, detail in parts:
            terminalreporter.write_line(f"    [{'ok' if ok else 'no'}] {part}: {detail}")
