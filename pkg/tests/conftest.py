import pytest
from hypothesis import settings

from ripplecache.catalog import Catalog
from ripplecache.topology import build_topology

# numba compiles on first call, which would trip per-example deadlines
settings.register_profile("default", deadline=None)
settings.load_profile("default")


@pytest.fixture
def ladder_cat():
    return Catalog(4, 3)


@pytest.fixture
def line3():
    """d - r - p with 1 ms links and a single consumer."""
    return build_topology({
        "nodes": [(1, "edge", 1e6), (2, "intermediate", 1e6), (0, "producer", 0)],
        "links": [(1, 2, 20e6, 0.001), (2, 0, 20e6, 0.001)],
        "consumers": [(100, 1)],
    })


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def report(request):
    """Record one acceptance line; they are repeated in the terminal summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def _report(name, ok, detail=""):
        line = f"{name} {'PASS' if ok else 'FAIL'}: {detail}"
        lines.append(line)
        print(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
