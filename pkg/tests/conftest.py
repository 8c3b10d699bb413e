import os

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=50, derandomize=True)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_KEY = pytest.StashKey[dict]()
CRITERIA = range(1, 12)


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = {}


@pytest.fixture
def acceptance(request):
    """``acceptance(n, ok, detail)`` records a criterion line and asserts it."""
    results = request.config.stash[ACCEPTANCE_KEY]

    def record(n, ok, detail):
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        results[n] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash[ACCEPTANCE_KEY]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in CRITERIA:
        terminalreporter.write_line(results.get(n, f"criterion {n:>2}: NOT RUN"))
