import numpy as np
import pytest

# criteria results collected by test_acceptance and printed at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def _single_worker(monkeypatch):
    monkeypatch.delenv("PERSLAW_WORKERS", raising=False)
    yield

