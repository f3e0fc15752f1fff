import pytest

from wiretap.dmc import DmcWiretap, bsc

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per criterion, then assert it."""

    def record(tag, ok, detail):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {tag}: {detail}")
        print(ACCEPTANCE_LINES[-1])
        assert ok, f"{tag}: {detail}"

    return record


@pytest.fixture
def degraded_bsc():
    # X -> Y is BSC(0.1); Z is Y through a further BSC(0.2)
    return DmcWiretap(bsc(0.1), bsc(0.1) @ bsc(0.2))
