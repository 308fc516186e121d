import pytest

from occlab.rng import CounterRNG

_LINES_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES_KEY] = []


@pytest.fixture
def acceptance_line(request):
    """Record a one-line verdict that is echoed in the terminal summary."""
    lines = request.config.stash[_LINES_KEY]

    def record(text: str) -> None:
        print(text)
        lines.append(text)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return CounterRNG.for_replicate(12345, 0)
