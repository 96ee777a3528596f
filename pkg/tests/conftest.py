import pytest

_VERDICTS = []


class Verdict:
    """Collects the PASS/FAIL line for one acceptance criterion."""

    def __init__(self, name):
        self.name = name
        self.recorded = False

    def __call__(self, ok, detail):
        self.recorded = True
        _VERDICTS.append(f"{'PASS' if ok else 'FAIL'}  {self.name}: {detail}")
        assert ok, detail


@pytest.fixture
def verdict(request):
    marker = request.node.get_closest_marker("criterion")
    v = Verdict(marker.args[0] if marker else request.node.name)
    yield v
    if not v.recorded:
        _VERDICTS.append(f"FAIL  {v.name}: no verdict (test raised before checking)")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion reported in the summary")


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in _VERDICTS:
        terminalreporter.write_line(line)
