"""Collects the acceptance verdicts and prints one line per criterion."""

import pytest

_VERDICTS: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number n")


@pytest.fixture
def detail(request):
    """Call with a short measurement summary; shown next to the verdict."""

    def record(text: str) -> None:
        request.node._detail = text

    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    _VERDICTS[mark.args[0]] = ("PASS" if rep.passed else "FAIL", getattr(item, "_detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        status, text = _VERDICTS[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {text}")
