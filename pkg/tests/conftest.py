"""Prints one PASS/FAIL line per acceptance criterion at the end of the run."""
import pytest

_results: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion gate")


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if call.when == "call" or (call.when == "setup" and call.excinfo is not None):
        ok = call.excinfo is None
        prev = _results.get(number)
        if prev is None or prev[0] == "PASS":
            _results[number] = ("PASS" if ok else "FAIL", title)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        status, title = _results[n]
        terminalreporter.write_line(f"criterion {n:>2}: {status}  {title}")


@pytest.fixture(scope="session")
def acceptance_cache(pytestconfig):
    return pytestconfig.rootpath / ".acceptance_cache"
