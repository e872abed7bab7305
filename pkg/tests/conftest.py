"""Collects acceptance outcomes and prints one PASS/FAIL line per criterion."""

import time

import pytest

_RESULTS = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when != "call":
        return
    label, title = marker.args
    status = "PASS" if report.passed else "FAIL"
    _RESULTS.append((label, status, title, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, status, title, seconds in _RESULTS:
        terminalreporter.write_line(f"[{status}] {label:>4}  {title}  ({seconds:.2f} s)")


@pytest.fixture
def stopwatch():
    start = time.perf_counter()
    return lambda: time.perf_counter() - start
