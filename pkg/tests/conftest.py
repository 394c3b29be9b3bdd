import pytest

_ACCEPTANCE_RESULTS: list[tuple[int, str, str]] = []


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(num, name): acceptance criterion covered by this test",
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    num, name = marker.args
    if report.skipped:
        reason = ""
        if isinstance(report.longrepr, tuple):
            reason = f" ({report.longrepr[2]})"
        _ACCEPTANCE_RESULTS.append((num, name, f"SKIP{reason}"))
    elif report.when == "call":
        _ACCEPTANCE_RESULTS.append(
            (num, name, "PASS" if report.passed else "FAIL")
        )


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num, name, status in sorted(set(_ACCEPTANCE_RESULTS)):
        terminalreporter.write_line(f"criterion {num} ({name}): {status}")
