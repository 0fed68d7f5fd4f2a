import pytest

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    marker = getattr(report, "acceptance", None)
    if marker is None:
        return
    number, title = marker
    if report.when == "call" or report.outcome != "passed":
        previous = _ACCEPTANCE.get(number, (title, "PASS"))[1]
        outcome = "PASS" if report.outcome == "passed" and previous == "PASS" else "FAIL"
        _ACCEPTANCE[number] = (title, outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        report.acceptance = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, outcome = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {outcome}  {title}")
