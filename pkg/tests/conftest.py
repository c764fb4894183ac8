import pytest

CRITERIA = {
    1: "scaled robustness golden example",
    2: "sign consistency against the Boolean monitor",
    3: "perturbation never flips the verdict",
    4: "gradient checks",
    5: "survival statistics oracle",
    6: "random baseline difficulty on SUT-A",
    7: "OGAN beats random on SUT-C",
    8: "adaptive vs nonadaptive",
    9: "determinism",
    10: "threshold recurrence",
}

_results: dict[int, list[bool]] = {}
details: list[str] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        _results.setdefault(marker.args[0], []).append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in CRITERIA.items():
        if n in _results:
            verdict = "PASS" if all(_results[n]) else "FAIL"
            terminalreporter.write_line(f"criterion {n:2d} {verdict}  {title}")
    for line in details:
        terminalreporter.write_line(f"  {line}")
