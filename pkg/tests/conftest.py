import re

_OUTCOMES: dict = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_c(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        outcome = "SKIP" if report.skipped else ("PASS" if report.passed else "FAIL")
        _OUTCOMES[int(m.group(1))] = (m.group(2).replace("_", " "), outcome, dict(report.user_properties))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_OUTCOMES):
        title, outcome, props = _OUTCOMES[num]
        detail = ", ".join(f"{k}={v}" for k, v in props.items())
        terminalreporter.write_line(f"[{num:02d}] {outcome:4s} {title}" + (f"  ({detail})" if detail else ""))
