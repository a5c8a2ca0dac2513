import re

_LINE = re.compile(r"^criterion +\d+: (PASS|FAIL) \|.*$", re.M)


def pytest_runtest_logreport(report):
    # collect the per-criterion lines printed by the acceptance suite
    if report.when == "call" and "test_acceptance" in report.nodeid:
        lines = [m.group(0) for m in _LINE.finditer(report.capstdout)]
        if not lines:
            name = report.nodeid.rsplit("::", 1)[-1]
            lines = [f"{name}: {'PASS' if report.passed else 'FAIL'} | no report line (error before check)"]
        _collected.extend(lines)


_collected: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if _collected:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_collected, key=lambda s: int(re.search(r"\d+", s).group()) if s[0] == "c" else 99):
            terminalreporter.write_line(line)
