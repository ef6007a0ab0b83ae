import re

_CRITERION = re.compile(r"test_criterion_(\d+)")
_results: dict[int, list] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _results.setdefault(int(m.group(1)), []).append(
            (report.nodeid.split("::")[-1], report.passed, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_results):
        parts = _results[k]
        ok = all(p for _, p, _ in parts)
        secs = sum(d for _, _, d in parts)
        names = ", ".join(f"{n} {'pass' if p else 'FAIL'}" for n, p, _ in parts)
        terminalreporter.write_line(
            f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  ({secs:6.1f} s)  [{names}]")
