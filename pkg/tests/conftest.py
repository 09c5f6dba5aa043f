"""Acceptance bookkeeping: tests marked ``criterion(n)`` are summarized per criterion."""

import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion covered by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.skipped:
        return
    if rep.when == "call" or rep.failed:
        details = [str(v) for k, v in item.user_properties if k == "detail"]
        if rep.failed and rep.when != "call":
            details.append(f"{rep.when} error")
        for n in marker.args:
            _RESULTS.setdefault(n, []).append((item.name, rep.passed, details))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(_RESULTS):
        entries = _RESULTS[n]
        ok = all(passed for _, passed, _ in entries)
        details = "; ".join(d for _, _, ds in entries for d in ds)
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}"
        failed = [name for name, passed, _ in entries if not passed]
        if failed:
            line += f"  (failed: {', '.join(failed)})"
        if details:
            line += f"  [{details}]"
        terminalreporter.write_line(line)
