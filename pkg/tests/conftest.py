from collections import defaultdict

import pytest

_RESULTS = defaultdict(list)


@pytest.fixture
def criterion():
    """``criterion(n, part, ok, detail)`` records one check for the summary table."""
    def record(n, part, ok, detail):
        _RESULTS[n].append((part, bool(ok), detail))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        parts = _RESULTS[n]
        verdict = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        detail = "; ".join(f"{part}: {'ok' if ok else 'fail'} ({d})" for part, ok, d in parts)
        terminalreporter.write_line(f"criterion {n:2d}: {verdict}  {detail}")
