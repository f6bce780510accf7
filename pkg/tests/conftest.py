import pytest

ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record one checked part of an acceptance criterion for the summary table."""

    def record(number, passed, detail):
        ACCEPTANCE.setdefault(number, []).append((bool(passed), detail))
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} | {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[number]
        verdict = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        details = "; ".join(d if ok else f"[failed] {d}" for ok, d in parts)
        terminalreporter.write_line(f"criterion {number}: {verdict} | {details}")
