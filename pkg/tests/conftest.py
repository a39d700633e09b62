import pytest

_ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Record a one-line acceptance verdict for the terminal summary."""

    def report(number: int, title: str, passed: bool, detail: str = ""):
        _ACCEPTANCE.append((number, title, passed, detail))
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_ACCEPTANCE):
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{verdict}] {number:2d}. {title} {detail}".rstrip())
