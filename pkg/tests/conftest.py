"""Shared pytest wiring: collect acceptance verdict lines and print them
in a dedicated terminal section at the end of every run, so the one-line
pass/fail verdicts stay visible even though pytest captures test stdout."""

import pytest

ACCEPTANCE_LINES_KEY = pytest.StashKey()


@pytest.fixture
def acceptance_report(request):
    lines = request.config.stash.setdefault(ACCEPTANCE_LINES_KEY, [])

    def report(num, name, ok, detail):
        verdict = "PASS" if ok else "FAIL"
        line = f"ACCEPTANCE {num} [{verdict}] {name}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES_KEY, None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
