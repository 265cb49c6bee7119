"""Shared test plumbing: collects the acceptance criteria's PASS/FAIL
lines and echoes them in the terminal summary so they are visible
without -s."""

ACCEPTANCE_LINES = []


def record_acceptance(criterion, status, detail):
    line = f"ACCEPTANCE {criterion}: {status} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
