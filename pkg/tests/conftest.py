"""Shared pytest hooks: surface the acceptance-criteria result lines.

The acceptance tests register one "criterion N: PASS/FAIL - ..." line each;
printing from inside a test is swallowed by capture unless the test fails, so
the lines are replayed in the terminal summary instead.
"""

acceptance_lines: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)
