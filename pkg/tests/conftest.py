"""Shared pytest wiring: acceptance result lines in the terminal summary."""

_ACCEPTANCE_PASSED: list[str] = []


def record_acceptance(name: str) -> None:
    """Called at the end of an acceptance test, so a failure never records."""
    line = f"[ACCEPTANCE] {name}: PASS"
    _ACCEPTANCE_PASSED.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    for line in _ACCEPTANCE_PASSED:
        terminalreporter.write_line(line)
