_criterion_results: list[tuple[str, bool]] = []


def record_criterion(label: str, passed: bool):
    _criterion_results.append((label, passed))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criterion_results:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed in _criterion_results:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {label}")
