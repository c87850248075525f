ACCEPTANCE_LINES = []


def _criterion(line):
    return int(line.split()[1].rstrip(":"))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES, key=_criterion):
            terminalreporter.write_line(line)
