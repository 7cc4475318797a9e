"""Shared pytest plumbing.

Acceptance tests push one summary line per criterion through
``record_criterion``; the collected lines are replayed in a dedicated
section at the end of the run so they are visible without -s.
"""

_criterion_lines = []


def record_criterion(line):
    print(line)
    _criterion_lines.append(line)


def pytest_terminal_summary(terminalreporter):
    if _criterion_lines:
        terminalreporter.section('acceptance criteria')
        for line in _criterion_lines:
            terminalreporter.line(line)
