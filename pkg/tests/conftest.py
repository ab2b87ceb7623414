"""Shared fixtures: acceptance verdict reporting.

The acceptance tests each report one PASS/FAIL line with measured
margins. Captured stdout only surfaces on failure, so the lines are
collected on the pytest config and replayed in the terminal summary,
where they are visible in any run mode.
"""

import re

import pytest


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def acceptance_report(request):
    def record(criterion, ok, detail):
        status = 'PASS' if ok else 'FAIL'
        line = f'criterion {criterion} {status}: {detail}'
        request.config._acceptance_lines.append(line)
        print(line, flush=True)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    lines = list(getattr(terminalreporter.config, '_acceptance_lines', []))
    reported = {line.split()[1] for line in lines}
    crashed = (terminalreporter.stats.get('failed', [])
               + terminalreporter.stats.get('error', []))
    for rep in crashed:
        found = re.search(r'test_criterion_(\d+)', rep.nodeid)
        if found and found.group(1) not in reported:
            lines.append(f'criterion {found.group(1)} FAIL: crashed before '
                         f'reporting ({rep.nodeid})')
    if not lines:
        return
    terminalreporter.section('acceptance criteria')
    for line in sorted(lines, key=lambda s: s.split()[1]):
        terminalreporter.write_line(line)
