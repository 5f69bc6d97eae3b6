import sys

import pytest

from gleeful.oracle import f_values_bruteforce


@pytest.fixture(scope="session")
def f_small():
    """Oracle f(n) for n <= 10**5."""
    return f_values_bruteforce(10**5)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
