import pytest

from helpers import reference_instance, single_attack_a1

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def ref():
    return reference_instance()


@pytest.fixture
def a1_only():
    return single_attack_a1()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
