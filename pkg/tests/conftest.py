from fractions import Fraction as F
from pathlib import Path

import pytest

from fairdiv.model import make_instance, parse_allocation, parse_instance

FIXTURES = Path(__file__).parent / "fixtures"


def load_instance(name):
    return parse_instance((FIXTURES / name).read_text())


def load_allocation(inst, name):
    return parse_allocation(inst, (FIXTURES / name).read_text())


@pytest.fixture
def ex1():
    return load_instance("example1_instance.json")


@pytest.fixture
def ex1_alloc(ex1):
    return load_allocation(ex1, "example1_allocation.json")


@pytest.fixture
def ex2():
    return load_instance("example2_instance.json")


@pytest.fixture
def ex2_alloc(ex2):
    return load_allocation(ex2, "example2_allocation.json")


@pytest.fixture
def ex3_alloc(ex1):
    return load_allocation(ex1, "example3_allocation.json")


@pytest.fixture
def coverage3():
    return load_instance("coverage3_instance.json")


@pytest.fixture
def single_agent():
    return make_instance(["1"], indivisible={"g": {"1": 1}})


def utilities(inst, alloc):
    from fairdiv.measure import utility

    return tuple(utility(inst, a, alloc[a]) for a in inst.agents)


HALF, THIRD = F(1, 2), F(1, 3)


# acceptance criteria report one line each at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
