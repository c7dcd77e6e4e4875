import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from delone import kernels  # noqa: E402
from delone.generators import gen_fibonacci_chain, gen_sturmian_chain, integer_lattice  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def z1():
    return integer_lattice(1, 300)


@pytest.fixture(scope="session")
def z2():
    return integer_lattice(2, 40)


@pytest.fixture(scope="session")
def fib10():
    return gen_fibonacci_chain(10)


@pytest.fixture(scope="session")
def fib12():
    return gen_fibonacci_chain(12)


@pytest.fixture(scope="session")
def fib14():
    return gen_fibonacci_chain(14)


@pytest.fixture(scope="session")
def sturmian():
    return gen_sturmian_chain([1, 100], 20000)


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request):
    return kernels.available_backends()[request.param]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
