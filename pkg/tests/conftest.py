import numpy as np
import pytest

from fermisig.geometry import ConformalDomain, GraphDomain, SimpleDomain, validate_domain
from fermisig.expr import parse_expression

SMOOTH_F = "1 + 0.3*sin(3.141592653589793*x)*exp(-t^2)"


@pytest.fixture
def diamond_simple():
    return validate_domain(SimpleDomain([0.0, 1.0], [[True]]))


@pytest.fixture
def diamond():
    return validate_domain(GraphDomain.diamond(1.0))


@pytest.fixture
def triangle():
    return validate_domain(GraphDomain.triangle(1.0))


@pytest.fixture
def smooth_conformal():
    return validate_domain(ConformalDomain(GraphDomain.diamond(1.0), parse_expression(SMOOTH_F)))


def staircase():
    """Three-cell staircase: diagonal cells plus the (1,2) and (2,3) future cells."""
    return validate_domain(SimpleDomain([0.0, 0.4, 1.0, 1.3],
                                        [[1, 1, 0], [0, 1, 1], [0, 0, 1]]))


def rng(seed):
    return np.random.default_rng(seed)


# ---------------------------------------------------------------- acceptance summary

ACCEPTANCE = {}


def record_criterion(number, passed, detail):
    """Store one acceptance outcome; printed once at the end of the session."""
    ACCEPTANCE[number] = (bool(passed), detail)
    print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
