import numpy as np
import pytest

from resradon import CurveParam, DomainSpec, HomPoly, VarietySpec

CONIC = [[[1, 0, 1], [1, 0]], [[0, 2, 0], [-1, 0]]]
CUBIC = [[[1, 0, 2], [1, 0]], [[0, 3, 0], [-1, 0]]]

# criterion number -> list of (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


@pytest.fixture(scope="session")
def conic_poly():
    return HomPoly.from_literal(CONIC)


@pytest.fixture(scope="session")
def cubic_poly():
    return HomPoly.from_literal(CUBIC)


@pytest.fixture(scope="session")
def unit_domain():
    return DomainSpec(2, 1.0)


@pytest.fixture(scope="session")
def conic(conic_poly):
    return VarietySpec(2, [conic_poly], param=CurveParam.monomial_curve([0, 1, 2]))


@pytest.fixture(scope="session")
def cubic(cubic_poly):
    return VarietySpec(2, [cubic_poly], param=CurveParam.monomial_curve([0, 2, 3]))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        entries = ACCEPTANCE[num]
        ok = all(p for p, _ in entries)
        detail = "; ".join(d for _, d in entries)
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d}: {detail}")
