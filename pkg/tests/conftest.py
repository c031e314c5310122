import os
import sys
from fractions import Fraction

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from ngls.gls_core import Family, make_finite_system, make_parametric_system  # noqa: E402

F = Fraction

# acceptance criterion number -> (passed, detail); filled by test_acceptance.py
CRITERIA = {}


@pytest.fixture
def luroth():
    return make_parametric_system("L", "luroth", layout="luroth-style")


@pytest.fixture
def binary():
    return make_finite_system("B", [(F(1, 2), "+"), (F(1, 2), "+")])


@pytest.fixture
def three():
    return make_finite_system("C", [F(1, 3), F(1, 2), F(1, 6)])


@pytest.fixture
def lur_fam(luroth):
    return Family([luroth])


@pytest.fixture
def bin_fam(binary):
    return Family([binary])


@pytest.fixture
def mixed_fam(luroth, binary):
    return Family([luroth, binary])


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        ok, detail = CRITERIA[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
