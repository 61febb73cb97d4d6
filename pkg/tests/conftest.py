"""
Shared fixtures for the rootrat test suite.
"""

import pytest
import sympy as sp

from rootrat.app.models import Options


@pytest.fixture
def syms():
    """Symbols used across the worked examples"""
    return _Symbols()


class _Symbols:
    def __init__(self):
        (
            self.u, self.v, self.w, self.x, self.y, self.z,
            self.t, self.t0, self.t1, self.t2,
            self.x1, self.x2, self.x3, self.C1, self.C2,
        ) = sp.symbols("u v w x y z t t0 t1 t2 x1 x2 x3 C1 C2")


@pytest.fixture
def options():
    """Default options with a generous time budget"""
    return Options(timeout=120)


def is_identically_zero(expr) -> bool:
    return sp.cancel(sp.together(sp.sympify(expr))) == 0


def same_up_to_sign(a, b) -> bool:
    return is_identically_zero(a - b) or is_identically_zero(a + b)
