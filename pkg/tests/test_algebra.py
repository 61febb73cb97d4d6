"""
Tests for exact polynomial and rational-function algebra.
"""

import pytest
import sympy as sp

from rootrat.app.exceptions import AlgebraError, TokenError
from rootrat.app.services.algebra import (
    RationalFunction,
    RootToken,
    VariableSplit,
    arith,
    extract_square_factor,
    fresh_symbol,
    gcd,
    homogeneous_components,
    homogenize,
    is_zero,
    k_homogenize,
    normalize_sign,
    partial_derivative,
    poly_sqrt,
    reduce_root_token,
    substitute,
    total_degree,
)

from conftest import is_identically_zero

u, x, y, z, t, t1, t2, C1, C2 = sp.symbols("u x y z t t1 t2 C1 C2")
x1, x2 = sp.symbols("x1 x2")


class TestArith:
    def test_shift_assembly(self):
        result = arith("add", u**2 + x**2, -2 * x)
        assert result == RationalFunction(u**2 + x**2 - 2 * x)

    def test_annihilator(self):
        assert arith("mul", x**3 + y, 0).is_zero

    def test_cancellation(self):
        result = arith("div", x**2 - 1, x - 1)
        assert result.is_polynomial
        assert result.numerator == x + 1

    def test_division_by_zero(self):
        with pytest.raises(AlgebraError):
            arith("div", x, x - x)

    def test_pow_requires_integer(self):
        with pytest.raises(AlgebraError):
            arith("pow", x, sp.Rational(1, 2))

    def test_denominator_normalized(self):
        rf = RationalFunction.from_expr(x / (-2 * y + 4))
        assert rf.denominator == y - 2
        assert rf.numerator == -x / 2


class TestSubstitute:
    def test_circle_radicand(self):
        result = substitute(1 - x**2, {x: (t**2 - 1) / (t**2 + 1)})
        assert is_identically_zero(result.expr - 4 * t**2 / (t**2 + 1) ** 2)

    def test_identity_map(self):
        f = u**2 + x**2 - 1
        assert substitute(f, {x: x}).expr == f

    def test_circle_vanishes(self):
        phi = {u: 2 * t / (t**2 + 1), x: (t**2 - 1) / (t**2 + 1)}
        assert substitute(u**2 + x**2 - 1, phi).is_zero

    def test_denominator_annihilated(self):
        with pytest.raises(AlgebraError):
            substitute(1 / (x - y), {x: y})

    def test_homomorphism(self):
        p, q = x**2 + y, x - 3 * y
        phi = {x: t / (t + 1), y: t**2}
        left = substitute(p * q, phi).expr
        right = substitute(p, phi).expr * substitute(q, phi).expr
        assert is_identically_zero(left - right)


class TestDerivativesAndComponents:
    def test_partial_derivative(self):
        assert partial_derivative(u**2 + x**2 - 1, x) == 2 * x
        assert partial_derivative(u**2 - x**4 - y**3, u, 2) == 2
        assert partial_derivative(x**3 + y, x, 0) == x**3 + y

    def test_components_of_shifted_circle(self):
        assert homogeneous_components(u**2 + x**2 - 2 * x, (u, x)) == [(1, -2 * x), (2, u**2 + x**2)]

    def test_homogeneous_input_single_component(self):
        assert homogeneous_components(x**2 + x * y, (x, y)) == [(2, x**2 + x * y)]

    def test_parameters_are_not_counted(self):
        components = dict(homogeneous_components(x**2 + C1 * x + C1**3, VariableSplit((x,), (C1,))))
        assert components == {0: C1**3, 1: C1 * x, 2: x**2}


class TestHomogenize:
    def test_parabola(self):
        assert homogenize(y - x**2, z) == z * y - x**2

    def test_already_homogeneous(self):
        assert homogenize(x**2 + x * y, z) == x**2 + x * y

    def test_hand_example(self):
        assert homogenize(u**2 - x - y - 1, z) == sp.expand(u**2 - x * z - y * z - z**2)

    def test_euler_relation(self):
        f = x**3 * y - 2 * x * y + 7
        F = homogenize(f, z)
        euler = sum(v * sp.diff(F, v) for v in (x, y, z))
        assert sp.expand(euler - 4 * F) == 0

    def test_zero_rejected(self):
        with pytest.raises(AlgebraError):
            homogenize(sp.S.Zero, z)

    def test_k_homogenize(self):
        assert k_homogenize(x1 * x2, 4, z) == x1 * x2 * z**2
        assert k_homogenize(sp.Rational(-1, 4), 1, z, (x, y)) == -z / 4
        assert k_homogenize(y - x**2, 2, z) == homogenize(y - x**2, z)

    def test_k_below_degree(self):
        with pytest.raises(AlgebraError):
            k_homogenize(x**3, 2, z)

    def test_k_homogenize_restricts_back(self):
        f = x**2 * y - y + 3
        assert sp.expand(k_homogenize(f, 5, z).subs(z, 1) - f) == 0


class TestGcdAndSquares:
    def test_gcd(self):
        assert gcd(x**2 - y**2, x - y) == x - y
        assert gcd(x**3 + x**2, x**2) == x**2
        assert gcd(-2 * x - 2, 0) == x + 1

    def test_extract_square_factor(self):
        assert extract_square_factor(x**3 + x**2) == (x, x + 1)
        assert extract_square_factor(x**2 + y) == (1, x**2 + y)

    def test_denominator_square(self):
        S, rest = extract_square_factor(sp.expand(4 * x**2 * (x**4 + 4 * x**2 * y**2 + 4)))
        assert S == 2 * x
        assert rest == x**4 + 4 * x**2 * y**2 + 4

    def test_square_factor_identity(self):
        P = sp.expand(3 * (x - y) ** 4 * (x + 2) ** 3)
        S, rest = extract_square_factor(P)
        assert sp.expand(S**2 * rest - P) == 0

    def test_poly_sqrt(self):
        assert poly_sqrt(x**2 + 2 * x * y + y**2) == x + y
        assert poly_sqrt(x**2 + 1) is None
        assert poly_sqrt(sp.Rational(9, 4)) == sp.Rational(3, 2)
        assert poly_sqrt(sp.Integer(2)) is None

    def test_poly_sqrt_of_sample_composition(self):
        value = t2**3 * (2 * t1**3 + t2) * 16 * (t1**3 + t2) ** 2
        root = poly_sqrt(sp.expand(value**2))
        assert sp.expand(root**2 - value**2) == 0

    def test_normalize_sign(self):
        assert is_identically_zero(normalize_sign(-(x + 1) / (y + 2)) - (x + 1) / (y + 2))
        assert is_identically_zero(normalize_sign((x + 1) / (y + 2)) - (x + 1) / (y + 2))


class TestRootToken:
    def test_defining_rule(self):
        token = RootToken(1 - x**2)
        assert sp.expand(reduce_root_token(token.symbol**2, token) - (1 - x**2)) == 0

    def test_odd_power(self):
        token = RootToken(1 - x**2)
        reduced = reduce_root_token(token.symbol**3, token)
        assert sp.expand(reduced - token.symbol * (1 - x**2)) == 0

    def test_stays_linear(self):
        token = RootToken(1 - x**2)
        r = token.symbol
        expr = r * ((x**2 - 1) * t**2 + 1) / ((x**2 - 1) * t**2 - 1)
        reduced = reduce_root_token(expr**3, token)
        num, den = sp.fraction(sp.together(reduced))
        assert sp.degree(sp.expand(num), r) <= 1
        assert r not in den.free_symbols

    def test_denominator_rationalized(self):
        token = RootToken(C1**2 - C2**2)
        reduced = reduce_root_token(1 / (C1 + token.symbol), token)
        _, den = sp.fraction(sp.together(reduced))
        assert token.symbol not in den.free_symbols
        assert is_zero(reduced * (C1 + token.symbol) - 1, token)

    def test_second_token_rejected(self):
        first, second = RootToken(x), RootToken(y)
        with pytest.raises(TokenError):
            reduce_root_token(first.symbol + second.symbol, first)


def test_total_degree_and_fresh_symbol():
    assert total_degree(x**2 * y + C1**5, (x, y)) == 3
    assert total_degree(sp.S.Zero, (x,)) == -1
    assert fresh_symbol(("u", "r"), {u}) == sp.Symbol("r")
    assert fresh_symbol(("u",), {u, sp.Symbol("u1")}) == sp.Symbol("u2")
