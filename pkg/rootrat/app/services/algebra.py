"""
Exact polynomial and rational-function algebra over the rationals.

Polynomials are carried as expanded sympy expressions; parameter symbols are
ordinary generators, and degree / homogeneity questions are always asked with
respect to an explicit list of active variables. At most one square-root
token may be adjoined to a computation.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import sympy as sp

from rootrat.app.exceptions import AlgebraError, TokenError

# Polynomials are plain expanded sympy expressions
Polynomial = sp.Expr

TOKEN_NAME = "sqrt_token"


def is_token_symbol(symbol) -> bool:
    return isinstance(symbol, sp.Dummy) and symbol.name == TOKEN_NAME


def symbols_of(*exprs) -> set:
    """Free symbols of the given expressions, square-root tokens excluded"""
    found = set()
    for expr in exprs:
        found |= {s for s in sp.sympify(expr).free_symbols if not is_token_symbol(s)}
    return found


def sort_symbols(symbols: Iterable[sp.Symbol]) -> Tuple[sp.Symbol, ...]:
    return tuple(sorted(symbols, key=lambda s: s.name))


def generators(*exprs) -> Tuple[sp.Symbol, ...]:
    """Sorted generators of the expressions with any token last"""
    plain = sort_symbols(symbols_of(*exprs))
    tokens = set()
    for expr in exprs:
        tokens |= {s for s in sp.sympify(expr).free_symbols if is_token_symbol(s)}
    return plain + tuple(sorted(tokens, key=str))


def fresh_symbol(candidates: Sequence[str], taken: Iterable) -> sp.Symbol:
    """First candidate name (then numbered variants) not already in use"""
    names = {str(s) for s in taken}
    for name in candidates:
        if name not in names:
            return sp.Symbol(name)
    base = candidates[0]
    index = 1
    while f"{base}{index}" in names:
        index += 1
    return sp.Symbol(f"{base}{index}")


def leading_coefficient(expr, gens: Optional[Sequence[sp.Symbol]] = None):
    """Leading coefficient under graded reverse lexicographic order"""
    expr = sp.expand(expr)
    if expr.is_Number:
        return expr
    gens = tuple(gens) if gens else generators(expr)
    return sp.Poly(expr, *gens).LC(order="grevlex")


def total_degree(f, active: Sequence[sp.Symbol]) -> int:
    """Total degree in the active variables; -1 for the zero polynomial"""
    f = sp.expand(f)
    if f == 0:
        return -1
    if not active:
        return 0
    return sp.Poly(f, *active).total_degree()


@dataclass(frozen=True)
class VariableSplit:
    """Active variables (reparametrized) and parameters (held constant)"""

    active: Tuple[sp.Symbol, ...]
    parameters: Tuple[sp.Symbol, ...] = ()

    def __post_init__(self):
        if set(self.active) & set(self.parameters):
            raise AlgebraError("active variables and parameters must be disjoint")
        if len(set(self.active)) != len(self.active):
            raise AlgebraError("active variables must be distinct")

    @classmethod
    def for_expression(cls, f, active: Sequence[sp.Symbol]) -> "VariableSplit":
        active = tuple(active)
        return cls(active, sort_symbols(symbols_of(f) - set(active)))

    @property
    def symbols(self) -> Tuple[sp.Symbol, ...]:
        return self.active + self.parameters


def active_variables(split) -> Tuple[sp.Symbol, ...]:
    if isinstance(split, VariableSplit):
        return split.active
    return tuple(split)


@dataclass(frozen=True)
class RationalFunction:
    """Reduced quotient; denominator has grevlex leading coefficient 1"""

    numerator: sp.Expr
    denominator: sp.Expr = sp.S.One

    @classmethod
    def from_expr(cls, expr) -> "RationalFunction":
        expr = sp.sympify(expr)
        if isinstance(expr, RationalFunction):
            return expr
        if expr.has(sp.zoo, sp.nan, sp.oo):
            raise AlgebraError("division by zero")
        num, den = sp.fraction(sp.cancel(sp.together(expr)))
        num, den = sp.expand(num), sp.expand(den)
        if den == 0:
            raise AlgebraError("division by zero")
        if den.is_Number:
            return cls(sp.expand(num / den), sp.S.One)
        lc = leading_coefficient(den)
        return cls(sp.expand(num / lc), sp.expand(den / lc))

    @property
    def expr(self) -> sp.Expr:
        return self.numerator / self.denominator

    @property
    def is_polynomial(self) -> bool:
        return self.denominator == 1

    @property
    def is_zero(self) -> bool:
        return self.numerator == 0

    @property
    def free_symbols(self) -> set:
        return symbols_of(self.numerator, self.denominator)

    def __str__(self) -> str:
        from rootrat.app.services.expr import render

        return render(self)


Value = Union[sp.Expr, RationalFunction, int]


def as_expr(value: Value) -> sp.Expr:
    if isinstance(value, RationalFunction):
        return value.expr
    return sp.sympify(value)


def arith(op: str, a: Value, b: Value) -> RationalFunction:
    """Exact add / sub / mul / div / pow with a reduced result"""
    left, right = as_expr(a), as_expr(b)
    if op == "add":
        result = left + right
    elif op == "sub":
        result = left - right
    elif op == "mul":
        result = left * right
    elif op == "div":
        if sp.cancel(right) == 0:
            raise AlgebraError("division by zero polynomial")
        result = left / right
    elif op == "pow":
        if not (right.is_Integer):
            raise AlgebraError("exponent must be an integer")
        if right < 0 and sp.cancel(left) == 0:
            raise AlgebraError("division by zero polynomial")
        result = left ** int(right)
    else:
        raise AlgebraError(f"unknown operation: {op}")
    return RationalFunction.from_expr(result)


def substitute(target: Value, mapping: Mapping[sp.Symbol, Value]) -> RationalFunction:
    """Compose target with a variable map; unmapped variables pass through"""
    replacements = {var: as_expr(value) for var, value in mapping.items()}
    num, den = sp.fraction(sp.cancel(sp.together(as_expr(target))))
    new_den = sp.cancel(den.xreplace(replacements))
    if new_den == 0:
        raise AlgebraError("substitution makes a denominator identically zero")
    return RationalFunction.from_expr(num.xreplace(replacements) / new_den)


def partial_derivative(f: Polynomial, var: sp.Symbol, order: int = 1) -> Polynomial:
    if order < 0:
        raise AlgebraError("derivative order must be non-negative")
    if order == 0:
        return sp.expand(f)
    return sp.expand(sp.diff(f, var, order))


def homogeneous_components(f: Polynomial, split) -> List[Tuple[int, Polynomial]]:
    """Components of f by total degree in the active variables, ascending"""
    active = active_variables(split)
    f = sp.expand(f)
    if f == 0:
        return []
    if not active:
        return [(0, f)]
    buckets: Dict[int, sp.Expr] = {}
    for monom, coeff in sp.Poly(f, *active).terms():
        degree = sum(monom)
        term = coeff * sp.Mul(*[v**e for v, e in zip(active, monom)])
        buckets[degree] = buckets.get(degree, sp.S.Zero) + term
    return [(d, sp.expand(buckets[d])) for d in sorted(buckets) if sp.expand(buckets[d]) != 0]


def homogenize(f: Polynomial, hvar: sp.Symbol, active: Optional[Sequence[sp.Symbol]] = None) -> Polynomial:
    f = sp.expand(f)
    if f == 0:
        raise AlgebraError("cannot homogenize the zero polynomial")
    if hvar in f.free_symbols:
        raise AlgebraError(f"homogenizing variable {hvar} already occurs in f")
    active = tuple(active) if active is not None else sort_symbols(symbols_of(f))
    components = homogeneous_components(f, active)
    d = components[-1][0]
    return sp.expand(sum(comp * hvar ** (d - i) for i, comp in components))


def k_homogenize(f: Polynomial, k: int, hvar: sp.Symbol, active: Optional[Sequence[sp.Symbol]] = None) -> Polynomial:
    """z^k * f(x/z); requires k >= deg f"""
    f = sp.expand(f)
    if f == 0:
        return sp.S.Zero
    if hvar in f.free_symbols:
        raise AlgebraError(f"homogenizing variable {hvar} already occurs in f")
    active = tuple(active) if active is not None else sort_symbols(symbols_of(f))
    components = homogeneous_components(f, active)
    if k < components[-1][0]:
        raise AlgebraError(f"k={k} is below the degree {components[-1][0]} of f")
    return sp.expand(sum(comp * hvar ** (k - i) for i, comp in components))


def _positive_leading(expr):
    expr = sp.expand(expr)
    if expr == 0:
        return expr
    return -expr if leading_coefficient(expr) < 0 else expr


def gcd(p: Polynomial, q: Polynomial) -> Polynomial:
    """Primitive gcd with positive leading coefficient"""
    p, q = sp.expand(p), sp.expand(q)
    if p == 0 and q == 0:
        raise AlgebraError("gcd of two zero polynomials")
    g = sp.gcd(p, q) if q != 0 and p != 0 else (p if q == 0 else q)
    g = sp.expand(g)
    if g.is_Number:
        return sp.S.One
    _, primitive = sp.primitive(g)
    return _positive_leading(primitive)


def _square_part(c: sp.Rational) -> Tuple[sp.Rational, sp.Rational]:
    """c = s^2 * rest with s a positive rational of maximal size"""
    c = sp.Rational(c)
    if c == 0:
        return sp.S.One, sp.S.Zero
    outer, inner = sp.S.One, sp.S.One
    for value, place in ((abs(c.p), 1), (c.q, -1)):
        for prime, exponent in sp.factorint(value).items():
            outer *= sp.Integer(prime) ** ((exponent // 2) * place)
            inner *= sp.Integer(prime) ** ((exponent % 2) * place)
    return outer, inner * sp.sign(c)


def extract_square_factor(P: Polynomial) -> Tuple[Polynomial, Polynomial]:
    """Split P = S^2 * P' along its square-free decomposition"""
    P = sp.expand(P)
    if P == 0:
        raise AlgebraError("square factor of the zero polynomial")
    if P.is_Number:
        return _square_part(P)
    content, factors = sp.sqf_list(P, *generators(P))
    outer, inner = _square_part(content)
    for factor, multiplicity in factors:
        outer *= factor ** (multiplicity // 2)
        inner *= factor ** (multiplicity % 2)
    return _positive_leading(outer), sp.expand(inner)


def poly_sqrt(P: Polynomial) -> Optional[Polynomial]:
    """Q with Q^2 = P and positive leading coefficient, or None"""
    P = sp.expand(P)
    if P == 0:
        return sp.S.Zero
    if P.is_Number:
        if P < 0:
            return None
        root = sp.sqrt(P)
        return root if root.is_Rational else None
    content, factors = sp.sqf_list(P, *generators(P))
    if content < 0 or any(m % 2 for _, m in factors):
        return None
    scale = sp.sqrt(content)
    if not scale.is_Rational:
        return None
    root = sp.expand(scale * sp.Mul(*[f ** (m // 2) for f, m in factors]))
    if sp.expand(root**2 - P) != 0:
        return None
    return _positive_leading(root)


def normalize_sign(expr) -> sp.Expr:
    """Flip the sign so the numerator's leading coefficient is positive"""
    expr = sp.cancel(sp.together(sp.sympify(expr)))
    num, _ = sp.fraction(expr)
    num = sp.expand(num)
    if num == 0 or num.is_Number and num > 0:
        return expr
    return -expr if leading_coefficient(num) < 0 else expr


@dataclass(frozen=True)
class RootToken:
    """Adjoined square root r with the rewriting rule r^2 -> radicand"""

    radicand: sp.Expr
    symbol: sp.Symbol = field(default_factory=lambda: sp.Dummy(TOKEN_NAME))

    @property
    def value(self) -> sp.Expr:
        return sp.sqrt(self.radicand)

    def reduce(self, expr) -> sp.Expr:
        return reduce_root_token(expr, self)

    def expand_value(self, expr) -> sp.Expr:
        """Replace the token by an explicit sqrt (for printing)"""
        return sp.sympify(expr).xreplace({self.symbol: self.value})


def _fold(expr, token: RootToken) -> sp.Expr:
    expr = sp.expand(expr)
    r = token.symbol
    if r not in expr.free_symbols:
        return expr
    folded = sp.S.Zero
    for (k,), coeff in sp.Poly(expr, r).terms():
        folded += coeff * token.radicand ** (k // 2) * r ** (k % 2)
    return sp.expand(folded)


def reduce_root_token(expr, token: Optional[RootToken]) -> sp.Expr:
    """Rewrite expr so the token occurs at most linearly and never in a denominator"""
    expr = sp.sympify(expr)
    stray = {s for s in expr.free_symbols if is_token_symbol(s)}
    if token is None:
        if stray:
            raise TokenError("expression carries an unregistered root token")
        return expr
    if stray - {token.symbol}:
        raise TokenError("a second root token would be needed")
    if token.symbol not in stray:
        return expr
    r = token.symbol
    num, den = sp.fraction(sp.together(expr))
    num, den = _fold(num, token), _fold(den, token)
    if r in den.free_symbols:
        a = den.coeff(r, 0)
        b = den.coeff(r, 1)
        num = _fold(num * (a - b * r), token)
        den = sp.expand(a**2 - b**2 * token.radicand)
    if sp.cancel(den) == 0:
        raise AlgebraError("denominator vanishes after token reduction")
    num, den = sp.fraction(sp.cancel(sp.together(num / den)))
    return _fold(num, token) / sp.expand(den)


def is_zero(expr, token: Optional[RootToken] = None) -> bool:
    expr = sp.sympify(expr)
    if token is not None:
        expr = reduce_root_token(expr, token)
    num, _ = sp.fraction(sp.cancel(sp.together(expr)))
    num = sp.expand(num)
    if num == 0:
        return True
    if token is not None and token.symbol in num.free_symbols:
        return all(sp.cancel(c) == 0 for c in sp.Poly(num, token.symbol).all_coeffs())
    return False


def simplify_value(expr, token: Optional[RootToken] = None) -> sp.Expr:
    """Canonical reduced form used for every parametrization component"""
    expr = sp.sympify(expr)
    if token is not None:
        expr = reduce_root_token(expr, token)
    return sp.cancel(sp.together(expr))
