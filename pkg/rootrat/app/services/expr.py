"""
Expression front end: pyparsing grammar, root-expression extraction and rendering.

Grammar (precedence ^ > unary minus > * / > + -, ^ right-associative):

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := ('-')? power
    power  := base ('^' integer)*
    base   := number | 'sqrt' '(' expr ')' | ident | '(' expr ')'
"""

import json
from dataclasses import dataclass
from typing import Any, Iterable, Optional, Tuple

import pyparsing as pp
import sympy as sp

from rootrat.app.exceptions import AlgebraError, ExpressionSyntaxError, NestedRootError
from rootrat.app.services.algebra import RationalFunction, RootToken, reduce_root_token

pp.ParserElement.enable_packrat()

NODE_KINDS = ("number", "symbol", "add", "mul", "pow", "sqrt", "neg")


@dataclass(frozen=True)
class ExpressionTree:
    """Parsed expression node; numbers are exact rationals, exponents integers"""

    kind: str
    children: Tuple["ExpressionTree", ...] = ()
    value: Any = None

    def __post_init__(self):
        if self.kind not in NODE_KINDS:
            raise ValueError(f"unknown node kind: {self.kind}")
        if self.kind == "sqrt" and len(self.children) != 1:
            raise ValueError("sqrt nodes have exactly one child")
        if self.kind == "pow" and not isinstance(self.value, int):
            raise ValueError("pow exponents are integers")

    def walk(self) -> Iterable["ExpressionTree"]:
        yield self
        for child in self.children:
            yield from child.walk()

    @property
    def has_sqrt(self) -> bool:
        return any(node.kind == "sqrt" for node in self.walk())


@dataclass(frozen=True)
class RootExpression:
    """prefactor * sqrt(radicand) with both parts reduced rational functions"""

    prefactor: RationalFunction
    radicand: RationalFunction

    def __post_init__(self):
        if self.radicand.is_zero:
            raise AlgebraError("radicand is identically zero")

    @property
    def free_symbols(self) -> set:
        return self.prefactor.free_symbols | self.radicand.free_symbols

    @property
    def expr(self) -> sp.Expr:
        return self.prefactor.expr * sp.sqrt(self.radicand.expr)

    def __str__(self) -> str:
        return render(self)


def _number(tokens):
    return ExpressionTree("number", value=sp.Integer(int(tokens[0])))


def _symbol(tokens):
    return ExpressionTree("symbol", value=tokens[0])


def _sqrt(tokens):
    return ExpressionTree("sqrt", (tokens[0],))


def _non_integer_exponent(s, loc, tokens):
    raise pp.ParseFatalException(s, loc, "non-integer exponent")


def _power(s, loc, tokens):
    base, *exponents = tokens
    if not exponents:
        return base
    exponent = int(exponents[-1])
    for previous in reversed(exponents[:-1]):
        previous = int(previous)
        if exponent < 0 and abs(previous) != 1:
            raise pp.ParseFatalException(s, loc, "non-integer exponent")
        exponent = int(sp.Integer(previous) ** exponent)
    return ExpressionTree("pow", (base,), exponent)


def _factor(tokens):
    if len(tokens) == 2:
        return ExpressionTree("neg", (tokens[1],))
    return tokens[0]


def _term(tokens):
    if len(tokens) == 1:
        return tokens[0]
    first, second = tokens[0], tokens[2]
    if (
        len(tokens) == 3
        and tokens[1] == "/"
        and first.kind == "number"
        and second.kind == "number"
        and second.value != 0
    ):
        return ExpressionTree("number", value=first.value / second.value)
    children = [tokens[0]]
    for op, operand in zip(tokens[1::2], tokens[2::2]):
        children.append(operand if op == "*" else ExpressionTree("pow", (operand,), -1))
    return ExpressionTree("mul", tuple(children))


def _sum(tokens):
    if len(tokens) == 1:
        return tokens[0]
    children = [tokens[0]]
    for op, operand in zip(tokens[1::2], tokens[2::2]):
        children.append(operand if op == "+" else ExpressionTree("neg", (operand,)))
    return ExpressionTree("add", tuple(children))


def _build_grammar() -> pp.ParserElement:
    lpar, rpar = map(pp.Suppress, "()")
    caret = pp.Suppress("^")

    expr = pp.Forward()
    number = pp.Regex(r"\d+").set_parse_action(_number)
    ident = (~pp.Keyword("sqrt") + pp.Regex(r"[A-Za-z][A-Za-z0-9_]*")).set_parse_action(_symbol)
    sqrt_call = (pp.Suppress(pp.Keyword("sqrt")) + lpar + expr + rpar).set_parse_action(_sqrt)
    base = number | sqrt_call | ident | (lpar + expr + rpar)

    signed = pp.Regex(r"-?\d+")
    exponent = signed | (lpar + signed + rpar) | pp.Empty().set_parse_action(_non_integer_exponent)
    power = (base + pp.ZeroOrMore(caret + exponent)).set_parse_action(_power)
    factor = (pp.Optional(pp.Literal("-")) + power).set_parse_action(_factor)
    term = (factor + pp.ZeroOrMore(pp.one_of("* /") + factor)).set_parse_action(_term)
    expr <<= (term + pp.ZeroOrMore(pp.one_of("+ -") + term)).set_parse_action(_sum)
    return expr


_GRAMMAR = _build_grammar()


def parse_expression(text: str) -> ExpressionTree:
    """Parse text into an ExpressionTree"""
    if text is None or not text.strip():
        raise ExpressionSyntaxError("empty input")
    try:
        return _GRAMMAR.parse_string(text, parse_all=True)[0]
    except pp.ParseBaseException as e:
        message = e.msg if "non-integer" in str(e.msg) else f"syntax error: {e.msg}"
        raise ExpressionSyntaxError(message, e.loc) from None


def to_sympy(tree: ExpressionTree, sqrt_symbol: Optional[sp.Symbol] = None) -> sp.Expr:
    """Exact sympy value of a tree; sqrt nodes map to sqrt_symbol when given"""
    kind = tree.kind
    if kind == "number":
        return sp.Rational(tree.value)
    if kind == "symbol":
        return sp.Symbol(tree.value)
    if kind == "neg":
        return -to_sympy(tree.children[0], sqrt_symbol)
    if kind == "add":
        return sp.Add(*[to_sympy(c, sqrt_symbol) for c in tree.children])
    if kind == "mul":
        return sp.Mul(*[to_sympy(c, sqrt_symbol) for c in tree.children])
    if kind == "pow":
        base = to_sympy(tree.children[0], sqrt_symbol)
        if tree.value < 0 and sp.cancel(base) == 0:
            raise ExpressionSyntaxError("division by zero")
        return base**tree.value
    if sqrt_symbol is not None:
        return sqrt_symbol
    return sp.sqrt(to_sympy(tree.children[0]))


def parse_rational_function(text: str) -> sp.Expr:
    """Parse a polynomial or rational function (no square roots)"""
    tree = parse_expression(text)
    if tree.has_sqrt:
        raise ExpressionSyntaxError("square roots are not allowed here")
    try:
        value = to_sympy(tree)
        RationalFunction.from_expr(value)
    except AlgebraError as e:
        raise ExpressionSyntaxError(str(e)) from None
    return value


def to_root_expression(tree: ExpressionTree) -> RootExpression:
    """Split a tree into prefactor * sqrt(radicand)"""
    radicands = []
    for node in tree.walk():
        if node.kind != "sqrt":
            continue
        if node.children[0].has_sqrt:
            raise NestedRootError(
                "nested square roots are not supported; pass the associated "
                "polynomial to the parametrize entry point instead"
            )
        value = sp.cancel(to_sympy(node.children[0]))
        if not any(sp.cancel(value - seen) == 0 for seen in radicands):
            radicands.append(value)
    if len(radicands) > 1:
        raise NestedRootError("more than one distinct square root; use simultaneous rationalization")

    try:
        if not radicands:
            return RootExpression(RationalFunction.from_expr(to_sympy(tree)), RationalFunction(sp.S.One))

        radicand = RationalFunction.from_expr(radicands[0])
        if radicand.is_zero:
            raise ExpressionSyntaxError("radicand is identically zero")
        token = RootToken(radicand.expr)
        reduced = reduce_root_token(to_sympy(tree, token.symbol), token)
        num, den = sp.fraction(sp.together(reduced))
        num = sp.expand(num)
        rational_part = num.coeff(token.symbol, 0)
        root_part = num.coeff(token.symbol, 1)
    except AlgebraError as e:
        raise ExpressionSyntaxError(str(e)) from None

    if sp.cancel(root_part) == 0:
        return RootExpression(RationalFunction.from_expr(rational_part / den), RationalFunction(sp.S.One))
    if sp.cancel(rational_part) != 0:
        raise ExpressionSyntaxError("expression is not of the form R1*sqrt(R2)")
    return RootExpression(RationalFunction.from_expr(root_part / den), radicand)


def parse_root(text: str) -> RootExpression:
    return to_root_expression(parse_expression(text))


# Rendering


def _atomic_tree(tree: ExpressionTree) -> bool:
    if tree.kind == "number":
        return sp.Rational(tree.value).is_Integer
    return tree.kind in ("symbol", "sqrt")


def render_tree(tree: ExpressionTree) -> str:
    """Canonically parenthesized text for a tree"""
    kind = tree.kind
    if kind == "number":
        value = sp.Rational(tree.value)
        return str(value) if value.is_Integer else f"({value.p}/{value.q})"
    if kind == "symbol":
        return tree.value
    if kind == "sqrt":
        return f"sqrt({render_tree(tree.children[0])})"

    def wrap(child):
        text = render_tree(child)
        return text if _atomic_tree(child) or child.kind == "pow" else f"({text})"

    if kind == "neg":
        return f"-{wrap(tree.children[0])}"
    if kind == "pow":
        child = tree.children[0]
        base = render_tree(child) if _atomic_tree(child) else f"({render_tree(child)})"
        exponent = str(tree.value) if tree.value >= 0 else f"({tree.value})"
        return f"{base}^{exponent}"
    if kind == "mul":
        return "*".join(wrap(c) for c in tree.children)
    parts = []
    for i, child in enumerate(tree.children):
        if child.kind == "neg":
            parts.append(render_tree(child) if i == 0 else f"-{wrap(child.children[0])}")
        else:
            text = f"({render_tree(child)})" if child.kind == "add" else render_tree(child)
            parts.append(text if i == 0 else f"+{text}")
    return "".join(parts)


def _text(expr: sp.Expr) -> str:
    return sp.sstr(expr).replace("**", "^").replace(" ", "")


def _needs_parens(expr: sp.Expr, denominator: bool) -> bool:
    if expr.is_Add:
        return True
    if denominator:
        return not (expr.is_Symbol or expr.is_Integer or expr.is_Pow)
    return False


def _render_expr(expr) -> str:
    expr = sp.sympify(expr)
    num, den = sp.fraction(sp.cancel(sp.together(expr)))
    num, den = sp.expand(num), sp.expand(den)
    if den == 1:
        return _text(num)
    if den.is_Number and num.is_Number:
        return _text(num / den)
    den_text = _text(sp.factor_terms(den))
    if _needs_parens(sp.factor_terms(den), denominator=True):
        den_text = f"({den_text})"
    num_text = _text(num)
    if _needs_parens(num, denominator=False):
        num_text = f"({num_text})"
    return f"{num_text}/{den_text}"


def _substitution_pairs(value) -> list:
    token = getattr(value, "token", None)
    pairs = value.substitutions if hasattr(value, "substitutions") else value
    if isinstance(pairs, dict):
        pairs = list(pairs.items())
    rendered = []
    for var, expr in pairs:
        expr = token.expand_value(expr) if token is not None else expr
        rendered.append((str(var), _render_expr(expr)))
    return rendered


def render(value, style: str = "plain") -> str:
    """Render an expression, rational function, root expression or substitution list"""
    if style not in ("plain", "json"):
        raise ValueError(f"unknown render style: {style}")

    if isinstance(value, ExpressionTree):
        text = render_tree(value)
    elif isinstance(value, RootExpression):
        if value.radicand.numerator == 1 and value.radicand.denominator == 1:
            text = _render_expr(value.prefactor.expr)
        else:
            root = f"sqrt({_render_expr(value.radicand.expr)})"
            prefactor = value.prefactor.expr
            if prefactor == 1:
                text = root
            else:
                text = f"({_render_expr(prefactor)})*{root}"
    elif isinstance(value, RationalFunction):
        text = _render_expr(value.expr)
    elif isinstance(value, (sp.Basic, int)):
        text = _render_expr(value)
    else:
        pairs = _substitution_pairs(value)
        if style == "json":
            return json.dumps({"substitutions": [{"var": v, "value": e} for v, e in pairs]})
        return "\n".join(f"{v} = {e}" for v, e in pairs)

    return json.dumps(text) if style == "json" else text
