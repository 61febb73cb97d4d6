"""
Driver service: the user-facing rationalization routines.

parametrize_polynomial and rationalize_root are the two single-input routines;
rationalize_simultaneously composes single-root rounds into one shared
substitution; verify is the independent oracle every result passes through.
"""

import itertools
import time
from dataclasses import dataclass, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import sympy as sp

from rootrat.app.exceptions import AlgebraError, OptionsError, TokenError
from rootrat.app.models import Options
from rootrat.app.services.algebra import (
    RationalFunction,
    RootToken,
    VariableSplit,
    extract_square_factor,
    fresh_symbol,
    normalize_sign,
    poly_sqrt,
    simplify_value,
    sort_symbols,
    symbols_of,
    total_degree,
)
from rootrat.app.services.expr import (
    RootExpression,
    parse_rational_function,
    parse_root,
    render,
)
from rootrat.app.services.fdecomp import fdecompose_and_parametrize
from rootrat.app.services.parametrize import (
    Parametrization,
    default_output_symbols,
    parametrize_hypersurface,
)
from rootrat.app.utils.budget import SearchBudget
from rootrat.app.utils.logger import init_logger
from rootrat.config import settings

logger = init_logger()

ROUND_PREFIX = "s"


@dataclass(frozen=True)
class VerifiedForm:
    """A substitution list together with the rationalized root value it produces"""

    substitutions: Tuple[Tuple[sp.Symbol, sp.Expr], ...]
    value: sp.Expr
    square_root: sp.Expr
    strategy: str = "direct"
    variant: str = "keep"
    point: Optional[object] = None
    output_variables: Tuple[sp.Symbol, ...] = ()
    token: Optional[RootToken] = None

    def as_dict(self) -> Dict[sp.Symbol, sp.Expr]:
        return dict(self.substitutions)

    def signature(self) -> Tuple[str, ...]:
        return tuple(f"{v}={sp.srepr(sp.cancel(e))}" for v, e in self.substitutions)

    def rendered_value(self) -> str:
        value = self.token.expand_value(self.value) if self.token is not None else self.value
        return render(value)


@dataclass(frozen=True)
class PerfectSquareVariant:
    """Radicand with square factors kept or stripped; sqrt(original) = factor * sqrt(radicand)"""

    radicand: RationalFunction
    factor: sp.Expr
    kind: str


def _to_expr(value) -> sp.Expr:
    if isinstance(value, str):
        return parse_rational_function(value)
    if isinstance(value, RationalFunction):
        return value.expr
    return sp.sympify(value)


def _to_symbols(names: Optional[Iterable]) -> Optional[Tuple[sp.Symbol, ...]]:
    if names is None:
        return None
    return tuple(n if isinstance(n, sp.Symbol) else sp.Symbol(str(n).strip()) for n in names)


def _to_root(root) -> RootExpression:
    if isinstance(root, RootExpression):
        return root
    if isinstance(root, str):
        return parse_root(root)
    return RootExpression(RationalFunction(sp.S.One), RationalFunction.from_expr(root))


def perfect_square_variants(radicand) -> List[PerfectSquareVariant]:
    """
    Keep and strip variants of a radicand's square factors.

    Order: keep, strip the denominator square, strip the numerator square,
    strip both; duplicates are dropped. Stripping the denominator clears it
    entirely: with q = S^2 * q', sqrt(p/q) = sqrt(p * q') / (S * q'), so a
    denominator square lost when p/q was reduced still leaves the radicand.
    """
    R = radicand if isinstance(radicand, RationalFunction) else RationalFunction.from_expr(radicand)
    if R.is_zero:
        raise AlgebraError("radicand is identically zero")
    num_square, num_rest = extract_square_factor(R.numerator)
    den_square, den_rest = extract_square_factor(R.denominator)
    cleared = den_square * den_rest

    raw = [
        (R, sp.S.One, "keep"),
        (RationalFunction.from_expr(R.numerator * den_rest), 1 / cleared, "strip-denominator"),
        (RationalFunction.from_expr(num_rest / R.denominator), num_square, "strip-numerator"),
        (RationalFunction.from_expr(num_rest * den_rest), num_square / cleared, "strip"),
    ]
    variants: List[PerfectSquareVariant] = []
    for variant, factor, kind in raw:
        if any(variant == seen.radicand for seen in variants):
            continue
        variants.append(PerfectSquareVariant(variant, sp.cancel(factor), kind))
    return variants


def _select_variants(variants: List[PerfectSquareVariant], mode: str) -> List[PerfectSquareVariant]:
    if mode == "keep":
        return variants[:1]
    if mode == "strip":
        return variants[-1:]
    return variants


def verify(root, substitutions, token: Optional[RootToken] = None) -> Optional[VerifiedForm]:
    """
    Independent oracle: does the substitution turn the root into a rational function?

    Args:
        root: RootExpression (or text)
        substitutions: Parametrization, mapping or list of (variable, value) pairs
        token: Root token the substitution values may carry

    Returns:
        VerifiedForm with the sign-normalized value, or None on rejection
    """
    start_time = time.time()
    root = _to_root(root)
    if isinstance(substitutions, (Parametrization, VerifiedForm)):
        token = token or substitutions.token
        pairs = tuple(substitutions.substitutions)
    elif isinstance(substitutions, dict):
        pairs = tuple(substitutions.items())
    else:
        pairs = tuple(substitutions)
    mapping = {v if isinstance(v, sp.Symbol) else sp.Symbol(str(v)): _to_expr(e) for v, e in pairs}

    def rejected(reason: str) -> None:
        logger.log_verification(str(root), f"rejected: {reason}", time.time() - start_time)
        return None

    try:
        composed = simplify_value(root.radicand.expr.xreplace(mapping), token)
        prefactor = simplify_value(root.prefactor.expr.xreplace(mapping), token)
    except (AlgebraError, TokenError) as e:
        return rejected(str(e))
    if composed.has(sp.zoo, sp.nan) or prefactor.has(sp.zoo, sp.nan):
        return rejected("a denominator vanishes")

    num, den = sp.fraction(composed)
    num, den = sp.expand(num), sp.expand(den)
    if den == 0:
        return rejected("a denominator vanishes")
    if token is not None and token.symbol in num.free_symbols:
        return rejected("composed radicand still involves the root token")

    product = sp.expand(num * den)
    square_root = poly_sqrt(product)
    if square_root is not None:
        value = prefactor * square_root / den
    elif token is not None:
        quotient = sp.cancel(product / token.radicand)
        q_num, q_den = sp.fraction(quotient)
        square_root = poly_sqrt(sp.expand(q_num * q_den))
        if square_root is None:
            return rejected("not a perfect square")
        value = prefactor * token.symbol * square_root / (den * q_den)
    else:
        return rejected("not a perfect square")

    value = normalize_sign(simplify_value(value, token))
    check = value**2 - composed * prefactor**2
    if sp.cancel(simplify_value(check, token)) != 0:
        return rejected("value check failed")

    logger.log_verification(str(root), "verified", time.time() - start_time)
    return VerifiedForm(
        substitutions=tuple(mapping.items()),
        value=value,
        square_root=square_root,
        token=token,
    )


def detect_root_variable(f: sp.Expr, candidates: Sequence[sp.Symbol]) -> Optional[sp.Symbol]:
    """Alphabetically first variable occurring only squared (exponents 0 and 2)"""
    for var in sort_symbols(candidates):
        if var not in f.free_symbols:
            continue
        exponents = {monom[0] for monom in sp.Poly(f, var).monoms()}
        if exponents <= {0, 2} and 2 in exponents:
            return var
    return None


def _fdecomposition_radicand(f: sp.Expr, root: Optional[sp.Symbol]) -> Optional[sp.Expr]:
    """P with f = c*(root^2 - P) for a constant c, else None"""
    if root is None or root not in f.free_symbols:
        return None
    poly = sp.Poly(f, root)
    if poly.degree() != 2:
        return None
    a, b, c = poly.all_coeffs()
    a = sp.expand(a)
    if sp.expand(b) != 0 or not a.is_Number or a == 0:
        return None
    return sp.expand(-c / a)


def _resolve_outputs(options: Options, count: int, taken: set, general_t: bool) -> Tuple[sp.Symbol, ...]:
    outputs = _to_symbols(options.output_variables)
    if outputs is None:
        return default_output_symbols(count, settings.output_prefix, taken, 0 if general_t else 1)
    clash = {str(s) for s in outputs} & {str(s) for s in taken}
    if clash:
        raise OptionsError(f"output variables clash with input variables: {sorted(clash)}")
    if len(outputs) < count:
        raise OptionsError(f"{count} output variables needed, got {len(outputs)}")
    return outputs


def _check_active_options(options: Options, active: Sequence[sp.Symbol]):
    """fix_index and point refer to the active order; reject them before any search"""
    n = len(active)
    if options.fix_index is not None and options.fix_index >= n:
        raise OptionsError(f"fix_index {options.fix_index} out of range 0..{n - 1} for {[str(v) for v in active]}")
    if options.point is not None and len(options.point) != n:
        raise OptionsError(f"point needs {n} coordinates in the order {[str(v) for v in active]}")


def _prepare_point_options(options: Options) -> Options:
    if options.point is None:
        return options
    return options.model_copy(update={"point": [_to_expr(v) for v in options.point]})


def _parametrize(
    f: sp.Expr,
    split: VariableSplit,
    root: Optional[sp.Symbol],
    options: Options,
    outputs: Tuple[sp.Symbol, ...],
    budget: SearchBudget,
) -> List[Parametrization]:
    """Direct algorithm first; F-decomposition when it fails, is forced or a triple is given"""
    radicand = _fdecomposition_radicand(f, root)
    user_triple = None
    if options.f_polynomials is not None:
        if radicand is None:
            raise OptionsError("f_polynomials requires a polynomial of the form c*u^2 - P")
        user_triple = [_to_expr(p) for p in options.f_polynomials]
    forced = options.force_fdecomposition or user_triple is not None
    if forced and radicand is None:
        raise OptionsError("F-decomposition requires a polynomial of the form c*u^2 - P")

    results: List[Parametrization] = []
    if not forced:
        results = parametrize_hypersurface(f, split, options, root, outputs, budget)
    if not results and radicand is not None:
        inner = tuple(v for v in split.active if v != root)
        results = fdecompose_and_parametrize(
            radicand, inner, options, root, outputs, budget, user_triple=user_triple
        )
    return results


def parametrize_polynomial(poly, options: Optional[Options] = None) -> List[Parametrization]:
    """
    Rational parametrizations of the hypersurface V(poly).

    Args:
        poly: Polynomial (sympy expression or text)
        options: Driver options

    Returns:
        Verified parametrizations; empty when none is found
    """
    options = _prepare_point_options(options or Options())
    budget = SearchBudget(options.timeout)
    f = sp.expand(_to_expr(poly))
    if f == 0:
        raise AlgebraError("cannot parametrize the zero polynomial")

    variables = _to_symbols(options.variables)
    if variables is not None:
        missing = [v for v in variables if v not in f.free_symbols]
        if missing:
            raise OptionsError(f"variables not in the polynomial: {missing}")
        root = detect_root_variable(f, variables)
        active = variables
    else:
        candidates = sort_symbols(symbols_of(f))
        root = detect_root_variable(f, candidates)
        active = tuple(v for v in candidates if v != root) + ((root,) if root else ())
    split = VariableSplit.for_expression(f, active)
    _check_active_options(options, active)

    general = options.general_t and total_degree(f, active) > 1
    count = len(active) if general else len(active) - 1
    outputs = _resolve_outputs(options, count, symbols_of(f), general)

    logger.log_function_call("parametrize_polynomial", {"poly": str(f), "active": [str(v) for v in active]})
    results = _parametrize(f, split, root, options, outputs, budget)
    logger.log_function_call("parametrize_polynomial", {"results": len(results)}, status="completed")
    return results


def _rationalize_variant(
    root: RootExpression,
    variant: PerfectSquareVariant,
    options: Options,
    budget: SearchBudget,
) -> List[VerifiedForm]:
    p, q = variant.radicand.numerator, variant.radicand.denominator
    variables = _to_symbols(options.variables)
    radicand_vars = sort_symbols(symbols_of(p, q))
    if variables is None:
        variables = radicand_vars
    taken = symbols_of(p, q, root.prefactor.numerator, root.prefactor.denominator)
    if options.output_variables is not None:
        taken |= set(_to_symbols(options.output_variables))
    u = fresh_symbol(("u", "r"), taken)
    f = sp.expand(q * u**2 - p)
    active = tuple(variables) + (u,)
    split = VariableSplit.for_expression(f, active)
    _check_active_options(options, active)

    general = options.general_t and total_degree(f, active) > 1
    count = len(active) if general else len(active) - 1
    outputs = _resolve_outputs(options, count, symbols_of(f) | symbols_of(root.expr), general)

    forms = []
    for param in _parametrize(f, split, u, options, outputs, budget):
        form = verify(root, param.without_root, param.token)
        if form is None:
            continue
        forms.append(
            replace(
                form,
                strategy=param.strategy,
                variant=variant.kind,
                point=param.point,
                output_variables=param.output_variables,
            )
        )
    return forms


def rationalize_root(root, options: Optional[Options] = None, budget: Optional[SearchBudget] = None) -> List[VerifiedForm]:
    """
    Variable changes turning R1*sqrt(R2) into a rational function.

    Args:
        root: RootExpression (or text such as "sqrt(1-x^2)")
        options: Driver options
        budget: Shared time budget (a fresh one from options.timeout otherwise)

    Returns:
        Verified forms; an empty substitution list when the root is already rational
    """
    options = _prepare_point_options(options or Options())
    budget = budget or SearchBudget(options.timeout)
    root = _to_root(root)
    logger.log_function_call("rationalize_root", {"root": str(root), "mode": options.perfect_squares})

    R2 = root.radicand
    square = poly_sqrt(sp.expand(R2.numerator * R2.denominator))
    if square is not None:
        value = normalize_sign(root.prefactor.expr * square / R2.denominator)
        return [VerifiedForm((), value, square)]

    forms: List[VerifiedForm] = []
    for variant in _select_variants(perfect_square_variants(R2), options.perfect_squares):
        budget.check("perfect-square variants")
        for form in _rationalize_variant(root, variant, options, budget):
            if not any(form.signature() == other.signature() for other in forms):
                forms.append(form)
        if forms and options.perfect_squares != "exhaustive":
            break

    if not options.multiple_solutions:
        forms = forms[:1]
    logger.log_parametrization("rationalize_root", sorted(root.free_symbols, key=str), "success" if forms else "empty")
    return forms


def _complexity(root: RootExpression) -> Tuple[int, int, int]:
    p, q = root.radicand.numerator, root.radicand.denominator
    variables = sort_symbols(symbols_of(p, q))
    degree = max(total_degree(p, variables), total_degree(q, variables))
    terms = len(sp.Add.make_args(p)) + (len(sp.Add.make_args(q)) if q != 1 else 0)
    return (degree, terms, len(variables))


def _same_root(R: RationalFunction, g: RationalFunction) -> bool:
    """R / g is the square of a rational function"""
    num, den = sp.fraction(sp.cancel(R.expr / g.expr))
    return poly_sqrt(sp.expand(num * den)) is not None


class _Composer:
    """Composition rounds of simultaneous rationalization with a shared name registry"""

    def __init__(self, options: Options, budget: SearchBudget, taken: set):
        self.options = options
        self.budget = budget
        self.round = 0
        self.registry: Dict[sp.Symbol, Tuple[int, int]] = {}
        self.taken = {str(s) for s in taken}
        self.round_options = options.model_copy(
            update={
                "multiple_solutions": False,
                "variables": None,
                "output_variables": None,
                "point": None,
                "fix_index": None,
                "general_t": False,
                "general_c": False,
                "force_fdecomposition": False,
                "f_polynomials": None,
            }
        )

    def fresh_outputs(self, count: int) -> List[sp.Symbol]:
        self.round += 1
        prefix = ROUND_PREFIX
        while any(name.startswith(f"{prefix}{self.round}_") for name in self.taken):
            prefix += "_"
        names = []
        for index in range(1, count + 1):
            symbol = sp.Symbol(f"{prefix}{self.round}_{index:03d}")
            self.registry[symbol] = (self.round, index)
            self.taken.add(str(symbol))
            names.append(symbol)
        return names

    def rationalize_one(self, root: RootExpression, variables=None, mode: str = "keep") -> Optional[VerifiedForm]:
        active = variables or sort_symbols(root.radicand.free_symbols)
        outputs = self.fresh_outputs(len(active))
        options = self.round_options.model_copy(
            update={
                "variables": list(variables) if variables else None,
                "output_variables": outputs,
                "perfect_squares": mode,
            }
        )
        forms = rationalize_root(root, options, self.budget)
        return forms[0] if forms else None

    def main_path(self, order: List[RootExpression]) -> Optional[Dict[sp.Symbol, sp.Expr]]:
        """Rationalize roots one after the other, substituting each result into the rest"""
        variables = sort_symbols(set().union(*(r.radicand.free_symbols for r in order)))
        phi = {v: v for v in variables}
        for root in order:
            self.budget.check("simultaneous main path")
            try:
                current = RootExpression(
                    RationalFunction(sp.S.One),
                    RationalFunction.from_expr(root.radicand.expr.xreplace(phi)),
                )
            except AlgebraError:
                return None
            form = self.rationalize_one(current, None, "keep")
            if form is None or form.token is not None:
                return None
            sigma = form.as_dict()
            phi = {v: sp.cancel(e.xreplace(sigma)) for v, e in phi.items()}
        return phi

    def subset_path(self, order: List[RootExpression], depth: int) -> Optional[Dict[sp.Symbol, sp.Expr]]:
        """Change only the variables a root does not share with the others, then recurse on the rest"""
        for i, root in enumerate(order):
            others = order[:i] + order[i + 1 :]
            if not others:
                continue
            shared = set().union(*(o.radicand.free_symbols for o in others))
            exclusive = sort_symbols(root.radicand.free_symbols - shared)
            if not exclusive:
                continue
            single = RootExpression(RationalFunction(sp.S.One), root.radicand)
            form = self.rationalize_one(single, exclusive, self.options.perfect_squares)
            if form is None:
                continue

            rest = list(others)
            token_root = None
            if form.token is not None:
                token_root = RootExpression(RationalFunction(sp.S.One), RationalFunction.from_expr(form.token.radicand))
                if not any(_same_root(o.radicand, token_root.radicand) for o in rest):
                    rest.append(token_root)

            psi = self.solve(rest, depth + 1)
            if psi is None:
                continue
            token_value = None
            if token_root is not None:
                token_form = verify(token_root, psi)
                if token_form is None:
                    continue
                token_value = token_form.value

            composed = {}
            for var, value in form.as_dict().items():
                value = value.xreplace(psi)
                if token_value is not None:
                    value = value.xreplace({form.token.symbol: token_value})
                composed[var] = sp.cancel(value)
            variables = sort_symbols(set().union(*(r.radicand.free_symbols for r in order)))
            return {v: composed.get(v, psi.get(v, v)) for v in variables}
        return None

    def solve(self, roots: List[RootExpression], depth: int = 0) -> Optional[Dict[sp.Symbol, sp.Expr]]:
        self.budget.check("simultaneous search")
        if depth > 8:
            return None
        if len(roots) == 1:
            form = self.rationalize_one(roots[0], None, self.options.perfect_squares)
            if form is None or form.token is not None:
                return None
            variables = sort_symbols(roots[0].radicand.free_symbols)
            sigma = form.as_dict()
            return {v: sigma.get(v, v) for v in variables}

        heuristic = sorted(roots, key=_complexity, reverse=True)
        phi = self.main_path(heuristic)
        if phi is None:
            phi = self.subset_path(heuristic, depth)
        if phi is None:
            orderings = (list(p) for p in itertools.permutations(roots) if list(p) != heuristic)
            for order in itertools.islice(orderings, max(self.options.max_orderings - 1, 0)):
                phi = self.main_path(order)
                if phi is not None:
                    break
        return phi


def rationalize_simultaneously(roots: Sequence, options: Optional[Options] = None) -> Optional[List[VerifiedForm]]:
    """
    One substitution list rationalizing every root at once.

    Args:
        roots: RootExpressions (or texts)
        options: Driver options; output_variables name the final variables

    Returns:
        One VerifiedForm per root, all sharing the substitution list, or None
    """
    options = options or Options()
    roots = [_to_root(r) for r in roots]
    if not roots:
        raise OptionsError("at least one root is required")
    budget = SearchBudget(options.timeout)
    logger.log_function_call("rationalize_simultaneously", {"roots": [str(r) for r in roots]})

    if len(roots) == 1:
        forms = rationalize_root(roots[0], options, budget)
        return forms[:1] or None

    taken = set().union(*(r.free_symbols for r in roots))
    composer = _Composer(options, budget, taken | set(_to_symbols(options.output_variables) or ()))
    phi = composer.solve(roots)
    if phi is None:
        logger.log_parametrization("composed", sorted(taken, key=str), status="empty")
        return None

    fresh = {s for e in phi.values() for s in e.free_symbols if s in composer.registry}
    ordered = sorted(fresh, key=lambda s: (-composer.registry[s][0], composer.registry[s][1]))
    outputs = _to_symbols(options.output_variables)
    if outputs is None:
        outputs = default_output_symbols(len(ordered), settings.output_prefix, taken)
    elif len(outputs) < len(ordered):
        raise OptionsError(f"{len(ordered)} output variables needed, got {len(outputs)}")
    rename = dict(zip(ordered, outputs))
    phi = {v: sp.cancel(e.xreplace(rename)) for v, e in phi.items()}

    forms = []
    for root in roots:
        form = verify(root, phi)
        if form is None:
            logger.warning("Composed substitution failed verification", extra={"root": str(root)})
            return None
        forms.append(replace(form, strategy="composed", output_variables=tuple(outputs[: len(ordered)])))
    logger.log_parametrization("composed", sorted(taken, key=str))
    return forms
