"""
F-decomposition of a radicand.

A radicand P written as f_m^2 - 4 f_{m+1} f_{m-1} (m = d/2, deg f_k <= k) is
rationalized through the auxiliary hypersurface W cut out by the sum of the
k-homogenizations of the three polynomials in a shared variable z: any
parametrization of W lifts to one of u^2 = P.
"""

import itertools
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

import sympy as sp

from rootrat.app.exceptions import (
    AlgebraError,
    FDecompositionError,
    ParametrizationError,
    SolverGaveUp,
)
from rootrat.app.services.algebra import (
    VariableSplit,
    fresh_symbol,
    homogeneous_components,
    is_zero,
    k_homogenize,
    leading_coefficient,
    poly_sqrt,
    simplify_value,
    symbols_of,
    total_degree,
)
from rootrat.app.services.parametrize import Parametrization, parametrize_hypersurface
from rootrat.app.utils.budget import SearchBudget, ensure_budget
from rootrat.app.utils.logger import init_logger

logger = init_logger()


@dataclass(frozen=True)
class FDecomposition:
    """P = middle^2 - 4 * upper * lower with deg lower <= d/2-1, deg middle <= d/2, deg upper <= d/2+1"""

    lower: sp.Expr
    middle: sp.Expr
    upper: sp.Expr
    degree: int
    variables: Tuple[sp.Symbol, ...]

    @property
    def triple(self) -> Tuple[sp.Expr, sp.Expr, sp.Expr]:
        return (self.lower, self.middle, self.upper)

    @property
    def half(self) -> int:
        return self.degree // 2

    @property
    def radicand(self) -> sp.Expr:
        return sp.expand(self.middle**2 - 4 * self.upper * self.lower)

    def violations(self, P: sp.Expr) -> List[str]:
        problems = []
        if self.degree % 2 or self.degree < 2:
            problems.append(f"d={self.degree} must be even and at least 2")
        bounds = zip(("lower", "middle", "upper"), self.triple, (self.half - 1, self.half, self.half + 1))
        for name, f, bound in bounds:
            if total_degree(f, self.variables) > bound:
                problems.append(f"deg {name} = {total_degree(f, self.variables)} exceeds {bound}")
        if sp.expand(self.radicand - P) != 0:
            problems.append("middle^2 - 4*upper*lower differs from the radicand")
        return problems


def _even_degree(P: sp.Expr, active: Sequence[sp.Symbol]) -> int:
    degree = max(total_degree(P, active), 2)
    return degree + degree % 2


def validate_fdecomposition(P: sp.Expr, triple: Sequence, active: Sequence[sp.Symbol]) -> FDecomposition:
    """
    Check a caller-supplied triple (f_{d/2-1}, f_{d/2}, f_{d/2+1}) against the
    same two degrees the automatic search tries: d rounded up to even, then d+2.

    Raises:
        FDecompositionError: wrong arity, degree bound or identity failure
    """
    if len(triple) != 3:
        raise FDecompositionError(f"an F-decomposition has three polynomials, got {len(triple)}")
    P = sp.expand(P)
    lower, middle, upper = (sp.expand(sp.sympify(f)) for f in triple)
    base = _even_degree(P, active)
    first_problems = None
    for degree in (base, base + 2):
        fd = FDecomposition(lower, middle, upper, degree, tuple(active))
        problems = fd.violations(P)
        if not problems:
            logger.log_fdecomposition(fd.degree, fd.triple, status="validated")
            return fd
        first_problems = first_problems or problems
    raise FDecompositionError("; ".join(first_problems))


def _components(P, active) -> dict:
    return dict(homogeneous_components(P, active))


def _divide(num: sp.Expr, den: sp.Expr, active) -> Optional[sp.Expr]:
    """Exact polynomial quotient, or None"""
    num = sp.expand(num)
    if num == 0:
        return sp.S.Zero
    quotient, remainder = sp.div(num, den, *active)
    if sp.expand(remainder) != 0:
        return None
    return sp.expand(quotient)


def _ascending_sqrt(P, active, half) -> Optional[sp.Expr]:
    """Truncated square root grown from the lowest homogeneous component"""
    components = _components(P, active)
    low = min(components)
    s0 = poly_sqrt(components[low]) if low % 2 == 0 else None
    if s0 is None or low // 2 > half:
        return None
    parts = [s0]
    for k in range(1, half - low // 2 + 1):
        target = components.get(low + k, sp.S.Zero)
        cross = sum((parts[i] * parts[k - i] for i in range(1, k)), sp.S.Zero)
        s_k = _divide(target - cross, 2 * s0, active)
        if s_k is None:
            break
        parts.append(s_k)
    return sp.expand(sum(parts))


def _descending_sqrt(P, active) -> Optional[sp.Expr]:
    """Truncated square root grown from the top homogeneous component"""
    components = _components(P, active)
    top = max(components)
    if top % 2:
        return None
    s0 = poly_sqrt(components[top])
    if s0 is None:
        return None
    parts = [s0]
    for k in range(1, top // 2 + 1):
        target = components.get(top - k, sp.S.Zero)
        cross = sum((parts[i] * parts[k - i] for i in range(1, k)), sp.S.Zero)
        s_k = _divide(target - cross, 2 * s0, active)
        if s_k is None:
            break
        parts.append(s_k)
    return sp.expand(sum(parts))


def _variable_sqrt(P, var, active) -> Optional[sp.Expr]:
    """Truncated square root of P as a polynomial in one variable"""
    others = [v for v in active if v != var]
    coeffs = sp.Poly(P, var).all_coeffs()[::-1]
    top = len(coeffs) - 1
    if top <= 0 or top % 2:
        return None
    lead = poly_sqrt(coeffs[top])
    if lead is None or lead == 0:
        return None
    parts = [lead]
    for k in range(1, top // 2 + 1):
        cross = sum((parts[i] * parts[k - i] for i in range(1, k)), sp.S.Zero)
        target = sp.expand(coeffs[top - k] - cross)
        if others:
            s_k = _divide(target, 2 * lead, others)
        else:
            s_k = sp.expand(target / (2 * lead))
        if s_k is None:
            break
        parts.append(s_k)
    return sp.expand(sum(p * var ** (top // 2 - k) for k, p in enumerate(parts)))


def middle_candidates(P: sp.Expr, active: Sequence[sp.Symbol], half: int) -> List[sp.Expr]:
    """Candidate f_{d/2} in ladder order, deduplicated and within the degree bound"""
    raw = [_ascending_sqrt(P, active, half), _descending_sqrt(P, active)]
    raw += [_variable_sqrt(P, var, active) for var in active if var in P.free_symbols]
    raw += [poly_sqrt(term) for term in sp.Add.make_args(P)]
    raw.append(sp.S.Zero)
    candidates: List[sp.Expr] = []
    for f in raw:
        if f is None or total_degree(f, active) > half:
            continue
        if f not in candidates:
            candidates.append(f)
    return candidates


def _content_split(R, active) -> Tuple[sp.Expr, sp.Expr, sp.Expr]:
    """R = c * m * rest with c rational, m a monomial and rest primitive with positive leading coefficient"""
    R = sp.expand(R)
    if not symbols_of(R) & set(active):
        return R, sp.S.One, sp.S.One
    content, primitive = sp.primitive(R)
    terms = sp.Poly(primitive, *active).terms()
    exponents = [min(monom[j] for monom, _ in terms) for j in range(len(active))]
    monomial = sp.Mul(*[v**e for v, e in zip(active, exponents)])
    rest = sp.expand(sp.cancel(primitive / monomial))
    if leading_coefficient(rest) < 0:
        rest, content = -rest, -content
    return content, monomial, rest


def _monomial_divisors(monomial, active) -> List[sp.Expr]:
    exponents = [sp.degree(monomial, v) if v in monomial.free_symbols else 0 for v in active]
    divisors = itertools.product(*[range(e + 1) for e in exponents])
    ordered = sorted(divisors, key=lambda ex: (sum(ex), tuple(-e for e in ex)))
    return [sp.Mul(*[v**e for v, e in zip(active, ex)]) for ex in ordered]


def _outer_splits(R, active) -> Iterator[Tuple[sp.Expr, sp.Expr]]:
    """(lower, upper) pairs with 4 * lower * upper = R"""
    content, monomial, rest = _content_split(R, active)
    for divisor in _monomial_divisors(monomial, active):
        yield content / 4 * divisor, sp.expand(monomial / divisor * rest)
    yield sp.expand(content / 4 * rest), monomial
    yield sp.Rational(1, 4), sp.expand(R)


def find_fdecomposition(
    P: sp.Expr,
    active: Sequence[sp.Symbol],
    user_triple: Optional[Sequence] = None,
) -> List[FDecomposition]:
    """
    Decompositions of P found by the heuristic ladder, or the validated user triple.

    Args:
        P: Radicand polynomial
        active: Variables the degree bounds refer to
        user_triple: Optional (f_{d/2-1}, f_{d/2}, f_{d/2+1})

    Returns:
        Decompositions in ladder order (d rounded up to even first, then d+2)
    """
    P = sp.expand(P)
    active = tuple(active)
    if P == 0:
        raise AlgebraError("cannot decompose the zero polynomial")
    if user_triple is not None:
        return [validate_fdecomposition(P, user_triple, active)]

    found: List[FDecomposition] = []
    base = _even_degree(P, active)
    for degree in (base, base + 2):
        half = degree // 2
        for middle in middle_candidates(P, active, half):
            R = sp.expand(middle**2 - P)
            if R == 0:
                continue
            for lower, upper in _outer_splits(R, active):
                fd = FDecomposition(sp.expand(lower), middle, sp.expand(upper), degree, active)
                if fd.violations(P):
                    continue
                if any(fd.triple == other.triple for other in found):
                    continue
                found.append(fd)
                logger.log_fdecomposition(degree, fd.triple)
    return found


def build_w(fd: FDecomposition, z: sp.Symbol) -> sp.Expr:
    """Sum of the k-homogenizations of the triple in the shared variable z"""
    half = fd.half
    return sp.expand(
        k_homogenize(fd.upper, half + 1, z, fd.variables)
        + k_homogenize(fd.middle, half, z, fd.variables)
        + k_homogenize(fd.lower, half - 1, z, fd.variables)
    )


def lift_parametrization(
    fd: FDecomposition,
    param_w: Parametrization,
    z: sp.Symbol,
    root: sp.Symbol,
) -> Parametrization:
    """
    Turn a parametrization of W into one of root^2 = P.

    Raises:
        ParametrizationError: the z component vanishes identically
    """
    values = param_w.as_dict()
    token = param_w.token
    phi_z = values[z]
    if is_zero(phi_z, token):
        raise ParametrizationError("z component of the W parametrization vanishes")
    lifted = {v: simplify_value(values[v] / phi_z, token) for v in fd.variables}
    root_value = 2 * phi_z * fd.upper.xreplace(lifted) + fd.middle.xreplace(lifted)
    root_value = simplify_value(root_value, token)
    substitutions = tuple((v, lifted[v]) for v in fd.variables) + ((root, root_value),)
    return Parametrization(
        substitutions=substitutions,
        output_variables=param_w.output_variables,
        root_variable=root,
        strategy="fdecomp",
        point=param_w.point,
        chart=param_w.chart,
        fixed_index=param_w.fixed_index,
        token=token,
        free_parameters=param_w.free_parameters,
    )


def _square_shape(W: sp.Expr, active: Sequence[sp.Symbol]):
    """(w, Q) with W = a*w^2 - a*Q for a constant a, or None"""
    for w in active:
        if sp.degree(W, w) != 2:
            continue
        a, b, c = [sp.expand(k) for k in sp.Poly(W, w).all_coeffs()]
        if b == 0 and a.is_Number and a != 0:
            return w, sp.expand(-c / a)
    return None


def fdecompose_and_parametrize(
    P: sp.Expr,
    active: Sequence[sp.Symbol],
    options,
    root: sp.Symbol,
    output_variables: Sequence[sp.Symbol],
    budget: Optional[SearchBudget] = None,
    depth: int = 0,
    user_triple: Optional[Sequence] = None,
) -> List[Parametrization]:
    """
    Parametrize root^2 = P through F-decompositions of P.

    Args:
        P: Radicand polynomial in the active variables (and parameters)
        active: Active variables of P (the root variable excluded)
        options: Driver options
        root: Root variable receiving the lifted value
        output_variables: Names for the new variables
        budget: Shared time budget
        depth: Current nesting depth
        user_triple: Optional caller-supplied decomposition

    Returns:
        Verified lifted parametrizations (empty on total failure)
    """
    budget = ensure_budget(budget)
    active = tuple(active)
    P = sp.expand(P)
    if not symbols_of(P) & set(active):
        if user_triple is not None:
            raise FDecompositionError("the radicand is constant in the active variables")
        logger.debug("F-decomposition skipped: constant radicand")
        return []
    decompositions = find_fdecomposition(P, active, user_triple)
    w_options = options.model_copy(
        update={
            "point": None,
            "fix_index": None,
            "general_t": False,
            "general_c": False,
            "multiple_solutions": False,
        }
    )

    results: List[Parametrization] = []
    for fd in decompositions:
        budget.check("F-decomposition")
        taken = symbols_of(P) | set(active) | {root} | set(output_variables)
        z = fresh_symbol(("z", "v", "w"), taken)
        W = build_w(fd, z)
        split = VariableSplit.for_expression(W, active + (z,))
        try:
            params_w = parametrize_hypersurface(W, split, w_options, None, output_variables, budget)
        except (ParametrizationError, AlgebraError, SolverGaveUp) as e:
            logger.log_fdecomposition(fd.degree, fd.triple, status=f"rejected ({e})")
            params_w = []

        if not params_w and depth < options.fdecomp_depth:
            shape = _square_shape(W, split.active)
            if shape is not None:
                w, Q = shape
                inner = tuple(v for v in split.active if v != w)
                params_w = fdecompose_and_parametrize(
                    Q, inner, options, w, output_variables, budget, depth + 1
                )

        for param_w in params_w:
            try:
                lifted = lift_parametrization(fd, param_w, z, root)
            except ParametrizationError as e:
                logger.log_fdecomposition(fd.degree, fd.triple, status=f"lift failed ({e})")
                continue
            check = lifted.root_value**2 - P.xreplace(dict(lifted.substitutions))
            if not is_zero(check, lifted.token):
                logger.log_fdecomposition(fd.degree, fd.triple, status="lift rejected")
                continue
            results.append(lifted)
            logger.log_fdecomposition(fd.degree, fd.triple, status="lifted")
            if not options.multiple_solutions:
                return results
    return results
