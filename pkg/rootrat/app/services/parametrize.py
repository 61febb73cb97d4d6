"""
Line-family parametrization of a hypersurface through a point of multiplicity d-1.

Given such a point p0 in some chart, every line through p0 meets the hypersurface
in exactly one further point; writing the line direction as (t_0, ..., t_n) gives
components -t_k * g_{d-1}(t) / g_d(t) + a_k, where g_d and g_{d-1} are the two
homogeneous components of f shifted to p0.
"""

import time
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import sympy as sp

from rootrat.app.exceptions import AlgebraError, ParametrizationError
from rootrat.app.services.algebra import (
    RootToken,
    VariableSplit,
    homogeneous_components,
    is_zero,
    simplify_value,
    symbols_of,
    total_degree,
)
from rootrat.app.services.geometry import (
    Chart,
    ProjectivePoint,
    iter_dminus1_points,
    pinned_point,
    projective_closure,
)
from rootrat.app.utils.budget import SearchBudget, ensure_budget
from rootrat.app.utils.logger import init_logger

logger = init_logger()


@dataclass(frozen=True)
class GeneralParametrization:
    """Line-family components with every direction variable t_k still live"""

    variables: Tuple[sp.Symbol, ...]
    components: Tuple[sp.Expr, ...]
    t_symbols: Tuple[sp.Symbol, ...]
    point: Tuple[sp.Expr, ...]
    shifted: sp.Expr
    cone: sp.Expr
    token: Optional[RootToken] = None
    source: Optional[ProjectivePoint] = None
    chart: Optional[Chart] = None

    def as_dict(self) -> Dict[sp.Symbol, sp.Expr]:
        return dict(zip(self.variables, self.components))


@dataclass(frozen=True)
class Parametrization:
    """Ordered substitution list old variable -> rational function of the output variables"""

    substitutions: Tuple[Tuple[sp.Symbol, sp.Expr], ...]
    output_variables: Tuple[sp.Symbol, ...]
    root_variable: Optional[sp.Symbol] = None
    strategy: str = "direct"
    point: Optional[ProjectivePoint] = None
    chart: Optional[Chart] = None
    fixed_index: Optional[int] = None
    token: Optional[RootToken] = None
    free_parameters: Tuple[sp.Symbol, ...] = ()

    def as_dict(self) -> Dict[sp.Symbol, sp.Expr]:
        return dict(self.substitutions)

    def value_of(self, var: sp.Symbol) -> sp.Expr:
        return self.as_dict()[var]

    @property
    def root_value(self) -> Optional[sp.Expr]:
        if self.root_variable is None:
            return None
        return self.as_dict().get(self.root_variable)

    @property
    def without_root(self) -> Tuple[Tuple[sp.Symbol, sp.Expr], ...]:
        return tuple((v, e) for v, e in self.substitutions if v != self.root_variable)

    def signature(self) -> Tuple[str, ...]:
        return tuple(f"{v}={sp.srepr(sp.cancel(e))}" for v, e in self.substitutions)

    def render(self, style: str = "plain") -> str:
        from rootrat.app.services.expr import render

        return render(self, style)


def default_output_symbols(count: int, prefix: str, taken: Iterable = (), start: int = 1) -> Tuple[sp.Symbol, ...]:
    """prefix1, prefix2, ... (or from `start`), moving to prefix_ when a name is taken"""
    names = {str(s) for s in taken}
    while True:
        candidates = [f"{prefix}{start + k}" for k in range(count)]
        if not names & set(candidates):
            return tuple(sp.Symbol(c) for c in candidates)
        prefix = f"{prefix}_"


def translate_and_split(
    f: sp.Expr,
    p0: Sequence,
    split,
    token: Optional[RootToken] = None,
) -> Tuple[sp.Expr, sp.Expr]:
    """
    Shift f to p0 and return its components of degree d and d-1.

    Raises:
        ParametrizationError: a component below degree d-1 survives
    """
    active = split.active if isinstance(split, VariableSplit) else tuple(split)
    degree = total_degree(f, active)
    shift = {v: v + sp.sympify(a) for v, a in zip(active, p0)}
    shifted = sp.expand(sp.sympify(f).xreplace(shift))
    if token is not None:
        shifted = sp.expand(token.reduce(shifted))

    buckets: Dict[int, sp.Expr] = {}
    for monom, coeff in sp.Poly(shifted, *active).terms():
        coeff = simplify_value(coeff, token)
        if is_zero(coeff, token):
            continue
        k = sum(monom)
        buckets[k] = buckets.get(k, sp.S.Zero) + coeff * sp.Mul(*[v**e for v, e in zip(active, monom)])

    components = {k: sp.expand(c) for k, c in buckets.items() if not is_zero(c, token)}
    if not components or min(components) < degree - 1:
        low = min(components) if components else None
        raise ParametrizationError(f"point has multiplicity {low}, expected {degree - 1}")
    if degree - 1 not in components:
        raise ParametrizationError(f"point has multiplicity above {degree - 1}")
    return components.get(degree, sp.S.Zero), components[degree - 1]


def line_parametrization(
    g_d: sp.Expr,
    g_dm1: sp.Expr,
    p0: Sequence,
    split,
    token: Optional[RootToken] = None,
    source: Optional[ProjectivePoint] = None,
    chart: Optional[Chart] = None,
) -> GeneralParametrization:
    """Components -t_k g_{d-1}(t)/g_d(t) + a_k for every active coordinate"""
    active = split.active if isinstance(split, VariableSplit) else tuple(split)
    if is_zero(g_dm1, token):
        raise ParametrizationError("g_{d-1} vanishes identically")
    if is_zero(g_d, token):
        raise ParametrizationError("degenerate cone: the line family lies inside the hypersurface")
    ts = tuple(sp.Dummy(f"t{k}") for k in range(len(active)))
    direction = dict(zip(active, ts))
    top = g_d.xreplace(direction)
    below = g_dm1.xreplace(direction)
    components = tuple(
        simplify_value(-t * below / top + sp.sympify(a), token) for t, a in zip(ts, p0)
    )
    return GeneralParametrization(
        variables=active,
        components=components,
        t_symbols=ts,
        point=tuple(sp.sympify(a) for a in p0),
        shifted=sp.expand(g_d + g_dm1),
        cone=top,
        token=token,
        source=source,
        chart=chart,
    )


def _candidate_indices(gp: GeneralParametrization) -> List[int]:
    """Positions ranked for t_i = 1: preferred first, then low degree and few terms in the shifted polynomial"""
    n = len(gp.variables)
    preferred = set(gp.source.preferred) if gp.source is not None else set()
    if not preferred:
        preferred = {k for k, a in enumerate(gp.point) if a == 0}
    if not preferred:
        preferred = set(range(n))
    terms = sp.Add.make_args(gp.shifted)

    def rank(k: int):
        var = gp.variables[k]
        degree = sp.degree(gp.shifted, var) if var in gp.shifted.free_symbols else 0
        containing = sum(1 for term in terms if var in term.free_symbols)
        return (k not in preferred, degree, containing, k)

    return sorted(range(n), key=rank)


def _fixed(gp: GeneralParametrization, index: int, outputs: Sequence[sp.Symbol]) -> Optional[Tuple[sp.Expr, ...]]:
    """Components with t_index = 1 and the survivors renamed; None if a denominator vanishes"""
    ts = gp.t_symbols
    if is_zero(gp.cone.xreplace({ts[index]: sp.S.One}), gp.token):
        return None
    survivors = [t for k, t in enumerate(ts) if k != index]
    mapping = {ts[index]: sp.S.One}
    solved = gp.source.solved if gp.source is not None else None
    rescale = gp.token is not None and solved is not None and solved != index
    for t, out in zip(survivors, outputs):
        scale = gp.token.symbol if rescale and t == ts[solved] else sp.S.One
        mapping[t] = scale * out
    return tuple(simplify_value(c.xreplace(mapping), gp.token) for c in gp.components)


def fix_t(
    gp: GeneralParametrization,
    index: Optional[int],
    output_variables: Sequence[sp.Symbol],
) -> Parametrization:
    """
    Set one t_i to 1 and rename the surviving t's onto the output variables.

    With index=None the position is chosen automatically: candidates that
    annihilate a denominator or leave a component without output variables
    are skipped.

    Raises:
        ParametrizationError: explicit index out of range or annihilating a denominator
    """
    n = len(gp.variables)
    outputs = tuple(output_variables)
    if len(outputs) < n - 1:
        raise ParametrizationError(f"{n - 1} output variables needed, got {len(outputs)}")
    outputs = outputs[: n - 1]

    if index is not None:
        if not 0 <= index < n:
            raise ParametrizationError(f"t index {index} out of range 0..{n - 1}")
        components = _fixed(gp, index, outputs)
        if components is None:
            raise ParametrizationError(f"setting t{index} = 1 annihilates a denominator")
        return _as_parametrization(gp, components, outputs, index)

    fallback = None
    for candidate in _candidate_indices(gp):
        components = _fixed(gp, candidate, outputs)
        if components is None:
            continue
        if all(symbols_of(c) & set(outputs) for c in components) or not outputs:
            return _as_parametrization(gp, components, outputs, candidate)
        if fallback is None:
            fallback = (components, candidate)
    if fallback is None:
        raise ParametrizationError("every choice of t_i = 1 annihilates a denominator")
    return _as_parametrization(gp, fallback[0], outputs, fallback[1])


def general_t(gp: GeneralParametrization, output_variables: Sequence[sp.Symbol]) -> Parametrization:
    """Keep every t live, renamed onto n+1 output variables"""
    outputs = tuple(output_variables)
    if len(outputs) < len(gp.t_symbols):
        raise ParametrizationError(f"{len(gp.t_symbols)} output variables needed for the general form")
    outputs = outputs[: len(gp.t_symbols)]
    mapping = dict(zip(gp.t_symbols, outputs))
    components = tuple(simplify_value(c.xreplace(mapping), gp.token) for c in gp.components)
    return _as_parametrization(gp, components, outputs, None)


def _as_parametrization(gp, components, outputs, index) -> Parametrization:
    return Parametrization(
        substitutions=tuple(zip(gp.variables, components)),
        output_variables=tuple(outputs),
        point=gp.source,
        chart=gp.chart,
        fixed_index=index,
        token=gp.token,
        free_parameters=gp.source.free_parameters if gp.source is not None else (),
    )


def chart_transfer(param: Parametrization, chart: Chart) -> Parametrization:
    """
    Move a parametrization of an infinity chart back to the finite chart.

    Raises:
        ParametrizationError: the homogenizing coordinate is identically zero
    """
    if chart.is_finite:
        return param
    values = param.as_dict()
    slot = values[chart.variables[chart.index]]
    if is_zero(slot, param.token):
        raise ParametrizationError("transfer denominator vanishes: the family lies at infinity")
    transferred = []
    for k, var in enumerate(chart.surface.affine_variables):
        value = sp.S.One if k == chart.index else values[chart.variables[k]]
        transferred.append((var, simplify_value(value / slot, param.token)))
    return replace(param, substitutions=tuple(transferred))


def is_sound(f: sp.Expr, param: Parametrization) -> bool:
    """f composed with the substitution list is identically zero"""
    try:
        return is_zero(sp.sympify(f).xreplace(param.as_dict()), param.token)
    except AlgebraError:
        return False


def hyperplane_parametrization(
    f: sp.Expr,
    split: VariableSplit,
    output_variables: Sequence[sp.Symbol],
    root: Optional[sp.Symbol] = None,
) -> Parametrization:
    """Degree one: solve for the first active variable with a nonzero coefficient"""
    f = sp.expand(f)
    for k, var in enumerate(split.active):
        coeff = sp.cancel(f.coeff(var, 1))
        if coeff == 0:
            continue
        others = [v for v in split.active if v != var]
        outputs = tuple(output_variables)[: len(others)]
        mapping = dict(zip(others, outputs))
        solved = sp.cancel(-(f - coeff * var).xreplace(mapping) / coeff)
        substitutions = [(v, solved if v == var else mapping[v]) for v in split.active]
        return Parametrization(
            substitutions=tuple(substitutions),
            output_variables=outputs,
            root_variable=root,
            fixed_index=k,
        )
    raise AlgebraError("f is constant in the active variables")


def _parametrize_at(f, surface, chart, point, options, outputs, root) -> Parametrization:
    values = chart.affine(point.coordinates, point.token)
    g_d, g_dm1 = translate_and_split(chart.polynomial, values, chart.variables, point.token)
    gp = line_parametrization(g_d, g_dm1, values, chart.variables, point.token, point, chart)
    if options.general_t:
        param = general_t(gp, outputs)
    else:
        param = fix_t(gp, options.fix_index, outputs)
    if not is_sound(chart.polynomial, param):
        raise ParametrizationError(f"composition check failed in chart {chart.name}")
    param = chart_transfer(param, chart)
    param = replace(param, root_variable=root, strategy="direct")
    if not is_sound(f, param):
        raise ParametrizationError("transferred parametrization does not satisfy f")
    return param


def parametrize_hypersurface(
    f: sp.Expr,
    split,
    options,
    root: Optional[sp.Symbol] = None,
    output_variables: Optional[Sequence[sp.Symbol]] = None,
    budget: Optional[SearchBudget] = None,
) -> List[Parametrization]:
    """
    Rational parametrizations of V(f) through points of multiplicity d-1.

    Args:
        f: Defining polynomial
        split: Active variables (with parameters) or a sequence of active variables
        options: Driver options (point, fix_index, general_t, general_c, bounds)
        root: Name of the root variable, if f is an associated polynomial
        output_variables: Names for the new variables
        budget: Shared time budget

    Returns:
        Verified parametrizations; empty when the point search finds nothing
    """
    budget = ensure_budget(budget)
    f = sp.expand(f)
    if not isinstance(split, VariableSplit):
        split = VariableSplit.for_expression(f, split)
    degree = total_degree(f, split.active)
    if degree < 1:
        raise AlgebraError("f must be nonconstant in the active variables")

    n = len(split.active)
    needed = n if options.general_t and degree > 1 else n - 1
    if output_variables is None:
        start = 0 if options.general_t and degree > 1 else 1
        output_variables = default_output_symbols(needed, "t", symbols_of(f), start)
    outputs = tuple(output_variables)

    logger.log_function_call("parametrize_hypersurface", {"f": str(f), "degree": degree})
    if degree == 1:
        param = hyperplane_parametrization(f, split, outputs, root)
        logger.log_parametrization("hyperplane", split.active)
        return [param]

    surface = projective_closure(f, split)
    if options.point is not None:
        candidates = [pinned_point(surface, [sp.sympify(v) for v in options.point])]
    else:
        candidates = iter_dminus1_points(surface, options, root, budget)

    results: List[Parametrization] = []
    start_time = time.time()
    for point, chart in candidates:
        try:
            param = _parametrize_at(f, surface, chart, point, options, outputs, root)
        except (ParametrizationError, AlgebraError) as e:
            logger.log_parametrization("direct", split.active, status="rejected", error=str(e))
            continue
        if any(param.signature() == other.signature() for other in results):
            continue
        results.append(param)
        logger.log_parametrization("direct", split.active)
        if not options.multiple_solutions:
            break

    logger.log_function_call(
        "parametrize_hypersurface",
        {"results": len(results), "duration_ms": round((time.time() - start_time) * 1000, 2)},
        status="completed",
    )
    return results
