"""
Projective closures, affine charts, point multiplicities and the search for
points of multiplicity d-1 (including points at infinity).

Homogeneous coordinates are always (active variables..., homogenizing variable).
Chart i sets coordinate i to 1; in an infinity chart the homogenizing variable
takes over slot i and is pinned to 0 together with every earlier coordinate, so
each projective point is found in exactly one chart.
"""

import itertools
import time
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import sympy as sp
from sympy.polys.polyerrors import CoercionFailed, PolynomialError

from rootrat.app.exceptions import AlgebraError, SearchTimeout, SolverGaveUp
from rootrat.app.services.algebra import (
    RootToken,
    VariableSplit,
    active_variables,
    extract_square_factor,
    fresh_symbol,
    homogenize,
    is_zero,
    poly_sqrt,
    simplify_value,
    symbols_of,
    total_degree,
)
from rootrat.app.utils.budget import SearchBudget, ensure_budget
from rootrat.app.utils.logger import init_logger

logger = init_logger()

HOMOGENIZING_NAMES = ("z", "v", "w", "z0")


@dataclass(frozen=True)
class ProjectiveHypersurface:
    """Zero set of a form homogeneous of `degree` in `coordinates`"""

    form: sp.Expr
    coordinates: Tuple[sp.Symbol, ...]
    degree: int
    parameters: Tuple[sp.Symbol, ...] = ()

    @property
    def hvar(self) -> sp.Symbol:
        return self.coordinates[-1]

    @property
    def affine_variables(self) -> Tuple[sp.Symbol, ...]:
        return self.coordinates[:-1]

    def chart(self, index: Optional[int] = None) -> "Chart":
        if index is None:
            index = len(self.coordinates) - 1
        if not 0 <= index < len(self.coordinates):
            raise AlgebraError(f"no chart with index {index}")
        return Chart(self, index)

    def charts(self) -> List["Chart"]:
        """Finite chart first, then the infinity charts by index"""
        return [self.chart()] + [self.chart(i) for i in range(len(self.affine_variables))]


@dataclass(frozen=True)
class Chart:
    surface: ProjectiveHypersurface
    index: int

    @property
    def is_finite(self) -> bool:
        return self.index == len(self.surface.coordinates) - 1

    @property
    def variables(self) -> Tuple[sp.Symbol, ...]:
        names = list(self.surface.affine_variables)
        if not self.is_finite:
            names[self.index] = self.surface.hvar
        return tuple(names)

    @property
    def polynomial(self) -> sp.Expr:
        return sp.expand(self.surface.form.xreplace({self.surface.coordinates[self.index]: sp.S.One}))

    @property
    def fixed_zero_positions(self) -> Tuple[int, ...]:
        if self.is_finite:
            return ()
        return tuple(range(self.index + 1))

    @property
    def name(self) -> str:
        if self.is_finite:
            return "finite"
        return f"{self.surface.coordinates[self.index]}=1"

    def homogeneous(self, values: Sequence) -> Tuple[sp.Expr, ...]:
        values = [sp.sympify(v) for v in values]
        if self.is_finite:
            return tuple(values) + (sp.S.One,)
        hvalue = values[self.index]
        values[self.index] = sp.S.One
        return tuple(values) + (hvalue,)

    def affine(self, coordinates: Sequence, token: Optional[RootToken] = None) -> Tuple[sp.Expr, ...]:
        coordinates = [sp.sympify(c) for c in coordinates]
        pivot = coordinates[self.index]
        if is_zero(pivot, token):
            raise AlgebraError(f"point lies at infinity of chart {self.name}")
        values = [simplify_value(c / pivot, token) for c in coordinates[:-1]]
        if not self.is_finite:
            values[self.index] = simplify_value(coordinates[-1] / pivot, token)
        return tuple(values)


@dataclass(frozen=True)
class ProjectivePoint:
    """
    Homogeneous coordinates of a point, possibly over one adjoined root token
    or free parameters C_k.

    `preferred` lists chart positions favoured when choosing which line
    parameter to fix; `solved` is the chart position obtained by solving.
    """

    coordinates: Tuple[sp.Expr, ...]
    chart_index: int
    free_parameters: Tuple[sp.Symbol, ...] = ()
    token: Optional[RootToken] = None
    preferred: Tuple[int, ...] = ()
    solved: Optional[int] = None
    origin: str = "search"

    def __post_init__(self):
        if all(is_zero(c, self.token) for c in self.coordinates):
            raise AlgebraError("all homogeneous coordinates are zero")

    @property
    def is_at_infinity(self) -> bool:
        return is_zero(self.coordinates[-1], self.token)

    def same_as(self, other: "ProjectivePoint") -> bool:
        """Projective equality: the two coordinate vectors are proportional"""
        if len(self.coordinates) != len(other.coordinates):
            return False
        if self.token is not None and other.token is not None and self.token is not other.token:
            return False
        token = self.token or other.token
        for j, k in itertools.combinations(range(len(self.coordinates)), 2):
            cross = self.coordinates[j] * other.coordinates[k] - self.coordinates[k] * other.coordinates[j]
            if not is_zero(cross, token):
                return False
        return True

    def rendered(self) -> List[str]:
        from rootrat.app.services.expr import render

        values = self.coordinates
        if self.token is not None:
            values = [self.token.expand_value(v) for v in values]
        return [render(v) for v in values]


def projective_closure(f: sp.Expr, split) -> ProjectiveHypersurface:
    """Homogenize f in its active variables with a fresh trailing coordinate"""
    f = sp.expand(f)
    if f == 0:
        raise AlgebraError("closure of the zero polynomial")
    if not isinstance(split, VariableSplit):
        split = VariableSplit.for_expression(f, split)
    if not split.active:
        raise AlgebraError("at least one active variable is required")
    hvar = fresh_symbol(HOMOGENIZING_NAMES, symbols_of(f) | set(split.symbols))
    form = homogenize(f, hvar, split.active)
    return ProjectiveHypersurface(form, split.active + (hvar,), total_degree(f, split.active), split.parameters)


def multiplicity_at(f: sp.Expr, point: Sequence, split, token: Optional[RootToken] = None) -> int:
    """Minimal total degree of f shifted to the point (0 means the point is off V)"""
    active = active_variables(split)
    if len(point) != len(active):
        raise AlgebraError(f"point has {len(point)} coordinates, expected {len(active)}")
    shift = {v: v + sp.sympify(a) for v, a in zip(active, point)}
    shifted = sp.expand(sp.sympify(f).xreplace(shift))
    if token is not None:
        shifted = sp.expand(token.reduce(shifted))
    if shifted == 0:
        raise AlgebraError("the zero polynomial has no multiplicity")
    lowest = None
    for monom, coeff in sp.Poly(shifted, *active).terms():
        if is_zero(coeff, token):
            continue
        degree = sum(monom)
        lowest = degree if lowest is None else min(lowest, degree)
    if lowest is None:
        raise AlgebraError("the zero polynomial has no multiplicity")
    return lowest


def multiplicity_by_derivatives(f: sp.Expr, point: Sequence, split) -> int:
    """Lowest order of a partial derivative not vanishing at the point"""
    active = active_variables(split)
    at = dict(zip(active, [sp.sympify(a) for a in point]))
    f = sp.expand(f)
    for order in range(total_degree(f, active) + 1):
        for combo in itertools.combinations_with_replacement(active, order):
            derivative = sp.diff(f, *combo) if combo else f
            if sp.cancel(derivative.xreplace(at)) != 0:
                return order
    raise AlgebraError("the zero polynomial has no multiplicity")


def height_ladder(height: int) -> List[sp.Rational]:
    """0, then rationals of height 1, 2, ... (denominator, numerator ascending, + before -)"""
    values = [sp.S.Zero]
    for h in range(1, height + 1):
        for q in range(1, h + 1):
            for p in range(1, h + 1):
                if max(p, q) != h or sp.igcd(p, q) != 1:
                    continue
                values.extend([sp.Rational(p, q), -sp.Rational(p, q)])
    return values


def ladder_assignments(count: int, ladder: Sequence) -> Iterator[Tuple]:
    """Tuples over the ladder ordered by the largest ladder index used"""
    if count == 0:
        yield ()
        return
    for level in range(len(ladder)):
        for combo in itertools.product(range(level + 1), repeat=count):
            if max(combo) == level:
                yield tuple(ladder[i] for i in combo)


def c_symbols(count: int, taken: Sequence = ()) -> Tuple[sp.Symbol, ...]:
    names = {str(s) for s in taken}
    symbols = []
    index = 1
    while len(symbols) < count:
        name = f"C{index}"
        if name not in names:
            symbols.append(sp.Symbol(name))
        index += 1
    return tuple(symbols)


def _height(value: sp.Expr) -> int:
    if value.is_Rational:
        return max(abs(value.p), value.q)
    return 10**9


def _solve_univariate(h: sp.Expr, var: sp.Symbol, allow_token: bool) -> List[Tuple[sp.Expr, Optional[RootToken]]]:
    """Roots of h in var when h has degree 1 or 2; irrational roots adjoin one token"""
    h = sp.expand(h)
    if var not in h.free_symbols:
        return []
    poly = sp.Poly(h, var)
    if poly.degree() == 1:
        b, c = [sp.cancel(k) for k in poly.all_coeffs()]
        return [(sp.cancel(-c / b), None)]
    if poly.degree() != 2:
        return []
    a, b, c = [sp.cancel(k) for k in poly.all_coeffs()]
    disc = sp.cancel(b**2 - 4 * a * c)
    if disc == 0:
        return [(sp.cancel(-b / (2 * a)), None)]
    num, den = sp.fraction(disc)
    product = sp.expand(num * den)
    root = poly_sqrt(product)
    if root is not None:
        s = root / den
        return [(sp.cancel((-b - s) / (2 * a)), None), (sp.cancel((-b + s) / (2 * a)), None)]
    if not allow_token:
        return []
    outer, inner = extract_square_factor(product)
    if not symbols_of(inner):
        # sqrt of a rational constant: not a point over the rationals
        return []
    token = RootToken(inner)
    s = outer * token.symbol / den
    return [
        (simplify_value((-b - s) / (2 * a), token), token),
        (simplify_value((-b + s) / (2 * a), token), token),
    ]


def _make_point(chart: Chart, values: Sequence, origin: str, token=None, preferred=None, solved=None, free=()):
    values = [sp.sympify(v) for v in values]
    if preferred is None:
        preferred = tuple(j for j, v in enumerate(values) if v == 0)
    return ProjectivePoint(
        coordinates=chart.homogeneous(values),
        chart_index=chart.index,
        free_parameters=tuple(free),
        token=token,
        preferred=tuple(preferred),
        solved=solved,
        origin=origin,
    )


def _conic_candidates(chart: Chart, options, root, budget: SearchBudget, fallbacks: list) -> Iterator[ProjectivePoint]:
    """Solve ladder for d = 2: fix all but one free coordinate, solve for the last"""
    h = chart.polynomial
    variables = chart.variables
    fixed = set(chart.fixed_zero_positions)
    free = [j for j in range(len(variables)) if j not in fixed]
    order = [j for j in reversed(free) if variables[j] != root]
    order += [j for j in free if variables[j] == root]

    if options.general_c:
        for solved in order:
            others = [j for j in free if j != solved]
            cs = c_symbols(len(others), symbols_of(h))
            values = [sp.S.Zero] * len(variables)
            for j, c in zip(others, cs):
                values[j] = c
            restricted = h.xreplace({variables[j]: values[j] for j in range(len(variables)) if j != solved})
            roots = _solve_univariate(restricted, variables[solved], allow_token=True)
            if not roots:
                continue
            for value, token in roots:
                values[solved] = value
                yield _make_point(chart, values, "general", token, others, solved, cs)
            return
        return

    ladder = height_ladder(options.height)
    for solved in order:
        others = [j for j in free if j != solved]
        for count, assignment in enumerate(ladder_assignments(len(others), ladder)):
            if count >= options.solve_limit:
                break
            if count % 25 == 0:
                budget.check("conic point ladder")
            values = [sp.S.Zero] * len(variables)
            for j, value in zip(others, assignment):
                values[j] = value
            restricted = h.xreplace({variables[j]: values[j] for j in range(len(variables)) if j != solved})
            for value, token in _solve_univariate(restricted, variables[solved], allow_token=not fallbacks):
                values[solved] = value
                if token is None:
                    yield _make_point(chart, values, "ladder", None, others, solved)
                elif not fallbacks:
                    fallbacks.append((_make_point(chart, values, "ladder", token, others, solved), chart))


def _quadric_system(surface: ProjectiveHypersurface, chart: Chart) -> Tuple[List[sp.Expr], List[int]]:
    """Order-(d-2) partials of the form, dehomogenized into the chart"""
    coords = surface.coordinates
    variables = chart.variables
    fixed = chart.fixed_zero_positions
    free = [j for j in range(len(variables)) if j not in fixed]
    pin = {coords[chart.index]: sp.S.One}
    zeros = {variables[j]: sp.S.Zero for j in fixed}
    equations: List[sp.Expr] = []
    for combo in itertools.combinations_with_replacement(coords, surface.degree - 2):
        partial = sp.diff(surface.form, *combo) if combo else surface.form
        partial = sp.expand(partial.xreplace(pin).xreplace(zeros))
        if partial != 0 and partial not in equations:
            equations.append(partial)
    return equations, free


def _higher_candidates(surface: ProjectiveHypersurface, chart: Chart, options, budget: SearchBudget) -> Iterator[ProjectivePoint]:
    """Coordinate points, a small-height scan, then elimination (d >= 3)"""
    equations, free = _quadric_system(surface, chart)
    variables = chart.variables
    unknowns = [variables[j] for j in free]
    if any(not (symbols_of(e) & set(unknowns)) and not is_zero(e) for e in equations):
        return

    def place(assignment):
        values = [sp.S.Zero] * len(variables)
        for j, value in zip(free, assignment):
            values[j] = value
        return values

    def satisfied(assignment) -> bool:
        at = dict(zip(unknowns, assignment))
        return all(is_zero(e.xreplace(at)) for e in equations)

    n = len(free)
    tried = set()
    coordinate_points = [(0,) * n] + [tuple(int(k == j) for k in range(n)) for j in range(n)] + [(1,) * n]
    for assignment in coordinate_points:
        if assignment in tried:
            continue
        tried.add(assignment)
        if satisfied(assignment):
            yield _make_point(chart, place(assignment), "coordinate")

    ladder = height_ladder(options.height)
    for count, assignment in enumerate(ladder_assignments(n, ladder)):
        if count >= options.scan_limit:
            break
        if count % 16 == 0:
            budget.check("height scan")
        if assignment in tried:
            continue
        tried.add(assignment)
        if satisfied(assignment):
            yield _make_point(chart, place(assignment), "scan")

    budget.check("elimination")
    try:
        solutions = solve_quadric_system(
            equations,
            unknowns,
            parameters=surface.parameters,
            general_c=options.general_c,
            degree_cap=options.elimination_degree_cap,
            height=options.height,
            budget=budget,
        )
    except SolverGaveUp as e:
        logger.debug(f"Elimination skipped in chart {chart.name}: {e}")
        return
    for solution in solutions:
        yield _make_point(
            chart,
            place(solution.values),
            "elimination",
            token=solution.token,
            free=solution.free_parameters,
        )


def _chart_order_key(chart: Chart, point: ProjectivePoint):
    """Exact rational points before token or parametric ones, integers first, then lexicographic"""
    values = chart.affine(point.coordinates, point.token)
    symbolic = point.token is not None or bool(point.free_parameters)
    rational = [v if isinstance(v, sp.Rational) else None for v in values]
    integral = all(v is not None and v.is_integer for v in rational)
    coordinates = tuple((0, v) if v is not None else (1, str(values[i])) for i, v in enumerate(rational))
    return symbolic, not integral, coordinates


def _verified(chart: Chart, point: ProjectivePoint, degree: int) -> bool:
    try:
        values = chart.affine(point.coordinates, point.token)
        return multiplicity_at(chart.polynomial, values, chart.variables, point.token) == degree - 1
    except AlgebraError as e:
        logger.debug(f"Candidate rejected in chart {chart.name}: {e}")
        return False


def iter_dminus1_points(
    surface: ProjectiveHypersurface,
    options,
    root: Optional[sp.Symbol] = None,
    budget: Optional[SearchBudget] = None,
) -> Iterator[Tuple[ProjectivePoint, Chart]]:
    """
    Lazily yield verified, pairwise distinct points of multiplicity d-1.

    Args:
        surface: Projective closure to search
        options: Search options (height, limits, general_c)
        root: Root variable, solved for last by the conic ladder
        budget: Shared time budget

    Yields:
        (point, chart) pairs, finite chart first
    """
    budget = ensure_budget(budget)
    degree = surface.degree
    if degree < 2:
        return
    seen: List[ProjectivePoint] = []
    fallbacks: list = []

    def fresh(point: ProjectivePoint) -> bool:
        return not any(point.same_as(other) for other in seen)

    for chart in surface.charts():
        budget.check("point search")
        start_time = time.time()
        found = 0
        if degree == 2:
            for point in _conic_candidates(chart, options, root, budget, fallbacks):
                if fresh(point) and _verified(chart, point, degree):
                    seen.append(point)
                    found += 1
                    yield point, chart
                    # every point of a conic serves equally well
                    break
        else:
            collected: List[ProjectivePoint] = []
            timed_out: Optional[SearchTimeout] = None
            try:
                for point in _higher_candidates(surface, chart, options, budget):
                    if _verified(chart, point, degree) and not any(point.same_as(other) for other in collected):
                        collected.append(point)
            except SearchTimeout as e:
                timed_out = e
            for point in sorted(collected, key=lambda p: _chart_order_key(chart, p)):
                if fresh(point):
                    seen.append(point)
                    found += 1
                    yield point, chart
            if timed_out is not None:
                # points collected before the deadline are still usable
                raise timed_out
        logger.log_point_search(chart.name, "conic ladder" if degree == 2 else "quadric system", found, time.time() - start_time)

    for point, chart in fallbacks:
        if fresh(point) and _verified(chart, point, degree):
            seen.append(point)
            yield point, chart


def find_dminus1_points(
    surface: ProjectiveHypersurface,
    options,
    root: Optional[sp.Symbol] = None,
    budget: Optional[SearchBudget] = None,
) -> List[Tuple[ProjectivePoint, Chart]]:
    """All points the strategy ladder finds, or only the first unless multiple_solutions is set"""
    found = []
    for point, chart in iter_dminus1_points(surface, options, root, budget):
        found.append((point, chart))
        if not options.multiple_solutions:
            break
    return found


def pinned_point(surface: ProjectiveHypersurface, values: Sequence) -> Tuple[ProjectivePoint, Chart]:
    """Finite-chart point given by the caller, multiplicity-checked"""
    chart = surface.chart()
    if len(values) != len(chart.variables):
        raise AlgebraError(f"pinned point needs {len(chart.variables)} coordinates")
    point = _make_point(chart, values, "pinned")
    multiplicity = multiplicity_at(chart.polynomial, values, chart.variables)
    if multiplicity != surface.degree - 1:
        raise AlgebraError(
            f"pinned point has multiplicity {multiplicity}, expected {surface.degree - 1}"
        )
    return point, chart


@dataclass(frozen=True)
class QuadricSolution:
    values: Tuple[sp.Expr, ...]
    token: Optional[RootToken] = None
    free_parameters: Tuple[sp.Symbol, ...] = ()


def _radical_bases(values: Sequence[sp.Expr]) -> Optional[set]:
    """Bases of square roots in the values; None if other irrationalities occur"""
    bases = set()
    for value in values:
        if value.has(sp.I):
            return None
        for power in value.atoms(sp.Pow):
            if power.exp.is_Integer:
                continue
            if power.exp in (sp.S.Half, -sp.S.Half):
                bases.add(power.base)
            else:
                return None
    return bases


def _concretize(values, token, free, assignment):
    at = dict(zip(free, assignment))
    values = [v.xreplace(at) for v in values]
    if token is None:
        return [sp.cancel(v) for v in values], None
    radicand = sp.cancel(token.radicand.xreplace(at))
    num, den = sp.fraction(radicand)
    root = poly_sqrt(sp.expand(num * den))
    if root is not None:
        return [sp.cancel(v.xreplace({token.symbol: root / den})) for v in values], None
    if not symbols_of(radicand):
        return None, None
    token = RootToken(radicand, token.symbol)
    return [simplify_value(v, token) for v in values], token


def _solution_key(solution: QuadricSolution):
    non_integer = not all(v.is_Integer for v in solution.values)
    height = max((_height(v) for v in solution.values), default=0)
    return (solution.token is not None, non_integer, height, tuple(str(v) for v in solution.values))


def solve_quadric_system(
    quadrics: Sequence[sp.Expr],
    unknowns: Sequence[sp.Symbol],
    parameters: Sequence[sp.Symbol] = (),
    general_c: bool = False,
    degree_cap: int = 12,
    height: int = 6,
    projective: bool = False,
    budget: Optional[SearchBudget] = None,
) -> List[QuadricSolution]:
    """
    Rational solutions of a small polynomial system via a lex Groebner basis.

    Solutions may carry one root token; free unknowns become parameters C_k
    (general_c) or are set to small ladder values. With projective=True the
    zero vector is not a solution.

    Raises:
        SolverGaveUp: basis degree above degree_cap or sympy cannot solve the basis
    """
    budget = ensure_budget(budget)
    unknowns = tuple(unknowns)
    equations = []
    for q in quadrics:
        q = sp.expand(q)
        if q != 0 and q not in equations:
            equations.append(q)

    if any(not (symbols_of(e) & set(unknowns)) for e in equations):
        return []
    if not unknowns:
        return [] if projective else [QuadricSolution(())]

    if equations:
        others = sorted(symbols_of(*equations) - set(unknowns), key=str)
        kwargs = {"order": "lex"}
        if others:
            kwargs["domain"] = sp.QQ.frac_field(*others)
        try:
            basis = list(sp.groebner(equations, *unknowns, **kwargs).exprs)
        except (PolynomialError, CoercionFailed, NotImplementedError) as e:
            raise SolverGaveUp(f"elimination failed: {e}") from e
        if any(not (symbols_of(g) & set(unknowns)) for g in basis):
            return []
        top = max(total_degree(g, unknowns) for g in basis)
        if top > degree_cap:
            raise SolverGaveUp(f"elimination degree {top} exceeds cap {degree_cap}")
        budget.check("solving the eliminated system")
        try:
            raw = sp.solve(basis, list(unknowns), dict=True)
        except NotImplementedError as e:
            raise SolverGaveUp(f"triangular solve failed: {e}") from e
    else:
        raw = [{}]

    taken = symbols_of(*equations) | set(unknowns) | set(parameters)
    candidates: List[QuadricSolution] = []
    for solution in raw:
        budget.check("collecting solutions")
        free = [u for u in unknowns if u not in solution]
        values = [sp.sympify(solution.get(u, u)) for u in unknowns]
        bases = _radical_bases(values)
        if bases is None or len(bases) > 1:
            continue
        token = None
        if bases:
            base = bases.pop()
            if not symbols_of(base):
                continue
            token = RootToken(sp.cancel(base))
            swap = {sp.sqrt(base): token.symbol, 1 / sp.sqrt(base): token.symbol / base}
            values = [simplify_value(v.xreplace(swap), token) for v in values]
            if any(_radical_bases([v]) for v in values):
                continue

        if not free:
            candidates.append(QuadricSolution(tuple(values), token))
            continue

        linear = all(
            v.is_polynomial(*free) and total_degree(v, free) <= 1 for v in values
        )
        if general_c and (linear or token is not None):
            cs = c_symbols(len(free), taken)
            rename = dict(zip(free, cs))
            values = [v.xreplace(rename) for v in values]
            if token is not None:
                token = RootToken(token.radicand.xreplace(rename), token.symbol)
            candidates.append(QuadricSolution(tuple(values), token, cs))
            continue

        for assignment in itertools.islice(ladder_assignments(len(free), height_ladder(height)), 3):
            concrete, concrete_token = _concretize(values, token, free, assignment)
            if concrete is not None:
                candidates.append(QuadricSolution(tuple(concrete), concrete_token))

    verified = []
    for candidate in candidates:
        if projective and not candidate.free_parameters and all(
            is_zero(v, candidate.token) for v in candidate.values
        ):
            continue
        at = dict(zip(unknowns, candidate.values))
        if all(is_zero(e.xreplace(at), candidate.token) for e in equations):
            verified.append(candidate)
    return sorted(verified, key=_solution_key)
