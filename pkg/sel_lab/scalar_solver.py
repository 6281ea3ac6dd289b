"""
scalar_solver.py - The singular scalar Dirichlet problem F(D2u, Du, u, x) = k(delta(x)) u^-p, u = 0 on the boundary.

The discrete problem is solved by damped Newton steps on the interior values. Each step
freezes the extremal Pucci coefficients and the upwind directions at the current iterate
(policy iteration), and the singularity is approached through the regularised problems
F(u) = k (u + eps)^-p along a geometric schedule of eps ending at 0.
"""
import math
import typing
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import quad, solve_ivp
from scipy.sparse.linalg import spsolve

import nb_log

from sel_lab.classifier import EQ_TOL
from sel_lab.exceptions import (
    NO_SOLUTION_WEIGHT,
    ContractViolation,
    IterationError,
    NewtonDivergenceError,
    PositivityBreachError,
    PreconditionError,
    ShootingError,
    UnsupportedRegimeError,
)
from sel_lab.geometry import Domain, Grid, GridFunction, build_grid
from sel_lab.operators import OperatorSpec, discretize, linearize

logger = nb_log.get_logger('sel_lab.scalar_solver')

WEIGHT_FORMS = ("power", "power_log", "loglog_free")
LOWER_BOUND_KINDS = ("linear", "linear_logpow", "loglog", "logpow_only")
EPSILON0 = 1.0
EPSILON_RATIO = 0.25
EPSILON_MIN = 1e-10
STEP_FLOOR = 2.0 ** -20
GROWTH_RATIO = 0.85
GROWTH_FLOOR = 1e-10


@dataclass(frozen=True)
class WeightSpec:
    """
    The boundary weight k(delta):
        power        delta^-q_w
        power_log    delta^-q_w log^-a_w(A_w/delta)
        loglog_free  delta^-1 log^-1(A_w/delta)
    ``A_w`` defaults to e * diam(domain).
    """

    form: str = "power"
    q_w: float = 0.0
    a_w: float = 0.0
    A_w: typing.Optional[float] = None

    def __post_init__(self):
        if self.form not in WEIGHT_FORMS:
            raise ContractViolation(f"Unknown weight form {self.form!r}; expected one of {WEIGHT_FORMS}.")
        if self.form == "power" and self.a_w != 0:
            object.__setattr__(self, "a_w", 0.0)
        if self.form == "loglog_free":
            object.__setattr__(self, "q_w", 1.0)
            object.__setattr__(self, "a_w", 1.0)
        if self.q_w < 0:
            raise ContractViolation(f"The weight exponent q_w must be >= 0, got {self.q_w}.")

    @classmethod
    def constant(cls) -> "WeightSpec":
        return cls("power", 0.0)

    @classmethod
    def from_dict(cls, data: dict) -> "WeightSpec":
        return cls(**data)

    def to_dict(self) -> dict:
        return {"form": self.form, "q_w": self.q_w, "a_w": self.a_w, "A_w": self.A_w}

    def scale(self, domain: Domain) -> float:
        return float(self.A_w) if self.A_w is not None else math.e * domain.diameter

    def validate(self, domain: Domain) -> float:
        """Check diam < A on ``domain`` and return A."""
        A = self.scale(domain)
        if not A > domain.diameter:
            raise PreconditionError(f"The weight scale A = {A} must exceed diam = {domain.diameter}.")
        return A

    def evaluate(self, delta: np.ndarray, domain: Domain) -> np.ndarray:
        delta = np.asarray(delta, dtype=float)
        A = self.validate(domain)
        out = delta ** -self.q_w
        if self.a_w != 0:
            out = out * np.log(A / delta) ** -self.a_w
        return out

    def on_grid(self, grid: Grid) -> np.ndarray:
        """k(delta) at the interior nodes."""
        return self.evaluate(grid.delta[grid.interior_mask], grid.domain)

    def is_decreasing(self, domain: Domain, samples: int = 200) -> bool:
        t = np.geomspace(1e-8, domain.diameter, samples)
        return bool(np.all(np.diff(self.evaluate(t, domain)) <= 0))


@dataclass(frozen=True, eq=False)
class SolveResult:
    u: GridFunction
    iterations: int
    final_residual: float
    epsilon_path: typing.Tuple[float, ...]
    converged: bool
    breach: typing.Optional[str] = None
    path_values: typing.Tuple[np.ndarray, ...] = field(default=(), repr=False)
    residual_history: typing.Tuple[float, ...] = field(default=(), repr=False)

    def is_monotone_in_epsilon(self, atol: float = 1e-9) -> bool:
        """Regularised solutions grow as eps decreases."""
        return all(
            np.all(later >= earlier - atol * (1 + np.abs(earlier)))
            for earlier, later in zip(self.path_values, self.path_values[1:])
        )

    def summary(self) -> dict:
        return {
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "epsilon_path": list(self.epsilon_path),
            "converged": self.converged,
            "breach": self.breach,
            "sup_norm": self.u.sup_norm(),
        }


def epsilon_schedule(epsilon0: float = EPSILON0, ratio: float = EPSILON_RATIO,
                     epsilon_min: float = EPSILON_MIN) -> typing.Tuple[float, ...]:
    """eps0, eps0*ratio, ... while >= eps_min, then the singular level 0."""
    if not (epsilon0 > 0 and 0 < ratio < 1 and epsilon_min > 0):
        raise ContractViolation(f"Bad continuation schedule ({epsilon0}, {ratio}, {epsilon_min}).")
    levels = []
    eps = epsilon0
    while eps >= epsilon_min:
        levels.append(eps)
        eps *= ratio
    return tuple(levels) + (0.0,)


def _full(grid: Grid, interior_values: np.ndarray) -> GridFunction:
    values = np.zeros(grid.n_nodes)
    values[grid.interior_mask] = interior_values
    return GridFunction(grid, values)


class _Newton:
    """Damped policy-Newton iteration for F(u) = f (u + eps)^-p on the interior values."""

    logger = nb_log.get_logger('sel_lab.scalar_solver._Newton')

    def __init__(self, spec: OperatorSpec, grid: Grid, p_exp: float, f: np.ndarray, step_floor: float):
        self.spec = spec
        self.grid = grid
        self.p = float(p_exp)
        self.f = f
        self.step_floor = step_floor
        self.iterations = 0
        self.history = []

    def rhs(self, x: np.ndarray, eps: float) -> np.ndarray:
        if self.p == 0:
            return self.f
        return self.f * (x + eps) ** -self.p

    def residual(self, x: np.ndarray, eps: float) -> typing.Tuple[np.ndarray, float]:
        g = self.rhs(x, eps)
        R = discretize(self.spec, self.grid, _full(self.grid, x)).interior - g
        return R, float(np.max(np.abs(R) / (1.0 + np.abs(g))))

    def solve_level(self, x: np.ndarray, eps: float, tol: float, max_iter: int) -> typing.Tuple[np.ndarray, float]:
        interior = self.grid.interior_index
        R, norm = self.residual(x, eps)
        for it in range(max_iter):
            if norm < tol:
                return x, norm
            u = _full(self.grid, x)
            J = linearize(self.spec, self.grid, u)[:, interior]
            if self.p != 0:
                J = J + sp.diags(self.p * self.f * (x + eps) ** (-self.p - 1))
            dx = spsolve(sp.csc_matrix(J), -R)
            if not np.all(np.isfinite(dx)):
                raise NewtonDivergenceError(f"Singular Newton system at eps = {eps:g}.", last_iterate=u)
            step = 1.0
            if self.p != 0:
                shrinking = dx < 0
                if shrinking.any():
                    # keep x + eps above half its current value
                    step = min(1.0, float(np.min(0.5 * (x[shrinking] + eps) / -dx[shrinking])))
            blocked_by_positivity = step < 1.0
            while True:
                if step < self.step_floor:
                    cls = PositivityBreachError if blocked_by_positivity else NewtonDivergenceError
                    raise cls(
                        f"Newton step fell below {self.step_floor:g} at eps = {eps:g} with residual {norm:.3e}.",
                        last_iterate=u, eps=eps, residual=norm,
                    )
                x_try = x + step * dx
                if self.p != 0 and np.any(x_try + eps <= 0):
                    raise PositivityBreachError(f"An interior value reached zero at eps = {eps:g}.",
                                                last_iterate=u, eps=eps)
                R_try, norm_try = self.residual(x_try, eps)
                if np.isfinite(norm_try) and norm_try < norm:
                    break
                step *= 0.5
            x, R, norm = x_try, R_try, norm_try
            self.iterations += 1
            self.history.append(norm)
            self.logger.debug(f"eps {eps:.3e} newton {it + 1}: step {step:.3e}, residual {norm:.3e}")
        if norm < tol:
            return x, norm
        raise NewtonDivergenceError(f"Newton did not converge in {max_iter} steps at eps = {eps:g} "
                                    f"(residual {norm:.3e}).", last_iterate=_full(self.grid, x),
                                    eps=eps, residual=norm)


def solve_weighted(
    spec: OperatorSpec,
    grid: Grid,
    p_exp: float,
    weight_values: np.ndarray,
    tol: float = 1e-8,
    max_iter: int = 50,
    u0: typing.Optional[GridFunction] = None,
    epsilons: typing.Optional[typing.Sequence[float]] = None,
    step_floor: float = STEP_FLOOR,
) -> SolveResult:
    """
    Solve F(u) = f u^-p with an arbitrary positive nodal weight f given at the interior nodes.

    Args:
        weight_values: f at the interior nodes (length grid.n_interior).
        u0: initial iterate; defaults to delta.
        epsilons: continuation schedule ending at 0; defaults to epsilon_schedule().
            With p = 0 the schedule is skipped.
    Raises:
        NewtonDivergenceError / PositivityBreachError carrying the last iterate.
    """
    if p_exp < 0:
        raise ContractViolation(f"The singular exponent must be >= 0, got {p_exp}.")
    f = np.asarray(weight_values, dtype=float)
    if f.shape != (grid.n_interior,):
        raise ContractViolation(f"Weight needs {grid.n_interior} interior values, got {f.shape}.")
    if p_exp == 0:
        levels = (0.0,)
    else:
        levels = tuple(epsilons) if epsilons is not None else epsilon_schedule()
    x = (u0.interior.copy() if u0 is not None else grid.delta[grid.interior_mask].copy())
    if p_exp != 0 and np.any(x + levels[0] <= 0):
        raise PositivityBreachError("The initial iterate is not positive at the interior nodes.")
    newton = _Newton(spec, grid, p_exp, f, step_floor)
    path = []
    norm = math.inf
    for eps in levels:
        level_tol = tol if eps == levels[-1] else max(tol, 1e-6)
        x, norm = newton.solve_level(x, eps, level_tol, max_iter)
        path.append(x.copy())
    u = _full(grid, x)
    converged = bool(norm < tol and (p_exp == 0 or np.all(x > 0)))
    logger.debug(f"Solved F(u) = f u^-{p_exp:g} on {grid.n_interior} nodes: {newton.iterations} Newton steps, "
                 f"residual {norm:.3e}")
    return SolveResult(u, newton.iterations, norm, levels, converged, None, tuple(path), tuple(newton.history))


def solve_dirichlet(spec: OperatorSpec, grid: Grid, rhs: typing.Union[GridFunction, np.ndarray],
                    tol: float = 1e-10, max_iter: int = 50, u0: GridFunction = None) -> GridFunction:
    """Policy iteration for F(w) = rhs with w = 0 on the boundary."""
    values = rhs.interior if isinstance(rhs, GridFunction) else np.asarray(rhs, dtype=float)
    if values.shape == (grid.n_nodes,):
        values = values[grid.interior_mask]
    return solve_weighted(spec, grid, 0.0, values, tol=tol, max_iter=max_iter, u0=u0).u


def _quad_increments(q: float, a: float, A: float, decades: int = 9) -> typing.Tuple[str, typing.List[float]]:
    # in y = ln(A/t) the integrand t k(t) dt becomes A^(2-q) e^-(2-q)y y^-a dy on [1, inf)
    c = 2.0 - q
    increments = []
    for j in range(decades):
        lo, hi = 10.0 ** j, 10.0 ** (j + 1)
        log_peak = max(-c * lo - a * math.log(lo), -c * hi - a * math.log(hi)) + c * math.log(A)
        if log_peak > 700:
            return "infinite", increments
        val, _ = quad(lambda y: math.exp(c * math.log(A) - c * y - a * math.log(y)), lo, hi, limit=200)
        if not math.isfinite(val):
            return "infinite", increments
        increments.append(val)
    last, prev = increments[-1], increments[-2]
    if prev == 0 or last / prev < 0.95:
        return "finite", increments
    return "infinite", increments


def integral_criterion(weight: WeightSpec, domain: Domain = None) -> str:
    """
    'infinite' when the integral of t k(t) near t = 0 diverges (then no positive solution exists),
    'finite' otherwise. Closed form: infinite iff q > 2, or q = 2 and a <= 1.
    A decade-by-decade quadrature cross-checks the closed form.

    Example:
        >>> integral_criterion(WeightSpec("power_log", 2.0, 1.5))
        'finite'
    """
    q, a = weight.q_w, weight.a_w
    if weight.form == "loglog_free":
        closed = "finite"
    elif q > 2 + EQ_TOL or (abs(q - 2) <= EQ_TOL and a <= 1 + EQ_TOL):
        closed = "infinite"
    else:
        closed = "finite"
    A = weight.scale(domain) if domain is not None else (weight.A_w or math.e)
    numeric, increments = _quad_increments(q, a, A)
    if numeric != closed:
        logger.warning(f"Integral criterion for q={q}, a={a}: closed form says {closed}, quadrature says "
                       f"{numeric} (decade increments {increments[-3:]}).")
    return closed


def _initial_barrier(spec: OperatorSpec, grid: Grid, p_exp: float, weight: WeightSpec, f: np.ndarray) -> GridFunction:
    """A small multiple of H(c phi) when the weight allows the barrier profile, otherwise a multiple of phi."""
    from sel_lab.barrier import barrier_margin, composite_barrier, solve_barrier_ode
    from sel_lab.eigensolver import principal_eigenpair

    phi = principal_eigenpair(spec, grid).phi
    shape = phi
    if 0 < weight.q_w < 2:
        try:
            sol = solve_barrier_ode(weight.q_w, p_exp, 0.5)
            shape = composite_barrier(1.0, sol.b / max(phi.sup_norm(), 1e-300), sol, phi)
        except ShootingError as exc:
            logger.warning(f"Barrier profile unavailable ({exc.message}); starting from a multiple of phi.")
    m = 1.0
    for _ in range(40):
        w = shape.scaled(m)
        rhs = np.zeros(grid.n_nodes)
        with np.errstate(divide="ignore"):
            rhs[grid.interior_mask] = f * w.interior ** -p_exp if p_exp else f
        margin = barrier_margin(spec, grid, w, GridFunction(grid, rhs), "sub").interior
        if np.all(margin >= 0):
            return w
        m *= 0.5
    logger.warning("No subsolution multiple of the barrier found; starting from phi.")
    return phi


def solve_scalar_singular(
    spec: OperatorSpec,
    grid: Grid,
    p_exp: float,
    weight: WeightSpec,
    tol: float = 1e-8,
    max_iter: int = 50,
    allow_nonexistent: bool = False,
    u0: GridFunction = None,
    epsilons: typing.Optional[typing.Sequence[float]] = None,
    step_floor: float = STEP_FLOOR,
) -> SolveResult:
    """
    Solve F(D2u, Du, u, x) = k(delta) u^-p, u = 0 on the boundary.

    Weights failing the integral criterion raise UnsupportedRegimeError unless
    ``allow_nonexistent`` is set; the solve is then attempted. A failed iteration comes back
    with converged=False and breach='positivity' (an interior value reached zero) or
    'divergence' (Newton stopped). A converged discrete solve is returned as it is.

    Example:
        >>> g = build_grid(Domain.interval(0, 1), 201)
        >>> res = solve_scalar_singular(OperatorSpec.laplacian(), g, 0.0, WeightSpec.constant())
        >>> round(res.u.values[100], 6)
        0.125
    """
    weight.validate(grid.domain)
    nonexistent = integral_criterion(weight, grid.domain) == "infinite"
    if nonexistent and not allow_nonexistent:
        raise UnsupportedRegimeError(
            f"The weight delta^-{weight.q_w} log^-{weight.a_w} has a divergent integral of t k(t) near 0; "
            f"no positive solution exists for p = {p_exp}.",
            result=NO_SOLUTION_WEIGHT, q_w=weight.q_w, a_w=weight.a_w, p=p_exp,
        )
    if not weight.is_decreasing(grid.domain):
        logger.warning(f"Weight {weight.to_dict()} is not decreasing near the boundary; "
                       f"the non-existence criterion does not apply to it.")
    f = weight.on_grid(grid)
    if u0 is None and p_exp > 0 and not nonexistent:
        u0 = _initial_barrier(spec, grid, p_exp, weight, f)
    try:
        result = solve_weighted(spec, grid, p_exp, f, tol, max_iter, u0, epsilons, step_floor)
    except IterationError as exc:
        if not nonexistent:
            raise
        breach = "positivity" if isinstance(exc, PositivityBreachError) else "divergence"
        logger.warning(f"Solve in a non-existence regime stopped: {exc.message}")
        last = exc.last_iterate if isinstance(exc.last_iterate, GridFunction) else grid.from_delta(lambda d: d)
        return SolveResult(last, 0, float(exc.details.get("residual", math.inf)), (), False, breach)
    if nonexistent:
        logger.warning(f"Discrete solve converged for a weight without a positive solution "
                       f"(sup norm {result.u.sup_norm():.4e}); only refinement through blowup_probe "
                       f"can show the divergence.")
        return result
    logger.info(f"Scalar solve p={p_exp:g}, weight {weight.form} q={weight.q_w:g} a={weight.a_w:g}: "
                f"{result.iterations} Newton steps, residual {result.final_residual:.3e}")
    return result


ComparisonReport = namedtuple("ComparisonReport", ["holds", "first_violation", "warnings", "sub_margin",
                                                   "super_margin"])


def comparison_check(
    spec: OperatorSpec,
    grid: Grid,
    u_sub: GridFunction,
    u_super: GridFunction,
    p_exp: float,
    weight: WeightSpec,
    tol: float = 1e-12,
    margin_tol: float = 1e-9,
) -> ComparisonReport:
    """
    Ordering check u_sub <= u_super at every node. The sub/supersolution margins are computed
    alongside; an uncertified margin is reported as a warning, not an error.
    """
    f = weight.on_grid(grid)
    interior = grid.interior_mask
    with np.errstate(divide="ignore"):
        rhs_sub = f * u_sub.interior ** -p_exp if p_exp else f
        rhs_super = f * u_super.interior ** -p_exp if p_exp else f
    sub_margin = rhs_sub - discretize(spec, grid, u_sub).interior
    super_margin = discretize(spec, grid, u_super).interior - rhs_super
    warnings = []
    if np.min(sub_margin) < -margin_tol:
        warnings.append(f"u_sub is not a discrete subsolution (min margin {np.min(sub_margin):.3e})")
    if np.min(super_margin) < -margin_tol:
        warnings.append(f"u_super is not a discrete supersolution (min margin {np.min(super_margin):.3e})")
    for w in warnings:
        logger.warning(w)
    bad = np.flatnonzero(u_sub.values - u_super.values > tol * (1 + np.abs(u_super.values)))
    first = int(bad[0]) if len(bad) else None
    full_sub = np.zeros(grid.n_nodes)
    full_sub[interior] = sub_margin
    full_super = np.zeros(grid.n_nodes)
    full_super[interior] = super_margin
    return ComparisonReport(first is None, first, tuple(warnings), GridFunction(grid, full_sub),
                            GridFunction(grid, full_super))


LowerBound = namedtuple("LowerBound", ["c", "ok", "kind", "A", "argmin"])


def lower_bound_model(kind: str, delta: np.ndarray, A: float, theta: float = 0.0) -> np.ndarray:
    log_term = np.log(A / delta)
    if kind == "linear":
        return delta
    if kind == "linear_logpow":
        return delta * log_term ** theta
    if kind == "loglog":
        return delta * np.log(log_term)
    if kind == "logpow_only":
        return log_term ** theta
    raise ContractViolation(f"Unknown lower-bound kind {kind!r}; expected one of {LOWER_BOUND_KINDS}.")


def lower_bound_check(u: GridFunction, grid: Grid, kind: str = "linear", theta: float = 0.0,
                      A: float = None) -> LowerBound:
    """
    The largest c with u >= c model(delta) over the interior nodes; ok iff c > 0.
    ``A`` defaults to e * diam (10 * diam for 'loglog').

    Example:
        >>> g = build_grid(Domain.interval(0, 1), 101)
        >>> lower_bound_check(g.from_delta(lambda d: d), g).c
        1.0
    """
    if A is None:
        A = (10.0 if kind == "loglog" else math.e) * grid.domain.diameter
    delta = grid.delta[grid.interior_mask]
    ratio = u.interior / lower_bound_model(kind, delta, A, theta)
    k = int(np.argmin(ratio))
    c = float(ratio[k])
    return LowerBound(c, c > 0, kind, A, int(grid.interior_index[k]))


BlowupReport = namedtuple("BlowupReport", ["ns", "sup_norms", "increments", "layer_quotients", "breaches",
                                           "unbounded_growth"])


def blowup_probe(
    spec: OperatorSpec,
    domain: Domain,
    p_exp: float,
    weight: WeightSpec,
    ns: typing.Sequence[int] = (200, 400, 800),
    grading: str = "uniform",
    strength: float = 1.0,
    tol: float = 1e-8,
) -> BlowupReport:
    """
    Solve at each resolution and watch the sup norm and the boundary quotient u/delta
    at the first interior node. Increments of the sup norm that stop decaying
    (ratio >= 0.85) mean the discrete solutions have no limit.

    ``breaches`` holds what each resolution showed: the breach of a failed solve, 'divergence'
    for converged solves once the sup norms grow without a limit, otherwise None.
    Increments below ``GROWTH_FLOOR`` times the sup norm count as settled.
    """
    sups, quotients, breaches = [], [], []
    for n in ns:
        grid = build_grid(domain, n, grading, strength)
        res = solve_scalar_singular(spec, grid, p_exp, weight, tol, allow_nonexistent=True)
        sups.append(res.u.sup_norm())
        k = int(np.argmin(np.where(grid.interior_mask, grid.delta, np.inf)))
        quotients.append(float(res.u.values[k] / grid.delta[k]))
        breaches.append(res.breach)
    increments = list(np.diff(sups))
    floor = GROWTH_FLOOR * max(sups, default=0.0)
    growth = False
    for prev, last in zip(increments, increments[1:]):
        if prev > floor and last / prev >= GROWTH_RATIO:
            growth = True
    if growth:
        breaches = [b or "divergence" for b in breaches]
    logger.info(f"Blow-up probe over n = {list(ns)}: sup norms {sups}, unbounded growth {growth}")
    return BlowupReport(tuple(ns), tuple(sups), tuple(increments), tuple(quotients), tuple(breaches), growth)


def shooting_reference(p_exp: float, weight: WeightSpec, n: int = 100001, t_stop: float = 1e-10,
                       rtol: float = 1e-12, max_bisect: int = 200) -> typing.Tuple[np.ndarray, np.ndarray]:
    """
    Reference solution of -u'' = k(delta) u^-p on (0, 1) by shooting from the midpoint.

    u(1/2) = U, u'(1/2) = 0; integrating toward 0, a profile that vanishes before t_stop
    means U is too small. U is bisected until the bracket closes; the profile is mirrored.
    Returns (x, u) on n uniform nodes.
    """
    domain = Domain.interval(0.0, 1.0)
    A = weight.validate(domain)

    q, a = weight.q_w, weight.a_w

    def k(t):
        return t ** -q * (math.log(A / t) ** -a if a else 1.0)

    def rhs(t, y):
        return [y[1], -k(t) * max(y[0], 1e-300) ** -p_exp]

    def hit_zero(t, y):
        return y[0]

    hit_zero.terminal = True
    hit_zero.direction = 0

    def shoot(U):
        return solve_ivp(rhs, (0.5, t_stop), [U, 0.0], method="DOP853", rtol=rtol, atol=1e-14,
                         events=hit_zero, dense_output=True)

    def too_small(U):
        sol = shoot(U)
        return len(sol.t_events[0]) > 0, sol

    lo, hi = 1e-6, 1.0
    while not too_small(lo)[0]:
        lo *= 0.5
        if lo < 1e-200:
            raise ShootingError("No lower bracket for the midpoint value.")
    while too_small(hi)[0]:
        hi *= 2.0
        if hi > 1e12:
            raise ShootingError(f"No upper bracket for the midpoint value (weight scale A = {A}).")
    sol = None
    for _ in range(max_bisect):
        mid = 0.5 * (lo + hi)
        small, s = too_small(mid)
        if small:
            lo = mid
        else:
            hi, sol = mid, s
        if hi - lo <= 1e-15 * hi:
            break
    if sol is None:
        sol = shoot(hi)
    x = np.linspace(0.0, 1.0, n)
    t = np.minimum(x, 1.0 - x)
    u = np.zeros(n)
    inside = t >= t_stop
    u[inside] = sol.sol(t[inside])[0]
    u = np.maximum(u, 0.0)
    logger.debug(f"Shooting reference: u(1/2) = {hi:.12g}")
    return x, u


__all__ = [
    "WeightSpec", "SolveResult", "epsilon_schedule", "solve_weighted", "solve_dirichlet",
    "integral_criterion", "solve_scalar_singular", "comparison_check", "ComparisonReport",
    "lower_bound_check", "lower_bound_model", "LowerBound", "blowup_probe", "BlowupReport",
    "shooting_reference",
]
