"""
system_solver.py - The coupled system F(u) = u^-p v^-q, F(v) = u^-r v^-s by Picard iteration of the decoupled map.

One Picard step freezes v (resp. u) and solves the two scalar problems
F(u') = v^-q u'^-p and F(v') = u^-r v'^-s. Iterates are started inside an order cone
between delta-power envelopes whose constants satisfy the invariance inequalities of the map.
"""
import math
import typing
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

import nb_log

from sel_lab.classifier import ExponentQuad, classify, first_case_subcase
from sel_lab.exceptions import (
    InfeasibleConeError,
    IterationError,
    PositivityBreachError,
    PreconditionError,
    UnsupportedRegimeError,
)
from sel_lab.geometry import Grid, GridFunction
from sel_lab.operators import OperatorSpec, discretize
from sel_lab.scalar_solver import solve_weighted

logger = nb_log.get_logger('sel_lab.system_solver')

CONE_RTOL = 1e-9
SIGMA0 = math.log(2.0)
MAX_LOG_CONSTANT = 700.0


@dataclass(frozen=True)
class Envelope:
    """coef * delta^power * log^logpow(A/delta)."""

    coef: float = 1.0
    power: float = 1.0
    logpow: float = 0.0
    A: float = math.e

    def __call__(self, delta: np.ndarray) -> np.ndarray:
        delta = np.asarray(delta, dtype=float)
        out = self.coef * delta ** self.power
        if self.logpow:
            out = out * np.log(self.A / delta) ** self.logpow
        return out

    def scaled(self, factor: float) -> "Envelope":
        return Envelope(self.coef * factor, self.power, self.logpow, self.A)

    def to_dict(self) -> dict:
        return {"coef": self.coef, "power": self.power, "logpow": self.logpow, "A": self.A}


ConeShapes = namedtuple("ConeShapes", ["subcase", "a", "u_lower", "u_upper", "v_lower", "v_upper", "swapped"])


@dataclass(frozen=True)
class ConeSpec:
    u_lower: Envelope
    u_upper: Envelope
    v_lower: Envelope
    v_upper: Envelope
    m1: float
    M1: float
    m2: float
    M2: float
    subcase: str
    a: typing.Optional[float] = None
    log_fold: float = 1.0
    margin: float = 0.0

    def bounds(self, grid: Grid) -> typing.Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        d = grid.delta[grid.interior_mask]
        return self.u_lower(d), self.u_upper(d), self.v_lower(d), self.v_upper(d)

    def is_ordered(self, grid: Grid) -> bool:
        ul, uu, vl, vu = self.bounds(grid)
        return bool(np.all(ul <= uu) and np.all(vl <= vu))

    def contains(self, grid: Grid, u: GridFunction, v: GridFunction, rtol: float = CONE_RTOL) -> typing.Tuple[bool, bool]:
        ul, uu, vl, vu = self.bounds(grid)
        x, y = u.interior, v.interior
        u_ok = bool(np.all(x >= ul * (1 - rtol)) and np.all(x <= uu * (1 + rtol)))
        v_ok = bool(np.all(y >= vl * (1 - rtol)) and np.all(y <= vu * (1 + rtol)))
        return u_ok, v_ok

    def midpoint(self, grid: Grid) -> typing.Tuple[GridFunction, GridFunction]:
        return self.interpolate(grid, 0.5)

    def interpolate(self, grid: Grid, weight: float) -> typing.Tuple[GridFunction, GridFunction]:
        """lower^(1-weight) upper^weight for both components."""
        ul, uu, vl, vu = self.bounds(grid)
        u = np.zeros(grid.n_nodes)
        v = np.zeros(grid.n_nodes)
        u[grid.interior_mask] = ul ** (1 - weight) * uu ** weight
        v[grid.interior_mask] = vl ** (1 - weight) * vu ** weight
        return GridFunction(grid, u), GridFunction(grid, v)

    def to_dict(self) -> dict:
        return {
            "subcase": self.subcase,
            "a": self.a,
            "m1": self.m1, "M1": self.M1, "m2": self.m2, "M2": self.M2,
            "log_fold": self.log_fold,
            "margin": self.margin,
            "u_lower": self.u_lower.to_dict(), "u_upper": self.u_upper.to_dict(),
            "v_lower": self.v_lower.to_dict(), "v_upper": self.v_upper.to_dict(),
        }


@dataclass(frozen=True, eq=False)
class SystemResult:
    u: GridFunction
    v: GridFunction
    picard_iterations: int
    residual_u: float
    residual_v: float
    stayed_in_cone: typing.Tuple[bool, ...]
    converged: bool = True
    changes: typing.Tuple[float, ...] = field(default=(), repr=False)
    log_distances: typing.Tuple[float, ...] = field(default=(), repr=False)
    cone: typing.Optional[ConeSpec] = field(default=None, repr=False)
    swapped: bool = False

    def swap(self) -> "SystemResult":
        """The same solution with the roles of u and v exchanged."""
        return SystemResult(self.v, self.u, self.picard_iterations, self.residual_v, self.residual_u,
                            self.stayed_in_cone, self.converged, self.changes, self.log_distances, self.cone,
                            not self.swapped)

    def summary(self) -> dict:
        return {
            "picard_iterations": self.picard_iterations,
            "converged": self.converged,
            "residual_u": self.residual_u,
            "residual_v": self.residual_v,
            "all_in_cone": all(self.stayed_in_cone),
            "stayed_in_cone": list(self.stayed_in_cone),
            "changes": list(self.changes),
            "log_distances": list(self.log_distances),
            "cone": self.cone.to_dict() if self.cone else None,
        }


def _free_parameter(subcase: str, quad: ExponentQuad) -> typing.Optional[float]:
    if subcase in ("II", "IV", "VI"):
        return (1.0 / math.e + 1.0) / 2.0
    if subcase == "V":
        return 0.5 * (max(0.0, (1.0 - quad.s) / quad.r) + 1.0)
    return None


def _first_case_shapes(quad: ExponentQuad, A: float) -> ConeShapes:
    p, q, r, s = quad.as_tuple()
    sub = first_case_subcase(quad)
    a = _free_parameter(sub, quad)
    lin = Envelope(1.0, 1.0, 0.0, A)
    if sub == "I":
        th = (2 - r) / (1 + s)
        return ConeShapes(sub, a, lin, lin, Envelope(1.0, th, 0.0, A), Envelope(1.0, th, 0.0, A), False)
    if sub == "II":
        return ConeShapes(sub, a, lin, lin, lin, Envelope(1.0, 1 - a, 0.0, A), False)
    if sub == "III":
        return ConeShapes(sub, a, lin, lin, lin, lin, False)
    if sub == "IV":
        return ConeShapes(sub, a, lin, Envelope(1.0, 1 - a, 0.0, A), lin, lin, False)
    if sub == "V":
        return ConeShapes(sub, a, lin, Envelope(1.0, a, 0.0, A), Envelope(1.0, (2 - a * r) / (1 + s), 0.0, A),
                          Envelope(1.0, (2 - r) / (1 + s), 0.0, A), False)
    upper = Envelope(1.0, 1 - a, 0.0, A)
    return ConeShapes(sub, a, lin, upper, lin, upper, False)


def cone_shapes(quad: ExponentQuad, A: float = math.e) -> ConeShapes:
    """Unit-coefficient envelopes of the cone for the first applicable existence case."""
    report = classify(quad)
    if "E1" in report.existence_all:
        return _first_case_shapes(quad, A)
    if "E2" in report.existence_all:
        mirrored = _first_case_shapes(quad.swap(), A)
        return ConeShapes(mirrored.subcase, mirrored.a, mirrored.v_lower, mirrored.v_upper, mirrored.u_lower,
                          mirrored.u_upper, True)
    if "E3" in report.existence_all:
        a3 = 2 * (1 + quad.s - quad.q) / quad.det
        b3 = 2 * (1 + quad.p - quad.r) / quad.det
        u_env, v_env = Envelope(1.0, a3, 0.0, A), Envelope(1.0, b3, 0.0, A)
        return ConeShapes("case3", None, u_env, u_env, v_env, v_env, False)
    raise UnsupportedRegimeError(
        f"No existence case applies to (p, q, r, s) = {quad.as_tuple()} (det = {quad.det:.6g}).",
        result="existence requires (1+p)(1+s) - qr > 0 and one of the cases E1, E2, E3",
        nonexistence=report.nonexistence,
    )


def choose_cone_constants(c1: float, c2: float, quad: ExponentQuad,
                          sigma: float = SIGMA0) -> typing.Tuple[float, float, float, float]:
    """
    (m1, M1, m2, M2) with
        M1^(r/(1+s)) m2 <= c1 < c2 <= M1 m2^(q/(1+p))
        M2^(q/(1+p)) m1 <= c1 < c2 <= M2 m1^(r/(1+s))
    In logarithms these are linear inequalities. The returned point meets each of them with the same
    fixed log slack ``sigma`` (ln 2 by default). The slack itself has no maximum: along this family
    the relative margin reported by cone_margin grows with sigma toward a finite limit while the
    constants grow without bound, so sigma is held fixed. Points whose logarithms leave the float
    range (det close to 0) raise InfeasibleConeError.

    Example:
        >>> m1, M1, m2, M2 = choose_cone_constants(0.5, 2.0, ExponentQuad(0.25, 0.25, 0.25, 0.25))
        >>> M1 ** 0.2 * m2 <= 0.5
        True
    """
    if quad.det <= 0:
        raise InfeasibleConeError(f"The cone inequalities are infeasible: (1+p)(1+s) - qr = {quad.det:.6g} <= 0.",
                                  det=quad.det)
    if not 0 < c1 < c2:
        raise PreconditionError(f"Need 0 < c1 < c2, got c1 = {c1}, c2 = {c2}.")
    x, y = _cone_logs(c1, c2, quad, sigma)
    if max(abs(v) for v in x + y) > MAX_LOG_CONSTANT:
        raise InfeasibleConeError(f"The cone constants leave the float range at det = {quad.det:.3e}; "
                                  f"the feasible region has collapsed.", det=quad.det)
    m1, M1, m2, M2 = math.exp(y[0]), math.exp(x[0]), math.exp(y[1]), math.exp(x[1])
    _check_cone_inequalities(c1, c2, quad, m1, M1, m2, M2)
    return m1, M1, m2, M2


def _cone_logs(c1: float, c2: float, quad: ExponentQuad, sigma: float):
    ap, bp = quad.r / (1 + quad.s), quad.q / (1 + quad.p)
    L1, L2 = math.log(c1), math.log(c2)
    den = 1 - ap * bp
    x1 = (L2 - bp * L1 + (1 + bp) * sigma) / den
    y2 = L1 - ap * x1 - sigma
    X2 = (L2 - ap * L1 + (1 + ap) * sigma) / den
    y1 = L1 - bp * X2 - sigma
    return (x1, X2), (y1, y2)


def _check_cone_inequalities(c1, c2, quad, m1, M1, m2, M2, rtol: float = 1e-12):
    ap, bp = quad.r / (1 + quad.s), quad.q / (1 + quad.p)
    checks = (
        (M1 ** ap * m2, c1, "M1^(r/(1+s)) m2 <= c1"),
        (c2, M1 * m2 ** bp, "c2 <= M1 m2^(q/(1+p))"),
        (M2 ** bp * m1, c1, "M2^(q/(1+p)) m1 <= c1"),
        (c2, M2 * m1 ** ap, "c2 <= M2 m1^(r/(1+s))"),
    )
    for lhs, rhs, name in checks:
        if lhs > rhs * (1 + rtol):
            raise InfeasibleConeError(f"Cone constants violate {name}: {lhs} > {rhs}.")


def cone_margin(c1: float, c2: float, quad: ExponentQuad, sigma: float = SIGMA0) -> float:
    """Relative slack sigma / max |log constant| of the returned cone point; tends to 0 as det -> 0."""
    x, y = _cone_logs(c1, c2, quad, sigma)
    return sigma / max(abs(v) for v in x + y)


def _log_fold(shapes: ConeShapes, quad: ExponentQuad, grid: Grid) -> typing.Tuple[float, float]:
    """
    Factors by which log^(1/(1+e))(A/delta) exceeds delta^-a on the grid for each component whose
    upper envelope is delta^(1-a); e is the component's own exponent (p for u, s for v).
    """
    if shapes.subcase not in ("II", "IV", "VI"):
        return 1.0, 1.0
    d = grid.delta[grid.interior_mask]
    A, a = shapes.u_lower.A, shapes.a

    def fold(own: float, lower: Envelope, upper: Envelope) -> float:
        if upper.power == lower.power:
            return 1.0
        return max(1.0, float(np.max(np.log(A / d) ** (1 / (1 + own)) * d ** a)))

    return fold(quad.p, shapes.u_lower, shapes.u_upper), fold(quad.s, shapes.v_lower, shapes.v_upper)


def cone_for_regime(quad: ExponentQuad, c1: float, c2: float, grid: Grid, A: float = None,
                    max_widen: int = 40) -> ConeSpec:
    """
    The cone of the existence case of ``quad`` with constants from choose_cone_constants.
    The slack is doubled until lower <= upper at every interior node.

    Example:
        >>> cone_for_regime(ExponentQuad(0.25, 0.25, 0.25, 0.25), 0.5, 2.0, build_grid(Domain.interval(0, 1), 51)).subcase
        'III'
    """
    A = math.e * grid.domain.diameter if A is None else A
    shapes = cone_shapes(quad, A)
    fold_u, fold_v = _log_fold(shapes, quad, grid)
    if fold_u > 1 or fold_v > 1:
        logger.info(f"log^(1/(1+s))(A/delta) <= delta^-a fails on the grid; upper envelopes enlarged by "
                    f"{fold_u:.4g} (u) and {fold_v:.4g} (v)")
    sigma = SIGMA0
    for _ in range(max_widen):
        m1, M1, m2, M2 = choose_cone_constants(c1, c2, quad, sigma)
        cone = ConeSpec(
            u_lower=shapes.u_lower.scaled(m1),
            u_upper=shapes.u_upper.scaled(M1 * fold_u),
            v_lower=shapes.v_lower.scaled(m2),
            v_upper=shapes.v_upper.scaled(M2 * fold_v),
            m1=m1, M1=M1, m2=m2, M2=M2,
            subcase=shapes.subcase, a=shapes.a, log_fold=max(fold_u, fold_v),
            margin=cone_margin(c1, c2, quad, sigma),
        )
        if cone.is_ordered(grid):
            return cone
        sigma *= 2.0
    raise InfeasibleConeError(f"Cone envelopes stay crossed on the grid after widening the slack to {sigma:.3g}.")


def _decoupled_solve(spec: OperatorSpec, grid: Grid, exponent: float, weight: np.ndarray, start: GridFunction,
                     tol: float, max_iter: int) -> GridFunction:
    try:
        return solve_weighted(spec, grid, exponent, weight, tol, max_iter, u0=start, epsilons=(0.0,)).u
    except IterationError as exc:
        logger.debug(f"Warm-started decoupled solve failed ({exc.message}); using the full continuation.")
        return solve_weighted(spec, grid, exponent, weight, tol, max_iter).u


class _PicardMap:
    """(u, v) -> (T_u(v), T_v(u)), the Jacobi step of the decoupled map."""

    def __init__(self, spec: OperatorSpec, grid: Grid, quad: ExponentQuad, inner_tol: float, max_iter: int,
                 jobs: int = 1):
        self.spec, self.grid, self.quad = spec, grid, quad
        self.inner_tol, self.max_iter, self.jobs = inner_tol, max_iter, jobs

    def __call__(self, u: GridFunction, v: GridFunction) -> typing.Tuple[GridFunction, GridFunction]:
        quad = self.quad
        fu = v.interior ** -quad.q
        fv = u.interior ** -quad.r
        args_u = (self.spec, self.grid, quad.p, fu, u, self.inner_tol, self.max_iter)
        args_v = (self.spec, self.grid, quad.s, fv, v, self.inner_tol, self.max_iter)
        if self.jobs > 1:
            with ThreadPoolExecutor(max_workers=2) as pool:
                fut_u = pool.submit(_decoupled_solve, *args_u)
                fut_v = pool.submit(_decoupled_solve, *args_v)
                return fut_u.result(), fut_v.result()
        return _decoupled_solve(*args_u), _decoupled_solve(*args_v)


def _log_distance(a: GridFunction, b: GridFunction) -> float:
    return float(np.max(np.abs(np.log(a.interior) - np.log(b.interior))))


def _relative_change(new: GridFunction, old: GridFunction) -> float:
    return float(np.max(np.abs(new.interior - old.interior) / np.abs(old.interior)))


def picard_iterate(
    spec: OperatorSpec,
    grid: Grid,
    quad: ExponentQuad,
    cone: ConeSpec,
    tol: float = 1e-8,
    max_iter: int = 60,
    clamp: bool = False,
    jobs: int = 1,
    inner_tol: float = 1e-10,
    start: typing.Tuple[GridFunction, GridFunction] = None,
) -> SystemResult:
    """
    Picard iteration from the cone midpoint (geometric mean of the envelopes).
    Cone membership is recorded per iteration; with ``clamp`` iterates are projected onto the cone.
    Stops when the relative sup change of both components is below ``tol``.
    """
    u, v = start if start is not None else cone.midpoint(grid)
    step = _PicardMap(spec, grid, quad, inner_tol, 50, jobs)
    flags, changes, distances = [], [], []
    ul, uu, vl, vu = cone.bounds(grid)
    for k in range(max_iter):
        u_new, v_new = step(u, v)
        u_ok, v_ok = cone.contains(grid, u_new, v_new)
        flags.append(u_ok and v_ok)
        if not (u_ok and v_ok):
            logger.warning(f"Picard iterate {k + 1} left the cone (u inside: {u_ok}, v inside: {v_ok})")
            if clamp:
                x = u_new.values.copy()
                y = v_new.values.copy()
                x[grid.interior_mask] = np.clip(u_new.interior, ul, uu)
                y[grid.interior_mask] = np.clip(v_new.interior, vl, vu)
                u_new, v_new = u_new.with_values(x), v_new.with_values(y)
        change = max(_relative_change(u_new, u), _relative_change(v_new, v))
        changes.append(change)
        distances.append(max(_log_distance(u_new, u), _log_distance(v_new, v)))
        u, v = u_new, v_new
        logger.debug(f"picard {k + 1}: relative change {change:.3e}")
        if change < tol:
            res = system_residual(spec, grid, u, v, quad)
            logger.info(f"Picard converged in {k + 1} iterations; weighted residuals "
                        f"{res.residual_u:.3e}, {res.residual_v:.3e}")
            return SystemResult(u, v, k + 1, res.residual_u, res.residual_v, tuple(flags), True, tuple(changes),
                                tuple(distances), cone)
    raise IterationError(f"Picard iteration did not converge in {max_iter} steps (last change {changes[-1]:.3e}).",
                         last_iterate=(u, v), change=changes[-1])


SystemResidual = namedtuple("SystemResidual", ["residual_u", "residual_v", "unweighted_u", "unweighted_v"])


def system_residual(spec: OperatorSpec, grid: Grid, u: GridFunction, v: GridFunction,
                    quad: ExponentQuad) -> SystemResidual:
    """
    Sup norms of F(u) - u^-p v^-q and F(v) - u^-r v^-s, weighted by delta^min(q, r); unweighted also returned.
    """
    x, y = u.interior, v.interior
    if np.any(x <= 0) or np.any(y <= 0):
        raise PositivityBreachError("The system residual needs u, v > 0 at the interior nodes.",
                                    last_iterate=(u, v))
    d = grid.delta[grid.interior_mask]
    Ru = discretize(spec, grid, u).interior - x ** -quad.p * y ** -quad.q
    Rv = discretize(spec, grid, v).interior - x ** -quad.r * y ** -quad.s
    w = d ** min(quad.q, quad.r)
    return SystemResidual(float(np.max(np.abs(w * Ru))), float(np.max(np.abs(w * Rv))),
                          float(np.max(np.abs(Ru))), float(np.max(np.abs(Rv))))


def prototype_constants(spec: OperatorSpec, grid: Grid, quad: ExponentQuad, shapes: ConeShapes,
                        tol: float = 1e-10) -> typing.Tuple[float, float]:
    """
    c1 <= inf z / lower and c2 >= sup z / upper over the four decoupled prototype solves
    (u against the largest and the smallest v shape, and v likewise), widened by 0.5 and 2.
    """
    d = grid.delta[grid.interior_mask]
    ul, uu, vl, vu = shapes.u_lower(d), shapes.u_upper(d), shapes.v_lower(d), shapes.v_upper(d)

    def solve(exponent, weight):
        return solve_weighted(spec, grid, exponent, weight, tol).u.interior

    z_u_low = solve(quad.p, vu ** -quad.q)
    z_u_high = solve(quad.p, vl ** -quad.q)
    z_v_low = solve(quad.s, uu ** -quad.r)
    z_v_high = solve(quad.s, ul ** -quad.r)
    low = min(float(np.min(z_u_low / ul)), float(np.min(z_v_low / vl)))
    high = max(float(np.max(z_u_high / uu)), float(np.max(z_v_high / vu)))
    c1 = min(0.5 * low, 0.5)
    c2 = max(2.0 * high, 2.0)
    logger.debug(f"Prototype constants c1 = {c1:.6g}, c2 = {c2:.6g}")
    return c1, c2


def prepare_cone(spec: OperatorSpec, grid: Grid, quad: ExponentQuad) -> ConeSpec:
    A = math.e * grid.domain.diameter
    c1, c2 = prototype_constants(spec, grid, quad, cone_shapes(quad, A))
    return cone_for_regime(quad, c1, c2, grid, A)


def solve_system(
    spec: OperatorSpec,
    grid: Grid,
    quad: ExponentQuad,
    tol: float = 1e-8,
    max_iter: int = 60,
    clamp: bool = False,
    jobs: int = 1,
) -> SystemResult:
    """
    Classify, build the cone from the prototype constants, and run the Picard iteration.
    A quad covered only by the mirrored existence case is solved through the swap.

    Example:
        >>> g = build_grid(Domain.interval(0, 1), 201)
        >>> solve_system(OperatorSpec.laplacian(), g, ExponentQuad(0.25, 0.25, 0.25, 0.25)).converged
        True
    """
    report = classify(quad)
    if not report.existence_all:
        raise UnsupportedRegimeError(
            f"No existence case applies to (p, q, r, s) = {quad.as_tuple()}.",
            result=f"non-existence case {report.nonexistence}" if report.nonexistence else None,
        )
    if "E1" not in report.existence_all and "E2" in report.existence_all and "E3" not in report.existence_all:
        logger.info(f"Solving {quad.as_tuple()} through the swapped system {quad.swap().as_tuple()}")
        return solve_system(spec, grid, quad.swap(), tol, max_iter, clamp, jobs).swap()
    cone = prepare_cone(spec, grid, quad)
    return picard_iterate(spec, grid, quad, cone, tol, max_iter, clamp, jobs)


UniquenessReport = namedtuple("UniquenessReport", [
    "distance", "log_distances", "step_ratios", "cycle_ratios", "empirical_contraction", "bound",
    "within_bound", "iterations",
])


def uniqueness_probe(spec: OperatorSpec, grid: Grid, quad: ExponentQuad, tol: float = 1e-8, max_iter: int = 60,
                     cone: ConeSpec = None) -> UniquenessReport:
    """
    Run two Picard sequences in lockstep from lower^0.75 upper^0.25 and lower^0.25 upper^0.75.
    The log-sup distance of the pair over a full cycle (two steps) is compared with qr/((1+p)(1+s)).
    """
    report = classify(quad)
    if not report.unique:
        raise PreconditionError(f"(p, q, r, s) = {quad.as_tuple()} meets neither uniqueness condition "
                                f"(p+q < 1 and r < 2, or r+s < 1 and q < 2).")
    cone = cone if cone is not None else prepare_cone(spec, grid, quad)
    step = _PicardMap(spec, grid, quad, min(tol * 1e-2, 1e-10), 50)
    first = cone.interpolate(grid, 0.25)
    second = cone.interpolate(grid, 0.75)

    def pair_distance(a, b):
        return max(_log_distance(a[0], b[0]), _log_distance(a[1], b[1]))

    distances = [pair_distance(first, second)]
    done = False
    k = 0
    for k in range(max_iter):
        new_first, new_second = step(*first), step(*second)
        change = max(_relative_change(new_first[0], first[0]), _relative_change(new_first[1], first[1]),
                     _relative_change(new_second[0], second[0]), _relative_change(new_second[1], second[1]))
        first, second = new_first, new_second
        distances.append(pair_distance(first, second))
        if change < tol:
            done = True
            break
    if not done:
        raise IterationError(f"Uniqueness probe did not settle in {max_iter} steps.", last_iterate=(first, second))
    floor = 1e3 * tol
    step_ratios = [b / a for a, b in zip(distances, distances[1:]) if a > floor]
    cycle_ratios = [c / a for a, c in zip(distances, distances[2:]) if a > floor]
    empirical = max(cycle_ratios) if cycle_ratios else 0.0
    bound = quad.contraction_bound
    scale = max(first[0].sup_norm(), first[1].sup_norm())
    distance = max(float(np.max(np.abs(first[0].values - second[0].values))),
                   float(np.max(np.abs(first[1].values - second[1].values)))) / scale
    logger.info(f"Uniqueness probe: limit distance {distance:.3e}, empirical contraction {empirical:.4f} "
                f"against {bound:.4f}")
    return UniquenessReport(distance, tuple(distances), tuple(step_ratios), tuple(cycle_ratios), empirical, bound,
                            empirical <= bound + 0.05, k + 1)


__all__ = [
    "ExponentQuad", "Envelope", "ConeShapes", "ConeSpec", "SystemResult", "SystemResidual", "UniquenessReport",
    "cone_shapes", "cone_for_regime", "choose_cone_constants", "cone_margin", "picard_iterate",
    "system_residual", "prototype_constants", "prepare_cone", "solve_system", "uniqueness_probe",
]
