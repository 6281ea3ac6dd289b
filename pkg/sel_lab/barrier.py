"""
barrier.py - The barrier profile H'' = -t^-alpha H^-beta, H(0) = 0, and the barriers built from it.

The profile is shot backward from t = b with H(b) = 1; the slope H'(b) is bisected until
the profile extrapolated from the crossover tc reaches 0 at t = 0. Below tc the profile is
continued by its asymptotic form.
"""
import math
import typing
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator

import nb_log

from sel_lab.classifier import EQ_TOL
from sel_lab.exceptions import GridError, PreconditionError, RangeError, ShootingError, SingularityError
from sel_lab.geometry import Grid, GridFunction
from sel_lab.operators import OperatorSpec, discretize
from sel_lab.rates import fit_log_exponent
from sel_lab.sel_path import csv_text

logger = nb_log.get_logger('sel_lab.barrier')

BARRIER_KINDS = ("phi_logpow", "logpow_only", "phi_loglog")
MAX_SCALE_STEPS = 60
SETTLE_TOL = 0.05


def _regime(alpha: float, beta: float) -> str:
    total = alpha + beta
    if abs(total - 1.0) <= EQ_TOL:
        return "log"
    return "linear" if total < 1 else "power"


@dataclass(frozen=True)
class BarrierProps:
    positive_ok: bool
    concave_ok: bool
    con_ok: bool
    hp_bound_ok: bool
    C1: float
    linear_bounds_ok: typing.Optional[bool] = None
    c1: typing.Optional[float] = None
    c2: typing.Optional[float] = None
    log_rate_ok: typing.Optional[bool] = None
    theta_fit: typing.Optional[float] = None
    theta_expected: typing.Optional[float] = None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True, eq=False)
class BarrierSolution:
    alpha_ode: float
    beta_ode: float
    b: float
    ts: np.ndarray = field(repr=False)
    H: np.ndarray = field(repr=False)
    Hp: np.ndarray = field(repr=False)
    slope_b: float = 0.0
    tc: float = 0.0
    props: typing.Optional[BarrierProps] = None
    _interp: PchipInterpolator = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("ts", "H", "Hp"):
            getattr(self, name).setflags(write=False)
        object.__setattr__(self, "_interp", PchipInterpolator(self.ts, self.H, extrapolate=False))

    @property
    def regime(self) -> str:
        return _regime(self.alpha_ode, self.beta_ode)

    @property
    def theta(self) -> float:
        """Power of the profile at 0: H ~ t^theta."""
        if self.regime == "power":
            return (2 - self.alpha_ode) / (1 + self.beta_ode)
        return 1.0

    def _asymptotic(self, t: np.ndarray) -> np.ndarray:
        h0, tc = self.H[0], self.tc
        if self.regime == "linear":
            return h0 * t / tc
        if self.regime == "power":
            return h0 * (t / tc) ** self.theta
        kappa = 1.0 / (1.0 + self.beta_ode)
        return h0 * (t / tc) * (np.log(1.0 / t) / np.log(1.0 / tc)) ** kappa

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.b * (1 + 1e-12)):
            raise RangeError(f"H is tabulated on [0, {self.b}], got arguments in [{t.min()}, {t.max()}].")
        out = np.zeros_like(t)
        upper = t >= self.tc
        out[upper] = self._interp(np.minimum(t[upper], self.b))
        lower = (t > 0) & ~upper
        out[lower] = self._asymptotic(t[lower])
        return out

    def to_csv(self) -> str:
        return csv_text(("t", "H", "Hp"), zip(self.ts.tolist(), self.H.tolist(), self.Hp.tolist()))

    def summary(self) -> dict:
        return {
            "alpha_ode": self.alpha_ode,
            "beta_ode": self.beta_ode,
            "b": self.b,
            "tc": self.tc,
            "slope_b": self.slope_b,
            "regime": self.regime,
            "samples": len(self.ts),
            "props": self.props.to_dict() if self.props else None,
        }


class _Shooter:
    """Backward integration of (H, H') from t = b for a trial slope H'(b)."""

    logger = nb_log.get_logger('sel_lab.barrier._Shooter')

    def __init__(self, alpha: float, beta: float, b: float, tc: float, rtol: float = 1e-11):
        self.alpha, self.beta, self.b, self.tc, self.rtol = alpha, beta, b, tc, rtol
        regime = _regime(alpha, beta)
        if regime == "power":
            theta = (2 - alpha) / (1 + beta)
        elif regime == "log":
            theta = 1.0 - (1.0 / (1.0 + beta)) / math.log(1.0 / tc)
        else:
            theta = 1.0
        # H(tc) - tc H'(tc) / theta vanishes for the exact profile
        self.theta = theta

    def rhs(self, t, y):
        return [y[1], -t ** -self.alpha * max(y[0], 1e-300) ** -self.beta]

    def integrate(self, slope: float, t_eval: np.ndarray = None):
        def vanish(t, y):
            return y[0]

        vanish.terminal = True
        return solve_ivp(self.rhs, (self.b, self.tc), [1.0, slope], method="DOP853", rtol=self.rtol,
                         atol=1e-14, events=vanish, t_eval=t_eval)

    def miss(self, slope: float) -> float:
        sol = self.integrate(slope)
        if len(sol.t_events[0]):
            return -1.0 - float(sol.t_events[0][0])
        H, Hp = sol.y[0, -1], sol.y[1, -1]
        return float(H - self.tc * Hp / self.theta)

    def shoot(self, max_bisect: int = 200) -> float:
        lo, hi = 0.0, 2.0 / self.b
        g_lo = self.miss(lo)
        if g_lo <= 0:
            raise ShootingError(
                f"The profile with alpha={self.alpha}, beta={self.beta} vanishes before t = 0 even with "
                f"H'(b) = 0; shorten b = {self.b}.", alpha=self.alpha, beta=self.beta, b=self.b,
            )
        if self.miss(hi) >= 0:
            raise ShootingError(f"H'(b) = {hi} does not bracket the shooting slope.", b=self.b)
        for _ in range(max_bisect):
            mid = 0.5 * (lo + hi)
            if self.miss(mid) > 0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-15 * hi:
                break
        self.logger.debug(f"Shooting slope H'(b) in [{lo:.15g}, {hi:.15g}]")
        return lo


def solve_barrier_ode(alpha_ode: float, beta_ode: float, b: float = 0.5, n: int = 2000,
                      tc: float = None) -> BarrierSolution:
    """
    Solve H'' = -t^-alpha H^-beta on (0, b] with H(0) = 0, H(b) = 1 by shooting on H'(b).

    Args:
        n: number of log-spaced samples in [tc, b].
        tc: crossover below which the asymptotic form is used; defaults to 1e-6 * b.

    Example:
        >>> sol = solve_barrier_ode(0.3, 0.4, 0.5)
        >>> sol.props.linear_bounds_ok
        True
    """
    if not 0 < alpha_ode < 2:
        raise PreconditionError(f"The profile exponent alpha must lie in (0, 2), got {alpha_ode}.")
    if beta_ode < 0:
        raise PreconditionError(f"The profile exponent beta must be >= 0, got {beta_ode}.")
    if not 0 < b < 1:
        raise PreconditionError(f"The right endpoint b must lie in (0, 1), got {b}.")
    tc = 1e-6 * b if tc is None else tc
    shooter = _Shooter(alpha_ode, beta_ode, b, tc)
    slope = shooter.shoot()
    ts = np.geomspace(tc, b, n)
    ts[-1] = b
    sol = shooter.integrate(slope, t_eval=ts[::-1])
    if sol.y.shape[1] != n or np.any(sol.y[0] <= 0):
        raise SingularityError(f"The profile vanished at t = {sol.t[-1]:.3e} inside (0, b]; "
                               f"reduce the sample spacing or shorten b.", t=float(sol.t[-1]))
    H, Hp = sol.y[0][::-1].copy(), sol.y[1][::-1].copy()
    barrier = BarrierSolution(float(alpha_ode), float(beta_ode), float(b), ts, H, Hp, slope, tc)
    props = verify_barrier_properties(barrier)
    barrier = BarrierSolution(barrier.alpha_ode, barrier.beta_ode, barrier.b, ts, H, Hp, slope, tc, props)
    logger.info(f"Barrier profile alpha={alpha_ode}, beta={beta_ode}, b={b}: H'(b) = {slope:.10g}, "
                f"regime {barrier.regime}")
    return barrier


def _near_boundary(ts: np.ndarray) -> np.ndarray:
    """The smallest decade of samples, t <= 10 ts[0]."""
    return ts <= 10.0 * ts[0] * (1 + 1e-12)


def verify_barrier_properties(sol: BarrierSolution, tol: float = SETTLE_TOL) -> BarrierProps:
    """
    Check concavity, H > t H' and the bounds that must survive t -> 0.

    (hp) H' <= C1 t^-alpha H^-beta: over the smallest decade of samples the ratio
    H' t^alpha H^beta may not exceed its value at the top of the decade by more than ``tol``.
    Linear regime c1 t <= H <= c2 t: H/t settles over the smallest decade, max/min <= 1 + tol.
    """
    ts, H, Hp = sol.ts, sol.H, sol.Hp
    alpha, beta = sol.alpha_ode, sol.beta_ode
    positive = bool(np.all(H > 0) and np.all(Hp > 0))
    concave = bool(np.all(np.diff(Hp) < 0))
    con = bool(np.all(H > ts * Hp))
    near = _near_boundary(ts)
    ratio = Hp / (ts ** -alpha * H ** -beta)
    C1 = float(ratio.max())
    edge = ratio[near][-1]
    hp_ok = bool(np.all(np.isfinite(ratio)) and ratio[near].max() <= (1 + tol) * edge)
    props = dict(positive_ok=positive, concave_ok=concave, con_ok=con, hp_bound_ok=hp_ok, C1=C1)
    if alpha + beta < 1 - EQ_TOL:
        slopes = H / ts
        c1, c2 = float(slopes.min()), float(slopes.max())
        settled = slopes[near].max() <= (1 + tol) * slopes[near].min()
        props.update(linear_bounds_ok=bool(c1 > 0 and np.isfinite(c2) and settled), c1=c1, c2=c2)
    if abs(beta - (1 - alpha)) <= EQ_TOL:
        theta, _, _ = fit_log_exponent(ts[near], H[near], "linear_logpow", 1.0, 1.0, fit_scale=True)
        expected = 1.0 / (2 - alpha)
        props.update(log_rate_ok=bool(abs(theta - expected) <= 0.05 * expected), theta_fit=float(theta),
                     theta_expected=expected)
    return BarrierProps(**props)


def composite_barrier(m: float, c: float, sol: BarrierSolution, phi: GridFunction) -> GridFunction:
    """Nodewise m H(c phi)."""
    if m <= 0 or c <= 0:
        raise PreconditionError(f"Need m, c > 0, got m={m}, c={c}.")
    top = c * phi.sup_norm()
    if top > sol.b * (1 + 1e-12):
        raise RangeError(f"c max(phi) = {top} exceeds b = {sol.b}; shrink c or extend b.")
    return phi.with_values(m * sol(np.clip(c * phi.values, 0.0, sol.b)))


def log_barrier(kind: str, phi: GridFunction, A_or_B: float, exponent_b: float) -> GridFunction:
    """
    phi_logpow   phi log^b(A/phi)       needs log(A/phi) > 1
    logpow_only  log^b(B/phi)           needs log(B/phi) >= 2(1-b); boundary value 0 (b<0) or 1 (b=0)
    phi_loglog   phi log log(A/phi)     needs A > 6 diam and log(A/phi) > 1

    Example:
        >>> g = build_grid(Domain.interval(0, 1), 11)
        >>> log_barrier("phi_logpow", g.from_delta(lambda d: d), 10.0, 0.0).values[3]
        0.3
    """
    if kind not in BARRIER_KINDS:
        raise PreconditionError(f"Unknown barrier kind {kind!r}; expected one of {BARRIER_KINDS}.")
    values = phi.values
    positive = values > 0
    top = float(values.max())
    if kind == "phi_logpow":
        if not A_or_B > math.e * top:
            raise PreconditionError(f"phi log^b(A/phi) needs log(A/phi) > 1: A = {A_or_B} <= e max(phi) = "
                                    f"{math.e * top}.")
        out = np.zeros_like(values)
        out[positive] = values[positive] * np.log(A_or_B / values[positive]) ** exponent_b
        return phi.with_values(out)
    if kind == "phi_loglog":
        diam = phi.grid.domain.diameter
        if not A_or_B > 6 * diam:
            raise PreconditionError(f"phi log log(A/phi) needs A > 6 diam: A = {A_or_B}, diam = {diam}.")
        if not A_or_B > math.e * top:
            raise PreconditionError(f"phi log log(A/phi) needs log(A/phi) > 1: A = {A_or_B}, max(phi) = {top}.")
        out = np.zeros_like(values)
        out[positive] = values[positive] * np.log(np.log(A_or_B / values[positive]))
        return phi.with_values(out)
    needed = 2 * (1 - exponent_b)
    interior = phi.grid.interior_mask
    smallest_log = float(np.min(np.log(A_or_B / values[interior])))
    if smallest_log < needed:
        raise PreconditionError(f"log^b(B/phi) needs log(B/phi) >= 2(1-b) = {needed}; got {smallest_log} "
                                f"with B = {A_or_B}.")
    if exponent_b > 0:
        raise PreconditionError(f"log^b(B/phi) with b = {exponent_b} > 0 is unbounded at the boundary.")
    boundary_value = 1.0 if exponent_b == 0 else 0.0
    out = np.full_like(values, boundary_value)
    out[interior] = np.log(A_or_B / values[interior]) ** exponent_b
    return phi.with_values(out)


def barrier_margin(spec: OperatorSpec, grid: Grid, w: GridFunction, rhs: GridFunction, side: str) -> GridFunction:
    """
    side='sub':   rhs - F(w)   (>= 0 certifies a discrete subsolution)
    side='super': F(w) - rhs   (>= 0 certifies a discrete supersolution)
    Boundary nodes carry 0.
    """
    if not (grid.same_as(w.grid) and grid.same_as(rhs.grid)):
        raise GridError("Barrier and right-hand side must live on the same grid.")
    Fw = discretize(spec, grid, w).values
    if side == "sub":
        margin = rhs.values - Fw
    elif side == "super":
        margin = Fw - rhs.values
    else:
        raise PreconditionError(f"side must be 'sub' or 'super', got {side!r}.")
    margin = np.where(grid.interior_mask, margin, 0.0)
    return GridFunction(grid, margin)


def find_barrier_scale(
    spec: OperatorSpec,
    grid: Grid,
    shape: GridFunction,
    rhs_of: typing.Callable[[GridFunction], GridFunction],
    side: str,
    start: float = 1.0,
    tol: float = 0.0,
) -> typing.Tuple[float, GridFunction]:
    """
    Halve (sub) or double (super) the multiple m of ``shape`` until the margin of m * shape
    against rhs_of(m * shape) is >= -tol at every interior node.
    """
    factor = 0.5 if side == "sub" else 2.0
    m = start
    for step in range(MAX_SCALE_STEPS):
        w = shape.scaled(m)
        margin = barrier_margin(spec, grid, w, rhs_of(w), side)
        worst = float(margin.interior.min())
        logger.debug(f"{side} scale search step {step}: m = {m:.6g}, min margin {worst:.3e}")
        if worst >= -tol:
            return m, margin
        m *= factor
    raise PreconditionError(f"No {side}solution multiple found after {MAX_SCALE_STEPS} "
                            f"{'halvings' if side == 'sub' else 'doublings'} (last m = {m:.3e}).")
