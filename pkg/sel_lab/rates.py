"""
rates.py - Fit the boundary asymptotics of computed solutions and compare them with predicted rates.

Fits are weighted least squares in log coordinates, each node weighted by its share of
log(delta) so a graded mesh does not over-count the cells closest to the boundary.
Log-corrected models are fitted in two stages: the power is fixed at its predicted value
and only the log exponent is regressed.
"""
import math
import typing
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

import nb_log

from sel_lab.classifier import RateSpec
from sel_lab.exceptions import LayerError
from sel_lab.geometry import Grid, GridFunction
from sel_lab.sel_path import csv_text

logger = nb_log.get_logger('sel_lab.rates')

MIN_LAYER_POINTS = 8
R2_PASS = 0.99
PROBE_SLOPE_THRESHOLD = 0.02
PROBE_DECAY_MIN = 0.25


@dataclass(frozen=True)
class RateFit:
    model: str
    fitted_power: float
    fitted_logpow: float
    r_squared: float
    layer: typing.Tuple[float, float]
    n_points: int
    scale_A: float = math.e
    stage: str = "single"

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "fitted_power": self.fitted_power,
            "fitted_logpow": self.fitted_logpow,
            "r_squared": self.r_squared,
            "layer": list(self.layer),
            "n_points": self.n_points,
            "scale_A": self.scale_A,
            "stage": self.stage,
        }


def log_cell_weights(delta: np.ndarray) -> np.ndarray:
    """Width of each point's cell on the log(delta) axis; repeated delta values share their cell."""
    ld = np.log(delta)
    uniq, inverse, counts = np.unique(ld, return_inverse=True, return_counts=True)
    if len(uniq) == 1:
        return np.ones_like(ld)
    edges = np.concatenate([[uniq[0]], 0.5 * (uniq[1:] + uniq[:-1]), [uniq[-1]]])
    widths = np.diff(edges)
    widths[widths <= 0] = np.min(widths[widths > 0])
    return widths[inverse] / counts[inverse]


def weighted_linear_fit(x: np.ndarray, y: np.ndarray, w: np.ndarray) -> typing.Tuple[float, float, float, float]:
    """
    Weighted least-squares line y ~ c0 + c1 x. Returns (c0, c1, r_squared, ssr).
    """
    sw = np.sqrt(w)
    design = np.column_stack([np.ones_like(x), x]) * sw[:, None]
    coef, *_ = np.linalg.lstsq(design, y * sw, rcond=None)
    resid = y - (coef[0] + coef[1] * x)
    ssr = float(np.sum(w * resid ** 2))
    ybar = float(np.sum(w * y) / np.sum(w))
    sst = float(np.sum(w * (y - ybar) ** 2))
    r2 = 1.0 - ssr / sst if sst > 0 else (1.0 if ssr <= 1e-30 else 0.0)
    return float(coef[0]), float(coef[1]), float(min(max(r2, 0.0), 1.0)), ssr


def _log_coordinate(model: str, delta: np.ndarray, A: float) -> np.ndarray:
    if model == "loglog":
        return np.log(np.log(np.log(A / delta)))
    return np.log(np.log(A / delta))


def _scale_floor(model: str, delta_max: float) -> float:
    # log(A/delta) must stay > 0 (> 1 for loglog) on the layer
    return delta_max * (math.e ** 1.05 if model == "loglog" else 1.05)


def fit_log_exponent(
    delta: np.ndarray,
    values: np.ndarray,
    model: str,
    power: float,
    A: float,
    fit_scale: bool = False,
    weights: np.ndarray = None,
) -> typing.Tuple[float, float, float]:
    """
    Second stage of a log-corrected fit: regress log(values / delta^power) on the model's
    log coordinate. With ``fit_scale`` the scale A is chosen to minimise the residual.
    Returns (log exponent, r_squared, A).
    """
    w = log_cell_weights(delta) if weights is None else weights
    y = np.log(values) - power * np.log(delta)

    def run(scale: float):
        return weighted_linear_fit(_log_coordinate(model, delta, scale), y, w)

    if fit_scale:
        lo = math.log(_scale_floor(model, float(delta.max())))
        res = minimize_scalar(lambda la: run(math.exp(la))[3], bounds=(lo, lo + math.log(1e8)), method="bounded",
                              options={"xatol": 1e-10})
        A = math.exp(float(res.x))
    _, slope, r2, _ = run(A)
    return slope, r2, A


def fit_rate_arrays(
    delta: np.ndarray,
    values: np.ndarray,
    model: RateSpec,
    layer: typing.Tuple[float, float] = None,
    fit_scale: bool = False,
) -> RateFit:
    """
    Fit the rate of nodal ``values`` against boundary distances ``delta``.
    The default layer is delta in [2 h, 0.1 max delta] with h the smallest positive delta.
    """
    delta = np.asarray(delta, dtype=float)
    values = np.asarray(values, dtype=float)
    positive = delta > 0
    if not positive.any():
        raise LayerError("No interior node has a positive boundary distance.")
    if layer is None:
        layer = (2.0 * float(delta[positive].min()), 0.1 * float(delta.max()))
    lo, hi = layer
    sel = (delta >= lo * (1 - 1e-12)) & (delta <= hi * (1 + 1e-12)) & positive
    n_points = int(sel.sum())
    if n_points < MIN_LAYER_POINTS:
        raise LayerError(f"Layer [{lo:.3e}, {hi:.3e}] holds {n_points} nodes; at least {MIN_LAYER_POINTS} are needed.",
                         n_points=n_points)
    d, u = delta[sel], values[sel]
    if np.any(u <= 0) or not np.all(np.isfinite(u)):
        raise LayerError("The solution must be finite and positive on the fitting layer.")
    w = log_cell_weights(d)
    A = model.scale_A
    if model.model in ("linear", "power"):
        _, slope, r2, _ = weighted_linear_fit(np.log(d), np.log(u), w)
        fit = RateFit(model.model, slope, 0.0, r2, (lo, hi), n_points, A, "single")
        if model.model == "power" and model.logpow != 0:
            theta, r2_log, A = fit_log_exponent(d, u, "linear_logpow", model.power, A, fit_scale, w)
            fit = RateFit(model.model, slope, theta, r2_log, (lo, hi), n_points, A, "two-stage")
        return fit
    power = 0.0 if model.model == "power_of_log" else model.power
    theta, r2, A = fit_log_exponent(d, u, model.model, power, A, fit_scale, w)
    return RateFit(model.model, power, theta, r2, (lo, hi), n_points, A, "two-stage")


def fit_rate(
    u: GridFunction,
    grid: Grid,
    model: RateSpec,
    layer: typing.Tuple[float, float] = None,
    fit_scale: bool = False,
) -> RateFit:
    """
    Fit the boundary rate of ``u`` with the log-coordinates of ``model``.

    Example:
        >>> g = build_grid(Domain.interval(0, 1), 401, "boundary_graded", 1.0)
        >>> fit_rate(g.from_delta(lambda d: d ** 0.6), g, RateSpec("power", 0.6)).fitted_power
        0.6...
    """
    mask = grid.interior_mask
    fit = fit_rate_arrays(grid.delta[mask], u.values[mask], model, layer, fit_scale)
    logger.debug(f"Rate fit {fit.model}: power {fit.fitted_power:.5f}, logpow {fit.fitted_logpow:.5f}, "
                 f"R2 {fit.r_squared:.6f} on {fit.n_points} nodes")
    return fit


RateComparison = namedtuple(
    "RateComparison", ["passed", "power_delta", "logpow_delta", "r_squared_ok", "model_match", "diagnostic"]
)


def compare(fit: RateFit, predicted: RateSpec, tol_power: float = 0.05, tol_logpow: float = 0.05) -> RateComparison:
    """Pass iff the models match, each compared exponent lies within tolerance and R2 >= 0.99."""
    if fit.model != predicted.model:
        return RateComparison(False, math.nan, math.nan, fit.r_squared >= R2_PASS, False,
                              f"model mismatch: fitted {fit.model} against predicted {predicted.model}")
    power_delta = fit.fitted_power - predicted.power
    logpow_delta = fit.fitted_logpow - predicted.logpow
    checks_logpow = predicted.model in ("linear_logpow", "power_of_log", "loglog") or (
        predicted.model == "power" and predicted.logpow != 0
    )
    ok_power = abs(power_delta) <= tol_power
    ok_logpow = abs(logpow_delta) <= tol_logpow if checks_logpow else True
    r2_ok = fit.r_squared >= R2_PASS
    passed = ok_power and ok_logpow and r2_ok
    problems = []
    if not ok_power:
        problems.append(f"power off by {power_delta:+.4f} (tol {tol_power})")
    if not ok_logpow:
        problems.append(f"log power off by {logpow_delta:+.4f} (tol {tol_logpow})")
    if not r2_ok:
        problems.append(f"R2 {fit.r_squared:.4f} < {R2_PASS}")
    return RateComparison(passed, power_delta, logpow_delta if checks_logpow else 0.0, r2_ok, True,
                          "; ".join(problems) or "ok")


ProbeResult = namedtuple("ProbeResult", ["finite", "magnitude", "ts", "quotients", "slope", "decay"])


def _ray_samples(t_nodes: np.ndarray, doublings: int) -> np.ndarray:
    """Indices of the ray nodes nearest to t = 2h, 4h, 8h, ... up to half the ray."""
    h = float(t_nodes[t_nodes > 0].min())
    t_max = 0.5 * float(t_nodes.max())
    targets = 2.0 * h * 2.0 ** np.arange(doublings + 1)
    targets = targets[targets <= t_max]
    picked = np.unique([int(np.argmin(np.abs(t_nodes - t))) for t in targets])
    return picked[t_nodes[picked] > 0]


def normal_derivative_probe(u: GridFunction, grid: Grid, threshold: float = PROBE_SLOPE_THRESHOLD,
                            doublings: int = 10, decay_min: float = PROBE_DECAY_MIN) -> ProbeResult:
    """
    One-sided difference quotients u(x0 + t n) / t along an inward normal for t near 2h, 4h, 8h, ...,
    sampled at mesh nodes so no interpolation error enters the quotients.

    The quotients stay bounded when either their log-slope against log t is at least -threshold,
    or their increments |dq| / dlog t shrink toward the boundary like t**decay with
    decay >= decay_min, i.e. q = A + B t**decay + ... converges to A. A linear correction gives
    decay = 1 on any mesh. Log growth gives a slope below -threshold together with a decay close
    to zero, so it reads as divergent.
    ``magnitude`` is the quotient closest to the boundary.
    """
    t_nodes, idx = grid.normal_ray()
    picked = _ray_samples(t_nodes, doublings)
    if len(picked) < 3:
        raise LayerError(f"The normal ray holds too few doublings of h = {t_nodes[t_nodes > 0].min():.3e}; "
                         f"refine the grid.")
    ts = t_nodes[picked]
    quotients = u.values[idx[picked]] / ts
    if np.any(quotients <= 0):
        return ProbeResult(False, float(quotients[0]), ts, quotients, math.nan, math.nan)
    log_t = np.log(ts)
    slope = float(np.polyfit(log_t, np.log(quotients), 1)[0])
    steps = np.abs(np.diff(quotients)) / np.diff(log_t)
    mid_t = 0.5 * (log_t[1:] + log_t[:-1])
    moving = steps > 1e-12 * float(np.max(quotients))
    if moving.sum() >= 2:
        decay = float(np.polyfit(mid_t[moving], np.log(steps[moving]), 1)[0])
    else:
        decay = math.inf
    finite = slope >= -threshold or decay >= decay_min
    return ProbeResult(bool(finite), float(quotients[0]), ts, quotients, slope, decay)


RATE_TABLE_COLUMNS = ("label", "model", "fitted_power", "fitted_logpow", "r_squared", "predicted_power",
                      "predicted_logpow", "power_delta", "logpow_delta", "passed", "diagnostic")


def rate_table(rows: typing.Iterable[typing.Tuple[str, RateFit, RateSpec, RateComparison]]) -> str:
    """CSV comparison table, one row per (label, fit, prediction, comparison)."""
    out = []
    for label, fit, pred, cmp in rows:
        out.append([label, fit.model, fit.fitted_power, fit.fitted_logpow, fit.r_squared, pred.power,
                    pred.logpow, cmp.power_delta, cmp.logpow_delta, cmp.passed, cmp.diagnostic])
    return csv_text(RATE_TABLE_COLUMNS, out)
