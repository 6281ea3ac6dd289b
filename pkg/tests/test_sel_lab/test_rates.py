import math

import numpy as np
import pytest

from sel_lab.classifier import RateSpec
from sel_lab.exceptions import LayerError
from sel_lab.geometry import Domain, build_grid
from sel_lab.rates import (
    PROBE_SLOPE_THRESHOLD,
    RATE_TABLE_COLUMNS,
    compare,
    fit_rate,
    fit_rate_arrays,
    log_cell_weights,
    normal_derivative_probe,
    rate_table,
    weighted_linear_fit,
)


def test_weighted_line_is_exact_on_a_line():
    x = np.linspace(-3.0, 1.0, 30)
    c0, c1, r2, ssr = weighted_linear_fit(x, 2.0 - 0.5 * x, np.ones_like(x))
    assert c0 == pytest.approx(2.0)
    assert c1 == pytest.approx(-0.5)
    assert r2 == pytest.approx(1.0)
    assert ssr == pytest.approx(0.0, abs=1e-20)


def test_log_cell_weights_cover_the_log_range():
    d = np.array([1e-4, 1e-3, 1e-3, 1e-2, 1e-1])
    w = log_cell_weights(d)
    assert np.all(w > 0)
    assert w.sum() == pytest.approx(math.log(1e-1) - math.log(1e-4))
    assert w[1] == pytest.approx(w[2])


def test_power_fit(graded_grid):
    u = graded_grid.from_delta(lambda d: d ** 0.6)
    fit = fit_rate(u, graded_grid, RateSpec("power", 0.6))
    assert fit.fitted_power == pytest.approx(0.6, abs=1e-8)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.stage == "single"
    assert fit.n_points >= 8


def test_linear_logpow_fit_with_known_scale(graded_grid):
    u = graded_grid.from_delta(lambda d: d * np.log(math.e / d) ** (2.0 / 3.0))
    fit = fit_rate(u, graded_grid, RateSpec("linear_logpow", 1.0, 2.0 / 3.0))
    assert fit.fitted_logpow == pytest.approx(2.0 / 3.0, abs=1e-8)
    assert fit.stage == "two-stage"


def test_fitted_scale_recovers_the_log_power(graded_grid):
    u = graded_grid.from_delta(lambda d: d * np.log(5.0 / d) ** 0.5)
    fit = fit_rate(u, graded_grid, RateSpec("linear_logpow", 1.0, 0.5), fit_scale=True)
    assert fit.fitted_logpow == pytest.approx(0.5, abs=1e-3)
    assert fit.scale_A == pytest.approx(5.0, rel=1e-2)


def test_pure_log_and_loglog_fits(graded_grid):
    u = graded_grid.from_delta(lambda d: np.log(math.e / d) ** -0.5)
    fit = fit_rate(u, graded_grid, RateSpec("power_of_log", 0.0, -0.5))
    assert fit.fitted_power == 0.0
    assert fit.fitted_logpow == pytest.approx(-0.5, abs=1e-8)
    v = graded_grid.from_delta(lambda d: d * np.log(np.log(10.0 / d)) ** 0.5)
    fit = fit_rate(v, graded_grid, RateSpec("loglog", 1.0, 0.5, 10.0))
    assert fit.fitted_logpow == pytest.approx(0.5, abs=1e-8)


def test_power_with_log_correction_is_two_stage(graded_grid):
    u = graded_grid.from_delta(lambda d: d ** 0.5 * np.log(math.e / d) ** -0.25)
    fit = fit_rate(u, graded_grid, RateSpec("power", 0.5, -0.25))
    assert fit.stage == "two-stage"
    assert fit.fitted_logpow == pytest.approx(-0.25, abs=1e-8)


def test_layer_errors():
    g = build_grid(Domain.interval(0, 1), 9)
    with pytest.raises(LayerError):
        fit_rate(g.from_delta(lambda d: d), g, RateSpec("linear"))
    d = np.geomspace(1e-4, 1e-1, 40)
    with pytest.raises(LayerError):
        fit_rate_arrays(d, -d, RateSpec("linear"), layer=(1e-4, 1e-1))


def test_compare():
    fit = fit_rate_arrays(np.geomspace(1e-4, 1.0, 60), np.geomspace(1e-4, 1.0, 60) ** 0.38,
                          RateSpec("power", 0.375), layer=(1e-4, 1.0))
    ok = compare(fit, RateSpec("power", 0.375), tol_power=0.02)
    assert ok.passed and ok.model_match and ok.diagnostic == "ok"
    off = compare(fit, RateSpec("power", 0.3), tol_power=0.02)
    assert not off.passed
    assert "power off by" in off.diagnostic
    mismatch = compare(fit, RateSpec("linear"))
    assert not mismatch.passed and not mismatch.model_match


def test_probe_separates_linear_from_sublinear(graded_grid):
    linear = normal_derivative_probe(graded_grid.from_delta(lambda d: d * (1 - d)), graded_grid)
    assert linear.finite
    assert linear.magnitude == pytest.approx(1.0, rel=1e-2)
    root = normal_derivative_probe(graded_grid.from_delta(np.sqrt), graded_grid)
    assert not root.finite
    assert root.slope == pytest.approx(-0.5, abs=0.05)


def test_linear_correction_stays_finite_on_uniform_grid(unit):
    grid = build_grid(unit, 401)
    x = grid.nodes[:, 0]
    probe = normal_derivative_probe(grid.function(x * (1 - x) / 2), grid)
    assert probe.finite
    assert probe.magnitude == pytest.approx(0.4975)
    assert probe.decay == pytest.approx(1.0, abs=0.05)
    assert np.all(np.diff(probe.ts) > 0)


def test_log_growth_reads_as_divergent(graded_grid):
    probe = normal_derivative_probe(graded_grid.from_delta(lambda d: d * np.sqrt(np.log(1 / d))), graded_grid)
    assert not probe.finite
    assert probe.slope < -PROBE_SLOPE_THRESHOLD
    assert probe.decay < 0.25


def test_rate_table():
    d = np.geomspace(1e-4, 1e-1, 40)
    fit = fit_rate_arrays(d, d, RateSpec("linear"), layer=(1e-4, 1e-1))
    pred = RateSpec("linear")
    text = rate_table([("u", fit, pred, compare(fit, pred))])
    header, row = text.splitlines()
    assert header.split(",") == list(RATE_TABLE_COLUMNS)
    assert row.startswith("u,linear,")
    assert row.endswith(",1,ok")
