import numpy as np
import pytest

from sel_lab.barrier import (
    BarrierSolution,
    barrier_margin,
    composite_barrier,
    find_barrier_scale,
    log_barrier,
    solve_barrier_ode,
    verify_barrier_properties,
)
from sel_lab.exceptions import PreconditionError, RangeError
from sel_lab.geometry import Domain, build_grid


@pytest.fixture(scope="module")
def linear_profile():
    return solve_barrier_ode(0.3, 0.4, 0.5)


def test_linear_regime_profile(linear_profile):
    sol = linear_profile
    props = sol.props
    assert sol.regime == "linear"
    assert props.positive_ok and props.concave_ok and props.con_ok and props.hp_bound_ok
    assert props.linear_bounds_ok
    assert 0 < props.c1 <= props.c2
    assert props.log_rate_ok is None
    assert sol.H[-1] == pytest.approx(1.0)
    assert sol(0.0) == 0.0
    assert sol(0.5) == pytest.approx(1.0)
    assert sol(sol.tc / 10) == pytest.approx(sol.H[0] / 10)


def test_log_regime_profile():
    sol = solve_barrier_ode(0.6, 0.4, 0.5)
    assert sol.regime == "log"
    assert sol.props.log_rate_ok
    assert sol.props.hp_bound_ok
    assert sol.props.theta_expected == pytest.approx(1 / 1.4)


def test_power_regime_profile():
    sol = solve_barrier_ode(1.2, 0.5, 0.5)
    assert sol.regime == "power"
    assert sol.theta == pytest.approx(0.8 / 1.5)
    assert sol.props.concave_ok and sol.props.con_ok
    assert sol.props.linear_bounds_ok is None


def test_range_and_preconditions(linear_profile):
    with pytest.raises(RangeError):
        linear_profile(np.array([0.1, 0.7]))
    with pytest.raises(RangeError):
        linear_profile(-0.1)
    with pytest.raises(PreconditionError):
        solve_barrier_ode(2.5, 0.4)
    with pytest.raises(PreconditionError):
        solve_barrier_ode(0.3, -0.1)
    with pytest.raises(PreconditionError):
        solve_barrier_ode(0.3, 0.4, 1.5)


def test_profile_csv(linear_profile):
    lines = linear_profile.to_csv().splitlines()
    assert lines[0] == "t,H,Hp"
    assert len(lines) == 2001
    assert linear_profile.summary()["regime"] == "linear"


def test_composite_barrier(linear_profile):
    g = build_grid(Domain.interval(0, 1), 21)
    phi = g.from_delta(lambda d: d)
    w = composite_barrier(2.0, 1.0, linear_profile, phi)
    assert w.values[0] == 0.0
    assert w.values[10] == pytest.approx(2.0)
    with pytest.raises(RangeError):
        composite_barrier(1.0, 2.0, linear_profile, phi)
    with pytest.raises(PreconditionError):
        composite_barrier(-1.0, 1.0, linear_profile, phi)


def test_log_barriers():
    g = build_grid(Domain.interval(0, 1), 11)
    phi = g.from_delta(lambda d: d)
    assert log_barrier("phi_logpow", phi, 10.0, 0.0).values[3] == pytest.approx(0.3)
    assert log_barrier("phi_logpow", phi, 10.0, 1.0).values[5] == pytest.approx(0.5 * np.log(20.0))
    flat = log_barrier("logpow_only", phi, 100.0, 0.0)
    assert np.all(flat.values == 1.0)
    assert log_barrier("logpow_only", phi, 100.0, -1.0).values[0] == 0.0
    with pytest.raises(PreconditionError):
        log_barrier("logpow_only", phi, 100.0, 0.5)
    with pytest.raises(PreconditionError):
        log_barrier("phi_loglog", phi, 5.0, 0.0)
    with pytest.raises(PreconditionError):
        log_barrier("phi_logpow", phi, 1.0, 0.0)
    with pytest.raises(PreconditionError):
        log_barrier("phi_cubic", phi, 10.0, 0.0)


def test_barrier_scale_search(lap):
    g = build_grid(Domain.interval(0, 1), 41)
    x = g.nodes[:, 0]
    shape = g.function(x * (1 - x) / 2)

    def ones(w):
        return g.function(np.ones(g.n_nodes))

    m, margin = find_barrier_scale(lap, g, shape, ones, "super", start=0.25, tol=1e-9)
    assert m == pytest.approx(1.0)
    assert margin.interior.min() == pytest.approx(0.0, abs=1e-8)
    m, _ = find_barrier_scale(lap, g, shape, ones, "sub", start=4.0, tol=1e-9)
    assert m == pytest.approx(1.0)
    with pytest.raises(PreconditionError):
        barrier_margin(lap, g, shape, ones(shape), "both")


def test_bounds_fail_when_the_ratio_blows_up():
    ts = np.geomspace(1e-6, 0.5, 400)
    root = BarrierSolution(0.1, 0.0, 0.5, ts, 2 * np.sqrt(ts), 1 / np.sqrt(ts), 0.0, 1e-6)
    props = verify_barrier_properties(root)
    assert props.positive_ok and props.concave_ok and props.con_ok
    assert not props.hp_bound_ok
    assert not props.linear_bounds_ok


def test_bounds_hold_for_a_linear_profile():
    ts = np.geomspace(1e-6, 0.5, 400)
    props = verify_barrier_properties(BarrierSolution(0.3, 0.4, 0.5, ts, 2 * ts - ts ** 2, 2 - 2 * ts, 0.0, 1e-6))
    assert props.hp_bound_ok
    assert props.linear_bounds_ok
    assert props.c2 == pytest.approx(2.0, rel=1e-5)
