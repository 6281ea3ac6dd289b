import math

import numpy as np
import pytest

from sel_lab.exceptions import ContractViolation, PreconditionError, UnsupportedRegimeError
from sel_lab.geometry import Domain, build_grid
from sel_lab.scalar_solver import (
    WeightSpec,
    blowup_probe,
    comparison_check,
    epsilon_schedule,
    integral_criterion,
    lower_bound_check,
    shooting_reference,
    solve_dirichlet,
    solve_scalar_singular,
    solve_weighted,
)


def test_epsilon_schedule():
    levels = epsilon_schedule()
    assert levels[0] == 1.0
    assert levels[-1] == 0.0
    assert all(a > b for a, b in zip(levels, levels[1:]))
    assert min(levels[:-1]) >= 1e-10
    assert epsilon_schedule(1.0, 0.5, 0.2) == (1.0, 0.5, 0.25, 0.0)
    with pytest.raises(ContractViolation):
        epsilon_schedule(1.0, 1.5)


def test_weight_forms(unit):
    free = WeightSpec("loglog_free", 3.0, 0.0)
    assert (free.q_w, free.a_w) == (1.0, 1.0)
    assert WeightSpec("power", 1.0, 2.0).a_w == 0.0
    with pytest.raises(ContractViolation):
        WeightSpec("exponential")
    with pytest.raises(ContractViolation):
        WeightSpec("power", -1.0)
    with pytest.raises(PreconditionError):
        WeightSpec("power_log", 1.0, 1.0, A_w=0.5).validate(unit)
    assert WeightSpec().scale(unit) == pytest.approx(math.e)
    assert WeightSpec("power_log", 1.5, 0.5).is_decreasing(unit)
    k = WeightSpec("power", 2.0).evaluate(np.array([0.5, 0.25]), unit)
    assert k.tolist() == pytest.approx([4.0, 16.0])


@pytest.mark.parametrize("form, q, a, expected", [
    ("power", 1.0, 0.0, "finite"),
    ("power", 2.5, 0.0, "infinite"),
    ("power", 2.0, 0.0, "infinite"),
    ("power_log", 2.0, 0.5, "infinite"),
    ("power_log", 2.0, 1.0, "infinite"),
    ("power_log", 2.0, 1.5, "finite"),
    ("loglog_free", 1.0, 1.0, "finite"),
])
def test_integral_criterion(form, q, a, expected):
    assert integral_criterion(WeightSpec(form, q, a)) == expected


def test_linear_problem_is_exact(lap):
    g = build_grid(Domain.interval(0, 1), 201)
    res = solve_scalar_singular(lap, g, 0.0, WeightSpec.constant())
    x = g.nodes[:, 0]
    assert res.converged
    assert res.epsilon_path == (0.0,)
    assert np.allclose(res.u.values, x * (1 - x) / 2, atol=1e-10)
    assert res.u.values[100] == pytest.approx(0.125)


def test_solve_dirichlet_matches(lap):
    g = build_grid(Domain.interval(0, 1), 101, "boundary_graded", 1.0)
    w = solve_dirichlet(lap, g, np.full(g.n_nodes, 2.0))
    x = g.nodes[:, 0]
    assert np.allclose(w.values, x * (1 - x), atol=1e-9)


def test_singular_solve_converges(lap, graded_grid):
    res = solve_scalar_singular(lap, graded_grid, 0.5, WeightSpec("power", 0.5))
    assert res.converged
    assert res.breach is None
    assert res.final_residual < 1e-8
    assert np.all(res.u.interior > 0)
    assert res.is_monotone_in_epsilon()
    assert lower_bound_check(res.u, graded_grid).ok
    summary = res.summary()
    assert summary["epsilon_path"][-1] == 0.0
    assert summary["sup_norm"] == pytest.approx(res.u.sup_norm())


def test_weight_shape_is_checked(lap, graded_grid):
    with pytest.raises(ContractViolation):
        solve_weighted(lap, graded_grid, 1.0, np.ones(3))
    with pytest.raises(ContractViolation):
        solve_weighted(lap, graded_grid, -1.0, np.ones(graded_grid.n_interior))


def test_divergent_weight_is_refused(lap, graded_grid):
    with pytest.raises(UnsupportedRegimeError) as info:
        solve_scalar_singular(lap, graded_grid, 0.5, WeightSpec("power", 2.0))
    assert info.value.exit_code == 4
    assert "q >= 2" in info.value.result


def test_divergent_weight_when_allowed(lap):
    g = build_grid(Domain.interval(0, 1), 101)
    res = solve_scalar_singular(lap, g, 0.0, WeightSpec("power", 2.0), allow_nonexistent=True)
    # one resolution shows no breach; the divergence only appears under refinement
    assert res.converged
    assert res.breach is None


def test_comparison_check(lap):
    g = build_grid(Domain.interval(0, 1), 51)
    u = g.function(g.nodes[:, 0] * (1 - g.nodes[:, 0]) / 2)
    report = comparison_check(lap, g, u.scaled(0.5), u.scaled(2.0), 0.0, WeightSpec.constant())
    assert report.holds
    assert report.first_violation is None
    assert report.warnings == ()
    assert report.sub_margin.interior.min() == pytest.approx(0.5, abs=1e-8)

    flipped = comparison_check(lap, g, u.scaled(2.0), u.scaled(0.5), 0.0, WeightSpec.constant())
    assert not flipped.holds
    assert flipped.first_violation == 1
    assert len(flipped.warnings) == 2


def test_lower_bound_check():
    g = build_grid(Domain.interval(0, 1), 101)
    assert lower_bound_check(g.from_delta(lambda d: d), g).c == pytest.approx(1.0)
    half = lower_bound_check(g.from_delta(lambda d: d / 2), g, "linear_logpow", 0.0)
    assert half.c == pytest.approx(0.5)
    assert half.A == pytest.approx(math.e)
    assert lower_bound_check(g.from_delta(lambda d: d), g, "loglog").A == pytest.approx(10.0)
    with pytest.raises(ContractViolation):
        lower_bound_check(g.from_delta(lambda d: d), g, "cubic")


def test_blowup_quotients_grow(lap):
    report = blowup_probe(lap, Domain.interval(0, 1), 0.0, WeightSpec("power", 2.0), ns=(50, 100, 200))
    assert report.unbounded_growth
    assert set(report.breaches) == {"divergence"}
    assert report.increments[1] >= 0.85 * report.increments[0]
    assert all(b > a for a, b in zip(report.layer_quotients, report.layer_quotients[1:]))
    assert all(b > a for a, b in zip(report.sup_norms, report.sup_norms[1:]))


def test_blowup_settles_for_admissible_weight(lap):
    report = blowup_probe(lap, Domain.interval(0, 1), 0.0, WeightSpec.constant(), ns=(50, 100, 200))
    assert not report.unbounded_growth
    assert report.breaches == (None, None, None)
    assert report.sup_norms[-1] == pytest.approx(0.125, abs=1e-5)


def test_shooting_reference_linear():
    x, u = shooting_reference(0.0, WeightSpec.constant(), n=1001)
    assert x[0] == 0.0 and x[-1] == 1.0
    assert np.allclose(u, x * (1 - x) / 2, atol=1e-7)


@pytest.mark.slow
def test_singular_solve_matches_shooting(lap):
    g = build_grid(Domain.interval(0, 1), 801)
    res = solve_scalar_singular(lap, g, 1.0, WeightSpec.constant())
    x, u = shooting_reference(1.0, WeightSpec.constant(), n=801)
    assert np.allclose(x, g.nodes[:, 0])
    assert np.max(np.abs(res.u.values - u)) < 1e-3 * np.max(u)


def test_refinement_is_consistent_at_shared_nodes(lap):
    unit = Domain.interval(0, 1)
    solves = [solve_scalar_singular(lap, build_grid(unit, n), 0.5, WeightSpec.constant()).u.values
              for n in (101, 201, 401)]
    coarse_gap = np.max(np.abs(solves[1][::2] - solves[0]))
    fine_gap = np.max(np.abs(solves[2][::2] - solves[1]))
    assert fine_gap < coarse_gap
    assert fine_gap < 1e-2 * solves[2].max()
