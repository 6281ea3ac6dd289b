import math

import numpy as np
import pytest

from sel_lab.classifier import ExponentQuad
from sel_lab.exceptions import (
    InfeasibleConeError,
    PositivityBreachError,
    PreconditionError,
    UnsupportedRegimeError,
)
from sel_lab.geometry import Domain, build_grid
from sel_lab.system_solver import (
    Envelope,
    choose_cone_constants,
    cone_for_regime,
    cone_margin,
    cone_shapes,
    solve_system,
    system_residual,
    uniqueness_probe,
)

SYMMETRIC = ExponentQuad(0.25, 0.25, 0.25, 0.25)


@pytest.fixture(scope="module")
def small_grid():
    return build_grid(Domain.interval(0.0, 1.0), 101, "boundary_graded", 1.0)


def test_envelope():
    env = Envelope(2.0, 0.5, 1.0, math.e)
    assert env(np.array([1.0]))[0] == pytest.approx(2.0)
    assert env.scaled(3.0).coef == 6.0
    assert Envelope()(np.array([0.25]))[0] == 0.25


def test_cone_constants_meet_inequalities():
    m1, M1, m2, M2 = choose_cone_constants(0.5, 2.0, SYMMETRIC)
    e = 0.25 / 1.25
    assert M1 ** e * m2 <= 0.5
    assert 2.0 <= M1 * m2 ** e
    assert M2 ** e * m1 <= 0.5
    assert 2.0 <= M2 * m1 ** e
    with pytest.raises(InfeasibleConeError):
        choose_cone_constants(0.5, 2.0, ExponentQuad(0.0, 2.0, 2.0, 0.0))
    with pytest.raises(PreconditionError):
        choose_cone_constants(2.0, 0.5, SYMMETRIC)


def test_cone_margin_shrinks_with_det():
    wide = cone_margin(0.5, 2.0, SYMMETRIC)
    narrow = cone_margin(0.5, 2.0, ExponentQuad(0.0, 0.95, 1.0, 0.0))
    assert 0 < narrow < wide


def test_cone_shapes_by_case():
    assert cone_shapes(SYMMETRIC).subcase == "III"
    first = cone_shapes(ExponentQuad(0.1, 0.3, 1.2, 0.2))
    assert first.subcase == "I"
    assert first.v_lower.power == pytest.approx(0.8 / 1.2)
    mirrored = cone_shapes(ExponentQuad(1.5, 0.5, 0.2, 0.2))
    assert mirrored.swapped
    third = cone_shapes(ExponentQuad(2.0, 0.5, 0.5, 2.0))
    assert third.subcase == "case3"
    with pytest.raises(UnsupportedRegimeError):
        cone_shapes(ExponentQuad(0.0, 2.0, 0.5, 0.0))


def test_cone_for_regime(small_grid):
    cone = cone_for_regime(SYMMETRIC, 0.5, 2.0, small_grid)
    assert cone.subcase == "III"
    assert cone.is_ordered(small_grid)
    u, v = cone.midpoint(small_grid)
    assert cone.contains(small_grid, u, v) == (True, True)
    assert cone.to_dict()["m1"] == cone.m1


def test_symmetric_system(lap, small_grid):
    res = solve_system(lap, small_grid, SYMMETRIC)
    assert res.converged
    assert res.picard_iterations <= 60
    assert all(res.stayed_in_cone)
    assert np.all(res.u.interior > 0)
    assert np.allclose(res.u.values, res.v.values, rtol=1e-6, atol=1e-12)
    again = system_residual(lap, small_grid, res.u, res.v, SYMMETRIC)
    assert again.residual_u == pytest.approx(res.residual_u)
    summary = res.summary()
    assert summary["all_in_cone"]
    assert summary["cone"]["subcase"] == "III"


def test_swap_exchanges_components(lap, small_grid):
    res = solve_system(lap, small_grid, SYMMETRIC)
    flipped = res.swap()
    assert flipped.swapped
    assert flipped.u is res.v
    assert flipped.residual_u == res.residual_v
    assert not flipped.swap().swapped


def test_residual_needs_positive_iterates(lap, small_grid):
    zero = small_grid.function(np.zeros(small_grid.n_nodes))
    with pytest.raises(PositivityBreachError):
        system_residual(lap, small_grid, zero, zero, SYMMETRIC)


def test_no_existence_case_is_refused(lap, small_grid):
    with pytest.raises(UnsupportedRegimeError) as info:
        solve_system(lap, small_grid, ExponentQuad(0.0, 2.0, 0.5, 0.0))
    assert info.value.exit_code == 4


def test_uniqueness_needs_a_condition(lap, small_grid):
    with pytest.raises(PreconditionError):
        uniqueness_probe(lap, small_grid, ExponentQuad(0.8, 0.5, 0.8, 0.5))


@pytest.mark.slow
def test_uniqueness_probe(lap, small_grid):
    report = uniqueness_probe(lap, small_grid, SYMMETRIC, 1e-8)
    assert report.distance <= 1e-7
    assert report.within_bound
    assert report.bound == pytest.approx(0.04)


@pytest.mark.slow
def test_mirrored_case_is_solved_through_the_swap(lap, small_grid):
    quad = ExponentQuad(1.5, 0.5, 0.2, 0.2)
    res = solve_system(lap, small_grid, quad)
    assert res.swapped
    direct = solve_system(lap, small_grid, quad.swap())
    assert np.allclose(res.u.values, direct.v.values, rtol=1e-8)
    check = system_residual(lap, small_grid, res.u, res.v, quad)
    assert max(check.residual_u, check.residual_v) < 1e-5


def test_cone_constants_near_degenerate_det():
    margins = []
    for qr in (0.5, 0.9, 0.99):
        quad = ExponentQuad(0.0, qr, qr, 0.0)
        m1, M1, m2, M2 = choose_cone_constants(0.5, 2.0, quad)
        assert M1 ** qr * m2 <= 0.5 * (1 + 1e-9)
        assert 2.0 <= M1 * m2 ** qr * (1 + 1e-9)
        margins.append(cone_margin(0.5, 2.0, quad))
    assert margins[0] > margins[1] > margins[2] > 0
    assert margins[2] < 0.01
    with pytest.raises(InfeasibleConeError):
        choose_cone_constants(0.5, 2.0, ExponentQuad(0.0, 0.9999, 0.9999, 0.0))
    with pytest.raises(InfeasibleConeError):
        choose_cone_constants(0.5, 2.0, ExponentQuad(0.0, 1.0, 1.0, 0.0))
