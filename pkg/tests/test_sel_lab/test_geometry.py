import math

import numpy as np
import pytest

from sel_lab.exceptions import DomainError, GridError, ResolutionError
from sel_lab.geometry import Domain, GridFunction, build_grid, distance_to_boundary, grading_map


def test_domain_validation():
    with pytest.raises(DomainError):
        Domain.interval(1.0, 0.0)
    with pytest.raises(DomainError):
        Domain.disk(-1.0)
    with pytest.raises(DomainError):
        Domain("annulus", (1.0, 2.0))
    assert Domain.rectangle(3.0, 4.0).diameter == pytest.approx(5.0)
    assert Domain.disk(2.0).inradius == 2.0
    assert Domain.interval(-1.0, 3.0).inradius == 2.0


def test_distance_to_boundary():
    assert distance_to_boundary(Domain.rectangle(1, 2), (0.3, 1.0)) == pytest.approx(0.3)
    assert distance_to_boundary(Domain.interval(0, 1), 0.75) == pytest.approx(0.25)
    assert distance_to_boundary(Domain.disk(1.0), (0.6, 0.0)) == pytest.approx(0.4)
    assert distance_to_boundary(Domain.disk(1.0), (1.0, 0.0)) == 0.0
    with pytest.raises(DomainError):
        distance_to_boundary(Domain.interval(0, 1), 1.5)
    with pytest.raises(DomainError):
        distance_to_boundary(Domain.rectangle(1, 1), 0.5)


def test_grading_map_is_symmetric():
    s = np.linspace(0.0, 1.0, 11)
    g = grading_map(s, 1.0)
    assert float(grading_map(np.array([0.125]), 1.0)[0]) == pytest.approx(0.03125)
    assert np.allclose(g, g[::-1])
    assert np.allclose(grading_map(s, 0.0), np.minimum(s, 1 - s))


def test_uniform_interval_grid():
    g = build_grid(Domain.interval(0, 1), 9)
    assert g.delta[:3].tolist() == [0.0, 0.125, 0.25]
    assert g.n_interior == 7
    assert g.h_min == pytest.approx(0.125)
    assert g.boundary_adjacent.nonzero()[0].tolist() == [1, 7]
    assert g.hxx.shape == (7, 9)


def test_graded_grid_concentrates_nodes():
    uniform = build_grid(Domain.interval(0, 1), 101)
    graded = build_grid(Domain.interval(0, 1), 101, "boundary_graded", 2.0)
    assert graded.h_min < uniform.h_min / 10
    assert np.all(np.diff(graded.nodes[:, 0]) > 0)
    assert graded.nodes[-1, 0] == 1.0


def test_second_difference_is_exact_on_quadratics():
    g = build_grid(Domain.interval(0, 1), 41, "boundary_graded", 1.5)
    x = g.nodes[:, 0]
    assert np.allclose(g.hxx @ (x ** 2), 2.0, atol=1e-8)


def test_rectangle_hessian_of_quadratic():
    g = build_grid(Domain.rectangle(1.0, 2.0), (11, 21))
    x, y = g.nodes[:, 0], g.nodes[:, 1]
    u = x * x + 3 * x * y - y * y
    assert np.allclose(g.hxx @ u, 2.0, atol=1e-8)
    assert np.allclose(g.hxy @ u, 3.0, atol=1e-8)
    assert np.allclose(g.hyy @ u, -2.0, atol=1e-8)


def test_disk_grid():
    g = build_grid(Domain.disk(1.0), 16)
    assert g.delta[0] == 1.0
    assert g.interior_mask[0]
    assert np.all(g.delta[~g.interior_mask] == 0.0)
    t, idx = g.normal_ray()
    assert t[0] == 0.0
    assert np.all(np.diff(t) > 0)
    r = np.hypot(g.nodes[:, 0], g.nodes[:, 1])
    assert np.allclose(g.delta[g.interior_mask], 1.0 - r[g.interior_mask])


def test_resolution_errors():
    with pytest.raises(ResolutionError):
        build_grid(Domain.interval(0, 1), 4)
    with pytest.raises(DomainError):
        build_grid(Domain.interval(0, 1), 20, "chebyshev")
    with pytest.raises(DomainError):
        build_grid(Domain.interval(0, 1), 20, "boundary_graded", 5.0)
    for bad in (20.5, "abc", True, float("inf")):
        with pytest.raises(ResolutionError):
            build_grid(Domain.interval(0, 1), bad)
    assert build_grid(Domain.interval(0, 1), 20.0).n_nodes == 20


def test_grid_function_contract():
    g = build_grid(Domain.interval(0, 1), 9)
    with pytest.raises(GridError):
        GridFunction(g, np.zeros(5))
    u = g.from_delta(lambda d: d ** 2)
    assert u.values[0] == 0.0
    assert u.sup_norm() == pytest.approx(0.25)
    with pytest.raises(ValueError):
        u.values[1] = 3.0
    assert u.scaled(2.0).sup_norm() == pytest.approx(0.5)


def test_grid_csv_has_header():
    g = build_grid(Domain.interval(0, 1), 9)
    text = g.from_delta(lambda d: d).to_csv()
    lines = text.splitlines()
    assert lines[0] == "x,delta,interior,value"
    assert len(lines) == 10
    assert lines[1] == "0,0,0,0"
