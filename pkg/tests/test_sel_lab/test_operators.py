import numpy as np
import pytest

from sel_lab.exceptions import ContractViolation, GridError
from sel_lab.geometry import Domain, build_grid
from sel_lab.operators import (
    HessianData,
    OperatorSpec,
    check_subsolution_sum,
    discretize,
    evaluate_F,
    extremal_coefficients,
    linearize,
    pucci,
    pucci_minus,
    pucci_plus,
    structure_sandwich,
)


def _symmetric_stack(rng, n=200):
    raw = rng.normal(size=(n, 2, 2))
    return 0.5 * (raw + np.swapaxes(raw, 1, 2))


def test_pucci_values():
    assert pucci_plus(np.diag([1.0, -1.0]), 1.0, 2.0) == pytest.approx(1.0)
    assert pucci_minus(np.diag([1.0, -1.0]), 1.0, 2.0) == pytest.approx(-1.0)
    assert pucci_plus(np.diag([1.0, -2.0]), 1.0, 2.0) == pytest.approx(3.0)
    assert pucci(np.diag([1.0, -2.0]), 1.0, 2.0, "minus") == pytest.approx(0.0)
    with pytest.raises(ContractViolation):
        pucci(np.eye(2), 1.0, 2.0, "both")


def test_pucci_rejects_bad_input():
    with pytest.raises(ContractViolation):
        pucci_plus(np.array([[0.0, 1.0], [0.0, 0.0]]), 1.0, 1.0)
    with pytest.raises(ContractViolation):
        pucci_plus(np.eye(2), 2.0, 1.0)
    with pytest.raises(ContractViolation):
        OperatorSpec(lam=1.0, Lam=1.0, Gamma=0.1, drift=(0.3, 0.0))
    with pytest.raises(ContractViolation):
        OperatorSpec(gamma=0.1, zeroth=0.5)


def test_pucci_axioms_on_random_matrices():
    rng = np.random.default_rng(7)
    M, N = _symmetric_stack(rng), _symmetric_stack(rng)
    lam, Lam = 1.0, 2.0
    assert np.max(np.abs(pucci_plus(-M, lam, Lam) + pucci_minus(M, lam, Lam))) <= 1e-12
    assert np.all(pucci_plus(M + N, lam, Lam) <= pucci_plus(M, lam, Lam) + pucci_plus(N, lam, Lam) + 1e-12)
    for t in (0.0, 0.5, 3.5):
        assert np.allclose(pucci_plus(t * M, lam, Lam), t * pucci_plus(M, lam, Lam), atol=1e-12)
    assert np.all(pucci_minus(M, lam, Lam) <= pucci_plus(M, lam, Lam) + 1e-12)


def test_extremal_coefficients_attain_pucci():
    rng = np.random.default_rng(11)
    M = _symmetric_stack(rng, 50)
    for sign in ("plus", "minus"):
        A = extremal_coefficients(M, 0.5, 3.0, sign)
        value = -np.einsum("nij,nji->n", A, M)
        assert np.allclose(value, pucci(M, 0.5, 3.0, sign), atol=1e-12)
        eig = np.linalg.eigvalsh(A)
        assert eig.min() >= 0.5 - 1e-12 and eig.max() <= 3.0 + 1e-12


def test_laplacian_pointwise():
    h = HessianData([[-2.0]], [0.0], 5.0, [0.5])
    assert evaluate_F(OperatorSpec.laplacian(), h) == pytest.approx(2.0)
    with pytest.raises(ContractViolation):
        HessianData([[1.0]], [0.0, 1.0], 0.0, [0.5])


def test_structure_sandwich_holds():
    rng = np.random.default_rng(3)
    spec = OperatorSpec(lam=1.0, Lam=2.0, Gamma=0.5, gamma=0.3, drift=(0.3, 0.2), zeroth=0.2)
    M, N = _symmetric_stack(rng), _symmetric_stack(rng)
    for k in range(len(M)):
        first = HessianData(M[k], rng.normal(size=2), float(rng.normal()), rng.uniform(size=2))
        second = HessianData(N[k], rng.normal(size=2), float(rng.normal()), rng.uniform(size=2))
        lower, diff, upper = structure_sandwich(spec, first, second)
        assert lower - 1e-12 <= diff <= upper + 1e-12


def test_discretize_minus_second_derivative(unit, lap):
    g = build_grid(unit, 51, "boundary_graded", 1.0)
    x = g.nodes[:, 0]
    u = g.function(x * (1 - x))
    F = discretize(lap, g, u)
    assert np.allclose(F.interior, 2.0, atol=1e-8)
    assert np.all(F.values[~g.interior_mask] == 0.0)


def test_linearize_reproduces_discretize(unit):
    g = build_grid(unit, 41)
    spec = OperatorSpec(lam=1.0, Lam=3.0, pucci_sign="minus", Gamma=1.0, gamma=1.0, drift=(0.7,), zeroth=0.4)
    x = g.nodes[:, 0]
    u = g.function(np.sin(np.pi * x) + 0.3 * np.sin(3 * np.pi * x))
    L = linearize(spec, g, u)
    assert L.shape == (g.n_interior, g.n_nodes)
    assert np.allclose(L @ u.values, discretize(spec, g, u).interior, atol=1e-9)


def test_linearize_on_disk():
    g = build_grid(Domain.disk(1.0), 12)
    spec = OperatorSpec(lam=1.0, Lam=2.0)
    u = g.from_delta(lambda d: d * (2 - d))
    assert np.allclose(linearize(spec, g, u) @ u.values, discretize(spec, g, u).interior, atol=1e-8)


def test_grid_mismatch(unit, lap):
    g1, g2 = build_grid(unit, 11), build_grid(unit, 13)
    with pytest.raises(GridError):
        discretize(lap, g1, g2.from_delta(lambda d: d))


def test_subsolution_sum_of_concave_pair(unit):
    g = build_grid(unit, 41)
    spec = OperatorSpec(lam=1.0, Lam=2.0, pucci_sign="plus")
    x = g.nodes[:, 0]
    u = g.function(x * (1 - x))
    v = g.function(np.sin(np.pi * x))
    report = check_subsolution_sum(u, v, None, None, spec)
    assert report.holds
    assert report.min_margin >= -1e-9
    assert report.rhs_margin is None
