import math

import numpy as np
import pytest

from sel_lab.eigensolver import eigen_residual, principal_eigenpair, verify_eigen_bounds
from sel_lab.exceptions import ContractViolation
from sel_lab.geometry import Domain, build_grid
from sel_lab.operators import OperatorSpec


def test_laplacian_on_zero_pi(lap, pi_grid):
    pair = principal_eigenpair(lap, pi_grid)
    assert pair.mu == pytest.approx(1.0, abs=1e-3)
    assert pair.phi.sup_norm() == pytest.approx(1.0)
    assert np.all(pair.phi.interior > 0)
    assert np.allclose(pair.phi.values, np.sin(pi_grid.nodes[:, 0]), atol=1e-3)
    assert eigen_residual(lap, pi_grid, pair.mu, pair.phi) < 1e-6
    assert pair.mu_history[-1] == pair.mu


def test_eigen_bounds(lap, pi_grid):
    pair = principal_eigenpair(lap, pi_grid)
    bounds = verify_eigen_bounds(pair, pi_grid)
    assert bounds.C_low >= 0.6
    assert bounds.C_high == pytest.approx(1.0, abs=1e-3)
    assert bounds.hopf_c > 0
    summary = pair.summary(bounds)
    assert set(summary) >= {"mu", "iterations", "C_low", "hopf_c"}


def test_pucci_eigenvalue_uses_upper_constant():
    spec = OperatorSpec(lam=1.0, Lam=2.0, pucci_sign="plus")
    g = build_grid(Domain.interval(0, 1), 201)
    pair = principal_eigenpair(spec, g)
    assert pair.mu == pytest.approx(2 * math.pi ** 2, rel=1e-3)


def test_contract(lap, pi_grid):
    with pytest.raises(ContractViolation):
        principal_eigenpair(lap, pi_grid, tol=0.0)
    with pytest.raises(ContractViolation):
        principal_eigenpair(lap, pi_grid, phi0=pi_grid.function(np.zeros(pi_grid.n_nodes)))


def test_pucci_eigenvalue_grows_with_upper_constant():
    g = build_grid(Domain.interval(0, 1), 201)
    mus = [principal_eigenpair(OperatorSpec(lam=1.0, Lam=Lam, pucci_sign="plus"), g).mu
           for Lam in (1.0, 1.5, 2.0, 3.0)]
    assert all(b >= a for a, b in zip(mus, mus[1:]))
    assert mus[-1] == pytest.approx(3 * mus[0], rel=1e-6)
