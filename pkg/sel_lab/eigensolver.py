"""
eigensolver.py - Principal eigenpair (mu, phi > 0) of F with Dirichlet data by inverse power iteration.
"""
import typing
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

import nb_log

from sel_lab.exceptions import ContractViolation, IterationError
from sel_lab.geometry import Grid, GridFunction
from sel_lab.operators import OperatorSpec, discretize
from sel_lab.scalar_solver import solve_dirichlet

logger = nb_log.get_logger('sel_lab.eigensolver')


@dataclass(frozen=True, eq=False)
class EigenPair:
    mu: float
    phi: GridFunction
    iterations: int
    residual_norm: float
    mu_history: typing.Tuple[float, ...] = field(default=(), repr=False)

    def summary(self, bounds: "EigenBounds" = None) -> dict:
        out = {"mu": self.mu, "iterations": self.iterations, "residual_norm": self.residual_norm}
        if bounds is not None:
            out.update(bounds._asdict())
        return out


EigenBounds = namedtuple("EigenBounds", ["C_low", "C_high", "hopf_c"])


def eigen_residual(spec: OperatorSpec, grid: Grid, mu: float, phi: GridFunction) -> float:
    """max |F(phi) - mu phi| / max(1, mu) over the interior nodes."""
    diff = discretize(spec, grid, phi).interior - mu * phi.interior
    return float(np.max(np.abs(diff)) / max(1.0, abs(mu)))


def principal_eigenpair(
    spec: OperatorSpec,
    grid: Grid,
    tol: float = 1e-8,
    max_iter: int = 200,
    phi0: GridFunction = None,
) -> EigenPair:
    """
    Inverse power iteration: solve F(w) = phi_k, set mu_k = max(phi_k / w), phi_{k+1} = w / |w|_inf.
    Stops when successive mu differ by less than ``tol`` and the eigen residual is below ``tol``.

    Example:
        >>> g = build_grid(Domain.interval(0, math.pi), 400)
        >>> round(principal_eigenpair(OperatorSpec.laplacian(), g).mu, 3)
        1.0
    """
    if grid.n_interior == 0:
        raise ContractViolation("The grid has no interior nodes.")
    if tol <= 0:
        raise ContractViolation(f"tol must be > 0, got {tol}.")
    inner_tol = min(tol * 1e-2, 1e-10)
    phi = phi0 if phi0 is not None else grid.from_delta(lambda d: d)
    if np.any(phi.interior <= 0):
        raise ContractViolation("The initial iterate must be positive at the interior nodes.")
    phi = phi.scaled(1.0 / phi.sup_norm())
    history = []
    mu_prev = None
    w = None
    for k in range(max_iter):
        w = solve_dirichlet(spec, grid, phi, tol=inner_tol, u0=w)
        if np.any(w.interior <= 0):
            raise IterationError(f"Inverse iteration lost positivity at step {k + 1}.", last_iterate=phi)
        mu = float(np.max(phi.interior / w.interior))
        history.append(mu)
        phi = w.scaled(1.0 / w.sup_norm())
        residual = eigen_residual(spec, grid, mu, phi)
        logger.debug(f"inverse iteration {k + 1}: mu {mu:.12g}, residual {residual:.3e}")
        if mu_prev is not None and abs(mu - mu_prev) < tol and residual < tol:
            logger.info(f"Principal eigenvalue {mu:.10g} after {k + 1} iterations (residual {residual:.3e})")
            return EigenPair(mu, phi, k + 1, residual, tuple(history))
        mu_prev = mu
    raise IterationError(f"Inverse iteration did not converge in {max_iter} steps "
                         f"(last mu {history[-1]:.10g}).", last_iterate=phi, mu=history[-1])


def verify_eigen_bounds(pair: EigenPair, grid: Grid) -> EigenBounds:
    """
    Envelope constants C_low delta <= phi <= C_high delta over the interior nodes, and the smallest
    boundary difference quotient phi/delta over the boundary-adjacent nodes.
    """
    mask = grid.interior_mask
    ratio = pair.phi.values[mask] / grid.delta[mask]
    adjacent = grid.boundary_adjacent
    hopf = pair.phi.values[adjacent] / grid.delta[adjacent]
    return EigenBounds(float(ratio.min()), float(ratio.max()), float(hopf.min()))
