"""
operators.py - Pucci extremal operators, the structured operator family and its monotone discretisation.

The family is F(M, p, r, x) = P(M) + b(x).p - c(x) r with P one of the Pucci extremal
operators P+ / P- for ellipticity bounds lam <= Lam, a drift |b| <= Gamma and 0 <= c <= gamma.
It is positively 1-homogeneous in (M, p, r) and satisfies the structure condition

    P-(M-N) - Gamma|p-q| - gamma (r-s)+  <=  F(M,p,r,x) - F(N,q,s,x)  <=  P+(M-N) + Gamma|p-q| + gamma (s-r)+
"""
import typing
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

import nb_log

from sel_lab.exceptions import ContractViolation, GridError
from sel_lab.geometry import Grid, GridFunction

logger = nb_log.get_logger('sel_lab.operators')

SIGNS = ("plus", "minus")
_SYM_RTOL = 1e-12

FieldLike = typing.Union[None, float, typing.Sequence[float], typing.Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class OperatorSpec:
    """
    Constants and coefficient fields of one operator of the family.

    ``drift`` is None, a constant vector, or a callable mapping an (N, d) array of
    coordinates to an (N, d) array; ``zeroth`` is a constant or a callable returning (N,).
    ``convex`` records whether the operator is convex in (M, p, r); it is metadata only.
    """

    lam: float = 1.0
    Lam: float = 1.0
    pucci_sign: str = "plus"
    Gamma: float = 0.0
    gamma: float = 0.0
    drift: FieldLike = field(default=None, compare=False)
    zeroth: FieldLike = field(default=0.0, compare=False)
    convex: typing.Optional[bool] = None

    def __post_init__(self):
        if not 0 < self.lam <= self.Lam:
            raise ContractViolation(f"Ellipticity needs 0 < lam <= Lam, got lam={self.lam}, Lam={self.Lam}.")
        if self.pucci_sign not in SIGNS:
            raise ContractViolation(f"pucci_sign must be one of {SIGNS}, got {self.pucci_sign!r}.")
        if self.Gamma < 0 or self.gamma < 0:
            raise ContractViolation(f"Gamma and gamma must be >= 0, got {self.Gamma}, {self.gamma}.")
        if self.drift is not None and not callable(self.drift):
            object.__setattr__(self, "drift", tuple(float(b) for b in np.atleast_1d(self.drift)))
            norm = float(np.linalg.norm(self.drift))
            if norm > self.Gamma * (1 + 1e-12):
                raise ContractViolation(f"|drift| = {norm} exceeds Gamma = {self.Gamma}.")
        if not callable(self.zeroth):
            object.__setattr__(self, "zeroth", float(self.zeroth))
            if not 0 <= self.zeroth <= self.gamma * (1 + 1e-12):
                raise ContractViolation(f"Zeroth-order coefficient {self.zeroth} must lie in [0, gamma={self.gamma}].")

    @classmethod
    def laplacian(cls) -> "OperatorSpec":
        """F = -Laplacian: lam = Lam = 1, Gamma = gamma = 0."""
        return cls(lam=1.0, Lam=1.0, pucci_sign="plus", Gamma=0.0, gamma=0.0, convex=True)

    @classmethod
    def from_dict(cls, data: dict) -> "OperatorSpec":
        return cls(**data)

    def to_dict(self) -> dict:
        return {
            "lam": self.lam,
            "Lam": self.Lam,
            "pucci_sign": self.pucci_sign,
            "Gamma": self.Gamma,
            "gamma": self.gamma,
            "drift": None if self.drift is None or callable(self.drift) else list(self.drift),
            "zeroth": None if callable(self.zeroth) else self.zeroth,
        }

    @property
    def is_linear(self) -> bool:
        return self.lam == self.Lam

    def drift_at(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        if self.drift is None:
            return np.zeros_like(points, dtype=float)
        if callable(self.drift):
            b = np.asarray(self.drift(points), dtype=float).reshape(points.shape)
        else:
            if len(self.drift) != points.shape[1]:
                raise ContractViolation(f"Drift has {len(self.drift)} components in dimension {points.shape[1]}.")
            b = np.broadcast_to(np.asarray(self.drift, dtype=float), points.shape).copy()
        norms = np.linalg.norm(b, axis=1)
        if np.any(norms > self.Gamma * (1 + 1e-12)):
            raise ContractViolation(f"sup |drift| = {norms.max()} exceeds Gamma = {self.Gamma} on the grid.")
        return b

    def zeroth_at(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        if callable(self.zeroth):
            c = np.asarray(self.zeroth(points), dtype=float).reshape(len(points))
        else:
            c = np.full(len(points), self.zeroth)
        if np.any(c < 0) or np.any(c > self.gamma * (1 + 1e-12)):
            raise ContractViolation(f"Zeroth-order coefficient leaves [0, {self.gamma}] on the grid "
                                    f"(range [{c.min()}, {c.max()}]).")
        return c


@dataclass(frozen=True, eq=False)
class HessianData:
    matrix: np.ndarray
    gradient: np.ndarray
    value: float
    location: np.ndarray

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        _check_symmetric(m)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "gradient", np.atleast_1d(np.asarray(self.gradient, dtype=float)))
        object.__setattr__(self, "location", np.atleast_1d(np.asarray(self.location, dtype=float)))
        object.__setattr__(self, "value", float(self.value))
        if self.gradient.shape != (m.shape[0],):
            raise ContractViolation(f"Gradient of length {self.gradient.size} does not match a {m.shape} Hessian.")


def _as_matrix_stack(M) -> np.ndarray:
    arr = np.asarray(M, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim < 2 or arr.shape[-1] != arr.shape[-2]:
        raise ContractViolation(f"Expected a square matrix or a stack of them, got shape {arr.shape}.")
    return arr


def _check_symmetric(arr: np.ndarray):
    asym = np.abs(arr - np.swapaxes(arr, -1, -2))
    scale = max(1.0, float(np.max(np.abs(arr)))) if arr.size else 1.0
    if asym.size and asym.max() > _SYM_RTOL * scale:
        raise ContractViolation(f"Matrix is not symmetric (asymmetry {asym.max():.3e}).")


def _check_bounds(lam: float, Lam: float):
    if not 0 < lam <= Lam:
        raise ContractViolation(f"Pucci bounds need 0 < lambda <= Lambda, got {lam}, {Lam}.")


def _unwrap(out: np.ndarray) -> typing.Union[float, np.ndarray]:
    return float(out) if np.ndim(out) == 0 else out


def pucci_plus(M, lam: float, Lam: float) -> typing.Union[float, np.ndarray]:
    """
    P+(M) = sup over lam <= A <= Lam of -Tr(AM) = -lam * (sum of positive eigenvalues) - Lam * (sum of negative ones).
    Accepts a scalar, a d x d matrix, or a stack (..., d, d).

    Example:
        >>> pucci_plus(np.diag([1.0, -1.0]), 1.0, 2.0)
        1.0
    """
    _check_bounds(lam, Lam)
    arr = _as_matrix_stack(M)
    _check_symmetric(arr)
    w = np.linalg.eigvalsh(arr)
    out = -lam * np.where(w > 0, w, 0.0).sum(axis=-1) - Lam * np.where(w < 0, w, 0.0).sum(axis=-1)
    return _unwrap(out)


def pucci_minus(M, lam: float, Lam: float) -> typing.Union[float, np.ndarray]:
    """P-(M) = inf over lam <= A <= Lam of -Tr(AM); equals -P+(-M)."""
    _check_bounds(lam, Lam)
    arr = _as_matrix_stack(M)
    _check_symmetric(arr)
    w = np.linalg.eigvalsh(arr)
    out = -Lam * np.where(w > 0, w, 0.0).sum(axis=-1) - lam * np.where(w < 0, w, 0.0).sum(axis=-1)
    return _unwrap(out)


def pucci(M, lam: float, Lam: float, sign: str = "plus"):
    if sign == "plus":
        return pucci_plus(M, lam, Lam)
    if sign == "minus":
        return pucci_minus(M, lam, Lam)
    raise ContractViolation(f"sign must be one of {SIGNS}, got {sign!r}.")


def extremal_coefficients(M, lam: float, Lam: float, sign: str = "plus") -> np.ndarray:
    """
    The coefficient matrix A (spectrum in [lam, Lam]) attaining the Pucci extremum: -Tr(AM) = P(M).
    Eigenvalues of M that are > 0 get lam under P+ and Lam under P-; negative ones the other bound.
    """
    _check_bounds(lam, Lam)
    arr = _as_matrix_stack(M)
    _check_symmetric(arr)
    w, Q = np.linalg.eigh(arr)
    pos, neg = (lam, Lam) if sign == "plus" else (Lam, lam)
    a = np.where(w > 0, pos, neg)
    return np.einsum("...ik,...k,...jk->...ij", Q, a, Q)


def evaluate_F(spec: OperatorSpec, h: HessianData) -> float:
    """
    Pointwise value F(M, p, r, x) = P(M) + b(x).p - c(x) r.

    Example:
        >>> evaluate_F(OperatorSpec.laplacian(), HessianData([[-2.0]], [0.0], 5.0, [0.5]))
        2.0
    """
    p_val = pucci(h.matrix, spec.lam, spec.Lam, spec.pucci_sign)
    b = spec.drift_at(h.location[None, :])[0]
    if b.shape != h.gradient.shape:
        raise ContractViolation(f"Drift dimension {b.size} does not match gradient dimension {h.gradient.size}.")
    c = spec.zeroth_at(h.location[None, :])[0]
    return float(p_val + b @ h.gradient - c * h.value)


def structure_sandwich(spec: OperatorSpec, first: HessianData, second: HessianData) -> typing.Tuple[float, float, float]:
    """
    (lower, F(first) - F(second), upper) of the structure condition at ``first.location``.
    """
    diff = first.matrix - second.matrix
    dp = float(np.linalg.norm(first.gradient - second.gradient))
    dr = first.value - second.value
    lower = pucci_minus(diff, spec.lam, spec.Lam) - spec.Gamma * dp - spec.gamma * max(dr, 0.0)
    upper = pucci_plus(diff, spec.lam, spec.Lam) + spec.Gamma * dp + spec.gamma * max(-dr, 0.0)
    second_here = HessianData(second.matrix, second.gradient, second.value, first.location)
    return lower, evaluate_F(spec, first) - evaluate_F(spec, second_here), upper


# Per-node ingredients of the discrete operator at the interior nodes.
_NodalTerms = namedtuple("_NodalTerms", ["hessians", "drift_parts", "zeroth", "values"])


def _check_grid(grid: Grid, u: GridFunction):
    if not grid.same_as(u.grid):
        raise GridError("GridFunction lives on a different grid.")


def _nodal_terms(spec: OperatorSpec, grid: Grid, u: GridFunction) -> _NodalTerms:
    _check_grid(grid, u)
    values = u.values
    hxx = grid.hxx @ values
    if grid.dim == 1:
        hessians = hxx[:, None, None]
    else:
        hxy, hyy = grid.hxy @ values, grid.hyy @ values
        hessians = np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2)
    points = grid.nodes[grid.interior_mask]
    b = spec.drift_at(points)
    drift_parts = []
    for direction in grid.directions:
        bk = np.sum(b * direction.frame, axis=1)
        drift_parts.append((bk, direction))
    return _NodalTerms(hessians, drift_parts, spec.zeroth_at(points), values[grid.interior_mask])


def discretize(spec: OperatorSpec, grid: Grid, u: GridFunction) -> GridFunction:
    """
    Residual field F(D2u, Du, u, x) at interior nodes (zero on the boundary).

    Second derivatives come from the grid's three-point / mixed stencils, first derivatives
    are one-sided against the drift: backward where b.e > 0, forward where b.e < 0.
    """
    terms = _nodal_terms(spec, grid, u)
    out = pucci(terms.hessians, spec.lam, spec.Lam, spec.pucci_sign)
    for bk, direction in terms.drift_parts:
        if np.any(bk != 0):
            upwind = np.where(bk > 0, direction.backward @ u.values, direction.forward @ u.values)
            out = out + bk * upwind
    out = out - terms.zeroth * terms.values
    full = np.zeros(grid.n_nodes)
    full[grid.interior_mask] = out
    return GridFunction(grid, full)


def linearize(spec: OperatorSpec, grid: Grid, u: GridFunction) -> sp.csr_matrix:
    """
    The linear operator L (rows: interior nodes, columns: all nodes) obtained by freezing the
    extremal coefficients and the upwind directions at ``u``. By 1-homogeneity L @ u.values
    reproduces discretize(spec, grid, u) at the interior nodes.
    """
    terms = _nodal_terms(spec, grid, u)
    A = extremal_coefficients(terms.hessians, spec.lam, spec.Lam, spec.pucci_sign)
    if grid.dim == 1:
        L = -(sp.diags(A[:, 0, 0]) @ grid.hxx)
    else:
        L = -(sp.diags(A[:, 0, 0]) @ grid.hxx + sp.diags(2.0 * A[:, 0, 1]) @ grid.hxy + sp.diags(A[:, 1, 1]) @ grid.hyy)
    for bk, direction in terms.drift_parts:
        if np.any(bk != 0):
            L = L + sp.diags(np.where(bk > 0, bk, 0.0)) @ direction.backward
            L = L + sp.diags(np.where(bk < 0, bk, 0.0)) @ direction.forward
    if np.any(terms.zeroth != 0):
        select = sp.csr_matrix(
            (np.ones(grid.n_interior), (np.arange(grid.n_interior), grid.interior_index)),
            shape=(grid.n_interior, grid.n_nodes),
        )
        L = L - sp.diags(terms.zeroth) @ select
    return sp.csr_matrix(L)


SubsolutionSumReport = namedtuple(
    "SubsolutionSumReport", ["margin", "min_margin", "rhs_margin", "min_rhs_margin", "holds"]
)


def check_subsolution_sum(
    u: GridFunction,
    v: GridFunction,
    f: typing.Optional[GridFunction],
    g: typing.Optional[GridFunction],
    specs: typing.Union[OperatorSpec, typing.Sequence[OperatorSpec]],
    tol: float = 1e-9,
) -> SubsolutionSumReport:
    """
    Discrete check that w = u + v is a subsolution when u, v are.

    ``specs`` is either one spec used for F, F1 and F2, or a triple (F, F1, F2).
    ``margin`` = F1(u) + F2(v) - F(u+v) per node; it is >= 0 wherever F(u+v) <= F1(u) + F2(v).
    When f and g are given, ``rhs_margin`` = (f + g) - F(u+v) certifies F(u+v) <= f + g.
    """
    if isinstance(specs, OperatorSpec):
        F = F1 = F2 = specs
    else:
        F, F1, F2 = specs
    grid = u.grid
    if not grid.same_as(v.grid):
        raise GridError("u and v live on different grids.")
    w = GridFunction(grid, u.values + v.values)
    Fw = discretize(F, grid, w).values
    margin_values = discretize(F1, grid, u).values + discretize(F2, grid, v).values - Fw
    margin_values[~grid.interior_mask] = 0.0
    margin = GridFunction(grid, margin_values)
    min_margin = float(margin_values[grid.interior_mask].min())
    rhs_margin, min_rhs = None, None
    if f is not None and g is not None:
        if not (grid.same_as(f.grid) and grid.same_as(g.grid)):
            raise GridError("Right-hand sides live on a different grid.")
        rhs_values = f.values + g.values - Fw
        rhs_values[~grid.interior_mask] = 0.0
        rhs_margin = GridFunction(grid, rhs_values)
        min_rhs = float(rhs_values[grid.interior_mask].min())
    holds = min_margin >= -tol and (min_rhs is None or min_rhs >= -tol)
    logger.debug(f"Subsolution sum check: min margin {min_margin:.3e}, min rhs margin {min_rhs}")
    return SubsolutionSumReport(margin, min_margin, rhs_margin, min_rhs, holds)
