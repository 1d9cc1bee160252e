"""Discrete Fuchsian Laplacian with Dirichlet boundary.

In log coordinates the operator (x1 d/dx1)^2 + (d/dx2)^2 is the flat
Laplacian, so the discretization is the classical symmetric positive
definite 5-point stencil on the uniform log grid, with homogeneous
Dirichlet data on all four edges (stretched-manifold boundary, transverse
sides, and the truncation edge standing in for the conical point).

The discrete Dirichlet form a(u, v) = <A u, v> (quadrature pairing) equals
the edge-difference sum exactly, by summation by parts; this makes the
variational machinery downstream exactly consistent with the stencil.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .domain import GridFunction, LogGrid, integrate_values
from .errors import GridMismatchError, SolverError


@dataclass
class SolveInfo:
    iterations: int
    residual: float


class DiscreteOperator:
    """5-point Dirichlet Laplacian on a :class:`LogGrid`.

    Instances are immutable after construction and safe to share across
    threads; the sparse interior matrix and eigenpair are cached lazily.
    """

    def __init__(self, grid: LogGrid):
        self.grid = grid
        self.hr = grid.hr
        self.hy = grid.hy
        self._interior_csr = None
        self._eigen_cache: dict[float, "EigenResult"] = {}

    # -- stencil ------------------------------------------------------------

    def matvec(self, arr: np.ndarray) -> np.ndarray:
        """Apply the stencil to a full (nr, ny) array; output is zero on the
        boundary and ignores boundary entries of the input."""
        cr = 1.0 / self.hr ** 2
        cy = 1.0 / self.hy ** 2
        out = np.zeros_like(arr)
        a = arr.copy()
        a[0, :] = a[-1, :] = 0.0
        a[:, 0] = a[:, -1] = 0.0
        out[1:-1, 1:-1] = (
            cr * (2.0 * a[1:-1, 1:-1] - a[:-2, 1:-1] - a[2:, 1:-1])
            + cy * (2.0 * a[1:-1, 1:-1] - a[1:-1, :-2] - a[1:-1, 2:])
        )
        return out

    def interior_matrix(self) -> sp.csr_matrix:
        """Sparse CSR of the stencil restricted to interior unknowns."""
        if self._interior_csr is None:
            ni, nj = self.grid.nr - 2, self.grid.ny - 2
            cr = 1.0 / self.hr ** 2
            cy = 1.0 / self.hy ** 2
            Ir = sp.diags([2.0 * cr * np.ones(ni), -cr * np.ones(ni - 1), -cr * np.ones(ni - 1)],
                          [0, -1, 1])
            Iy = sp.diags([2.0 * cy * np.ones(nj), -cy * np.ones(nj - 1), -cy * np.ones(nj - 1)],
                          [0, -1, 1])
            self._interior_csr = (sp.kron(Ir, sp.eye(nj)) + sp.kron(sp.eye(ni), Iy)).tocsr()
        return self._interior_csr


@dataclass(frozen=True)
class EigenResult:
    lam1: float
    eigenfunction: GridFunction
    residual: float
    iterations: int


def apply(A: DiscreteOperator, u: GridFunction) -> GridFunction:
    if not A.grid.same_as(u.grid):
        raise GridMismatchError("operator and grid function live on different grids")
    return GridFunction(A.grid, A.matvec(u.values))


def energy_product(A: DiscreteOperator, u: GridFunction, v: GridFunction) -> float:
    """Discrete Dirichlet form a(u, v), computed as the exact edge-difference
    sum (summation-by-parts twin of <A u, v>)."""
    return energy_product_values(A, u.values, v.values)


def energy_product_values(A: DiscreteOperator, u: np.ndarray, v: np.ndarray) -> float:
    hr, hy = A.hr, A.hy
    dur = np.diff(u, axis=0) / hr
    dvr = np.diff(v, axis=0) / hr
    duy = np.diff(u, axis=1) / hy
    dvy = np.diff(v, axis=1) / hy
    return float(hr * hy * (np.sum(dur * dvr) + np.sum(duy * dvy)))


def l2_product(grid: LogGrid, u: np.ndarray, v: np.ndarray) -> float:
    """Quadrature L^2(d mu) pairing of two value arrays."""
    return integrate_values(grid, u * v)


def solve(A: DiscreteOperator, b: GridFunction, tol: float = 1e-10,
          x0: np.ndarray | None = None, max_iter: int | None = None,
          return_info: bool = False):
    """Conjugate-gradient solve of A u = b to relative residual ``tol``.

    Deterministic: fixed traversal order, no randomization.  Warm starts
    accept an ``x0`` value array.
    """
    if not A.grid.same_as(b.grid):
        raise GridMismatchError("operator and right-hand side on different grids")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not np.all(np.isfinite(b.values)):
        raise SolverError("right-hand side contains non-finite values")
    x, info = _cg(A, b.values, tol, x0, max_iter)
    u = GridFunction(A.grid, x, boundary_flag=True)
    return (u, info) if return_info else u


def _cg(A: DiscreteOperator, b: np.ndarray, tol: float,
        x0: np.ndarray | None = None, max_iter: int | None = None):
    bb = b.copy()
    bb[0, :] = bb[-1, :] = 0.0
    bb[:, 0] = bb[:, -1] = 0.0
    bnorm = float(np.sqrt(np.vdot(bb, bb).real))
    if bnorm == 0.0:
        return np.zeros_like(b), SolveInfo(0, 0.0)
    if max_iter is None:
        max_iter = 40 * max(A.grid.nr, A.grid.ny)
    x = np.zeros_like(bb) if x0 is None else x0.copy()
    r = bb - A.matvec(x)
    p = r.copy()
    rs = float(np.vdot(r, r).real)
    for it in range(1, max_iter + 1):
        Ap = A.matvec(p)
        alpha = rs / float(np.vdot(p, Ap).real)
        x += alpha * p
        r -= alpha * Ap
        rs_new = float(np.vdot(r, r).real)
        if np.sqrt(rs_new) <= tol * bnorm:
            return x, SolveInfo(it, float(np.sqrt(rs_new) / bnorm))
        p = r + (rs_new / rs) * p
        rs = rs_new
    raise SolverError(
        f"CG did not reach tol {tol:g} in {max_iter} iterations "
        f"(relative residual {np.sqrt(rs) / bnorm:.3e})"
    )


def riesz_gradient(A: DiscreteOperator, residual: GridFunction, tol: float = 1e-10,
                   x0: np.ndarray | None = None, return_info: bool = False):
    """Energy-space representative g with A g = residual: the steepest
    descent direction of a functional whose dual-space gradient is
    ``residual``."""
    return solve(A, residual, tol=tol, x0=x0, return_info=return_info)


def first_eigenvalue(A: DiscreteOperator, tol: float = 1e-9) -> EigenResult:
    """Smallest Dirichlet eigenpair by inverse power iteration with CG
    inner solves.

    Starts from the positive tensor sine mode (the natural first-mode guess
    on a rectangle), so convergence is immediate on product grids and still
    robust otherwise.  The residual reported is |A v - lam v| / |v| in the
    quadrature L^2 norm.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if tol in A._eigen_cache:
        return A._eigen_cache[tol]
    g = A.grid
    r0, r1 = g.domain.r_interval
    y0, y1 = g.domain.y_interval
    sr = np.sin(np.pi * (g.r_nodes - r0) / (r1 - r0))
    sy = np.sin(np.pi * (g.y_nodes - y0) / (y1 - y0))
    v = np.outer(sr, sy)
    v[0, :] = v[-1, :] = 0.0
    v[:, 0] = v[:, -1] = 0.0
    v /= np.sqrt(l2_product(g, v, v))
    lam = energy_product_values(A, v, v)
    for it in range(1, 501):
        Av = A.matvec(v)
        lam = l2_product(g, Av, v) / l2_product(g, v, v)
        res = Av - lam * v
        resnorm = np.sqrt(l2_product(g, res, res)) / np.sqrt(l2_product(g, v, v))
        if resnorm <= tol:
            if integrate_values(g, v) < 0:
                v = -v
            result = EigenResult(float(lam), GridFunction(g, v, boundary_flag=True),
                                 float(resnorm), it)
            A._eigen_cache[tol] = result
            return result
        inner_tol = max(1e-13, min(1e-10, 1e-3 * resnorm))
        w, _ = _cg(A, v, inner_tol, x0=v / lam)
        v = w / np.sqrt(l2_product(g, w, w))
    raise SolverError(f"inverse power iteration stalled at residual {resnorm:.3e}")
