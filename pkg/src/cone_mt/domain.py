"""Stretched-cone geometry in log coordinates.

The cone carries the measure dx1/x1 dx2.  Under r = -ln(x1) this measure
becomes plain Lebesgue measure dr dy, the cone gradient (x1 d/dx1, d/dx2)
becomes (-d/dr, d/dy), and the degenerate Laplacian becomes the flat
Laplacian.  Everything downstream exploits this: grids are uniform tensor
grids in (r, y), quadrature is trapezoidal, and all the "cone-ness" lives
in the coordinate map and in closed-form weights.

Two domains are supported:

* ``BoundedStrip`` -- the stretched manifold [0,1) x (-1,1); its log image
  is the half-strip [0, inf) x (-1,1), truncated at r = r_max (the conical
  point sits at r = inf).
* ``FullCone`` -- the open quadrant x1 > 0; its log image is the whole
  plane, truncated to the square [-r_max, r_max]^2 centered at the log
  origin (0,0), i.e. at the cone point (x1, x2) = (1, 0).
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import GridMismatchError, NumericError


class DomainKind(IntEnum):
    BOUNDED_STRIP = 0
    FULL_CONE = 1


@dataclass(frozen=True)
class ConeDomain:
    """A truncated cone domain described in log coordinates."""

    kind: DomainKind
    r_max: float = 8.0

    def __post_init__(self):
        if not (math.isfinite(self.r_max) and self.r_max > 0):
            raise ValueError(f"r_max must be positive and finite, got {self.r_max}")

    @property
    def r_interval(self) -> tuple[float, float]:
        if self.kind == DomainKind.BOUNDED_STRIP:
            return (0.0, self.r_max)
        return (-self.r_max, self.r_max)

    @property
    def y_interval(self) -> tuple[float, float]:
        if self.kind == DomainKind.BOUNDED_STRIP:
            return (-1.0, 1.0)
        return (-self.r_max, self.r_max)


def bounded_strip(r_max: float = 8.0) -> ConeDomain:
    return ConeDomain(DomainKind.BOUNDED_STRIP, r_max)


def full_cone(r_max: float = 8.0) -> ConeDomain:
    return ConeDomain(DomainKind.FULL_CONE, r_max)


def to_log(x1: float, x2: float) -> tuple[float, float]:
    """Map cone coordinates to log coordinates (r, y) = (-ln x1, x2).

    The conical point x1 = 0 maps to r = +inf and is rejected.
    """
    if x1 <= 0:
        raise ValueError(f"x1 must be positive (conical point not representable), got {x1}")
    return (-math.log(x1), x2)


def from_log(r: float, y: float) -> tuple[float, float]:
    """Inverse of :func:`to_log`: (r, y) -> (e^{-r}, y)."""
    return (math.exp(-r), y)


@dataclass(frozen=True)
class LogGrid:
    """Uniform tensor grid on the log image of a :class:`ConeDomain`.

    Node (i, j) has log coordinates (r_i, y_j) with r_i = r_min + i*hr and
    y_j = y_min + j*hy; its cone coordinates are (e^{-r_i}, y_j).
    """

    domain: ConeDomain
    nr: int
    ny: int
    r_nodes: np.ndarray = field(init=False, repr=False, compare=False)
    y_nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.nr < 3 or self.ny < 3:
            raise ValueError(f"need nr, ny >= 3, got ({self.nr}, {self.ny})")
        r0, r1 = self.domain.r_interval
        y0, y1 = self.domain.y_interval
        object.__setattr__(self, "r_nodes", np.linspace(r0, r1, self.nr))
        object.__setattr__(self, "y_nodes", np.linspace(y0, y1, self.ny))
        self.r_nodes.flags.writeable = False
        self.y_nodes.flags.writeable = False

    @property
    def hr(self) -> float:
        r0, r1 = self.domain.r_interval
        return (r1 - r0) / (self.nr - 1)

    @property
    def hy(self) -> float:
        y0, y1 = self.domain.y_interval
        return (y1 - y0) / (self.ny - 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """(nr, ny) coordinate arrays R, Y with R[i, j] = r_i, Y[i, j] = y_j."""
        return np.meshgrid(self.r_nodes, self.y_nodes, indexing="ij")

    def quad_weights(self) -> np.ndarray:
        """Tensor trapezoid weights for the measure dr dy (== dx1/x1 dx2)."""
        wr = np.full(self.nr, self.hr)
        wr[0] = wr[-1] = 0.5 * self.hr
        wy = np.full(self.ny, self.hy)
        wy[0] = wy[-1] = 0.5 * self.hy
        return np.outer(wr, wy)

    def same_as(self, other: "LogGrid") -> bool:
        return (
            self.domain == other.domain and self.nr == other.nr and self.ny == other.ny
        )


@dataclass(frozen=True)
class GridFunction:
    """Nodal values of a function on a :class:`LogGrid`.

    ``values[i, j]`` is the function value at log node (r_i, y_j).  If
    ``boundary_flag`` is set the values vanish identically on all four grid
    edges (the Dirichlet trace on the stretched-manifold boundary and on the
    truncation edge).
    """

    grid: LogGrid
    values: np.ndarray
    boundary_flag: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.nr, self.grid.ny):
            raise GridMismatchError(
                f"values shape {vals.shape} does not match grid ({self.grid.nr}, {self.grid.ny})"
            )
        object.__setattr__(self, "values", vals)
        if self.boundary_flag:
            b = max(
                np.max(np.abs(vals[0, :])), np.max(np.abs(vals[-1, :])),
                np.max(np.abs(vals[:, 0])), np.max(np.abs(vals[:, -1])),
            )
            if b != 0.0:
                raise ValueError(
                    f"boundary_flag set but boundary values reach {b:g}; "
                    "use with_dirichlet() to zero the trace"
                )
        vals.flags.writeable = False

    @classmethod
    def from_callable(cls, grid: LogGrid, fn, dirichlet: bool = False) -> "GridFunction":
        """Sample ``fn(R, Y)`` (log coordinates, vectorized) on the grid."""
        rr, yy = grid.mesh()
        vals = np.asarray(fn(rr, yy), dtype=float)
        u = cls(grid, np.broadcast_to(vals, (grid.nr, grid.ny)).copy())
        return u.with_dirichlet() if dirichlet else u

    def with_values(self, values: np.ndarray, boundary_flag: bool | None = None) -> "GridFunction":
        flag = self.boundary_flag if boundary_flag is None else boundary_flag
        return GridFunction(self.grid, values, flag)

    def with_dirichlet(self) -> "GridFunction":
        """Copy with the trace on all four edges zeroed."""
        vals = self.values.copy()
        vals[0, :] = vals[-1, :] = 0.0
        vals[:, 0] = vals[:, -1] = 0.0
        return GridFunction(self.grid, vals, boundary_flag=True)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.values + other.values,
                            self.boundary_flag and other.boundary_flag)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.values - other.values,
                            self.boundary_flag and other.boundary_flag)

    def __mul__(self, c: float) -> "GridFunction":
        return GridFunction(self.grid, float(c) * self.values, self.boundary_flag)

    __rmul__ = __mul__


def _check_same_grid(u: GridFunction, v: GridFunction):
    if not u.grid.same_as(v.grid):
        raise GridMismatchError("grid functions live on different grids")


def log_pullback(u: GridFunction, gamma: float, n: int = 1) -> GridFunction:
    """Weighted pullback to log coordinates.

    Multiplies the sampled values by the row weight e^{-((n+1)/2 - gamma) r}.
    For the workhorse case n = 1, gamma = 1 the weight is identically 1 and
    the pullback is plain resampling, which is why the whole artifact can
    treat log-grid values and cone-function values interchangeably.
    """
    expo = (n + 1) / 2.0 - gamma
    if expo == 0.0:
        return u
    w = np.exp(-expo * u.grid.r_nodes)
    return GridFunction(u.grid, u.values * w[:, None])


def integrate(u: GridFunction) -> float:
    """Trapezoid approximation of the cone integral of u.

    In log coordinates this is the plain box integral of the nodal values,
    since dx1/x1 dx2 = dr dy.
    """
    if not np.all(np.isfinite(u.values)):
        raise NumericError("integrand contains NaN or Inf")
    return float(np.sum(u.grid.quad_weights() * u.values))


def integrate_values(grid: LogGrid, values: np.ndarray) -> float:
    """Trapezoid quadrature of a raw value array (internal fast path)."""
    return float(np.sum(grid.quad_weights() * values))


def cone_gradient(u: GridFunction) -> tuple[GridFunction, GridFunction]:
    """Finite-difference cone gradient (x1 d/dx1 u, d/dx2 u).

    In log coordinates the first component is -du/dr.  Central differences
    in the interior, second-order one-sided stencils at the edges.
    """
    g = u.grid
    du_dr = np.gradient(u.values, g.hr, axis=0, edge_order=2)
    du_dy = np.gradient(u.values, g.hy, axis=1, edge_order=2)
    return (GridFunction(g, -du_dr), GridFunction(g, du_dy))


# ---------------------------------------------------------------------------
# serialization

def grid_function_to_csv(u: GridFunction, path) -> None:
    """Write rows (r, y, value) with 17 significant digits."""
    rr, yy = u.grid.mesh()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", "y", "value"])
        for r, y, v in zip(rr.ravel(), yy.ravel(), u.values.ravel()):
            w.writerow([f"{r:.17g}", f"{y:.17g}", f"{v:.17g}"])


_BIN_HEADER = struct.Struct("<iidB")  # nr, ny, r_max, kind


def grid_function_to_binary(u: GridFunction, path) -> None:
    """Compact dump: header (nr, ny, r_max, kind), then row-major doubles,
    little-endian."""
    g = u.grid
    with open(path, "wb") as fh:
        fh.write(_BIN_HEADER.pack(g.nr, g.ny, g.domain.r_max, int(g.domain.kind)))
        fh.write(u.values.astype("<f8").tobytes(order="C"))


def grid_function_from_binary(path) -> GridFunction:
    with open(path, "rb") as fh:
        nr, ny, r_max, kind = _BIN_HEADER.unpack(fh.read(_BIN_HEADER.size))
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != nr * ny:
        raise NumericError(f"binary dump holds {data.size} doubles, expected {nr * ny}")
    grid = LogGrid(ConeDomain(DomainKind(kind), r_max), nr, ny)
    return GridFunction(grid, data.reshape(nr, ny).copy())
