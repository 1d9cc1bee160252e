"""Symmetric decreasing rearrangement with respect to the cone measure.

The cone measure is Lebesgue measure in log coordinates, so the rearranged
function lives on centered balls of the log metric about the log origin
(the image of the cone point (x1, x2) = (1, 0)).  Rearrangement is only
offered on the full cone: the bounded strip's log image is a half-strip
where centered balls overflow the domain.

Two outputs are produced:

* a :class:`RadialProfile` obtained by inverting the cumulative quadrature
  measure (monotone interpolation between sorted-value bins), and
* a grid function given by the *discrete* rearrangement: sorted values are
  re-assigned to nodes ordered by distance from the log origin.  Interior
  quadrature weights are all equal, so this permutation preserves every
  integral of the form "sum of weights times G(value)" exactly, and radial
  nonincreasing inputs are exact fixed points.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .domain import DomainKind, GridFunction
from .errors import SupportError
from .norms import dirichlet_seminorm

#: perimeter of the unit circle in the log metric
OMEGA_1 = 2.0 * np.pi


@dataclass(frozen=True)
class RadialProfile:
    """A monotone 1-D profile: u*(rho) (nonincreasing, ``variable='rho'``)
    or a reduced profile w(t) (nondecreasing, ``variable='moser_t'``)."""

    grid: np.ndarray
    values: np.ndarray
    variable: str = "rho"

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape:
            raise ValueError("grid and values must be equal-length 1-D arrays")
        if np.any(np.diff(g) <= 0):
            raise ValueError("profile grid must be strictly increasing")
        if self.variable == "rho":
            if np.any(np.diff(v) > 1e-12 * (abs(v[0]) + 1e-300)):
                raise ValueError("rho-profile values must be nonincreasing")
            if np.any(v < -1e-14 * (abs(v[0]) + 1e-300)):
                raise ValueError("rho-profile values must be nonnegative")
        elif self.variable == "moser_t":
            if np.any(np.diff(v) < -1e-12 * (np.max(np.abs(v)) + 1e-300)):
                raise ValueError("moser_t profile values must be nondecreasing")
        else:
            raise ValueError(f"unknown profile variable {self.variable!r}")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    def value_at(self, x: np.ndarray) -> np.ndarray:
        """Monotone linear interpolation, clamped left, zero beyond the
        support (rho) / clamped right (moser_t)."""
        right = 0.0 if self.variable == "rho" else self.values[-1]
        return np.interp(x, self.grid, self.values, left=self.values[0], right=right)


def _radial_distance(grid) -> np.ndarray:
    rr, yy = grid.mesh()
    return np.hypot(rr, yy)


def rearrange(u: GridFunction) -> tuple[RadialProfile, GridFunction]:
    """Symmetric decreasing rearrangement of a nonnegative grid function.

    Values are sorted descending (stable in the flat node index) together
    with their quadrature weights; the cumulative measure is inverted to
    give the radial profile, and the sorted values are re-assigned to grid
    nodes by increasing distance from the log origin.
    """
    if u.grid.domain.kind != DomainKind.FULL_CONE:
        raise ValueError("rearrangement is implemented on the full cone only")
    vals = u.values.ravel()
    vmax = float(np.max(vals)) if vals.size else 0.0
    if np.any(vals < -1e-14 * max(vmax, 1e-300)) or vmax < 0:
        raise ValueError("rearrange requires u >= 0 (pass |u|)")
    vals = np.maximum(vals, 0.0)
    weights = u.grid.quad_weights().ravel()

    order = np.argsort(-vals, kind="stable")
    sorted_vals = vals[order]
    cum_measure = np.cumsum(weights[order])
    radii = np.sqrt(cum_measure / np.pi)
    profile = RadialProfile(radii, sorted_vals, "rho")

    rho = _radial_distance(u.grid).ravel()
    # lexicographic (distance, flat index): deterministic tie-breaking
    ring_order = np.lexsort((np.arange(rho.size), rho))
    star = np.empty_like(vals)
    star[ring_order] = sorted_vals
    star = star.reshape(u.values.shape)
    star[0, :] = star[-1, :] = 0.0
    star[:, 0] = star[:, -1] = 0.0
    return profile, GridFunction(u.grid, star, boundary_flag=True)


def integrate_transformed(profile: RadialProfile, G) -> float:
    """Integral of G(u*) over the plane using the profile's own annulus
    bins (right-continuous convention).

    For profiles produced by :func:`rearrange` and G(0) = 0 this reproduces
    the grid quadrature of G(u) exactly up to summation order, which is the
    content of the layer-cake equality.
    """
    if profile.variable != "rho":
        raise ValueError("integrate_transformed expects a rho-profile")
    measures = np.diff(np.concatenate(([0.0], np.pi * profile.grid ** 2)))
    return float(np.sum(measures * G(profile.values)))


def polya_szego_gap(u: GridFunction) -> float:
    """|grad_B u|_2^2 - |grad_B u*|_2^2; nonnegative up to discretization.

    Both Dirichlet integrals are computed by the same finite-difference
    quadrature, on the input and on its discrete rearrangement.
    """
    if not u.boundary_flag:
        raise ValueError("polya_szego_gap requires a Dirichlet grid function")
    _, star = rearrange(u)
    return dirichlet_seminorm(u) ** 2 - dirichlet_seminorm(star) ** 2


def reduce_to_1d(profile: RadialProfile, R: float, n_t: int = 4001,
                 t_max: float = 40.0) -> RadialProfile:
    """Change of variables rho = R e^{-t/2}: returns w(t) = sqrt(2 omega_1)
    u*(R e^{-t/2}) on a uniform t grid.

    The profile must be supported in rho <= R.  The sup is preserved
    exactly: beyond the innermost sample the profile is clamped to its
    largest value.
    """
    if profile.variable != "rho":
        raise ValueError("reduce_to_1d expects a rho-profile")
    if R <= 0:
        raise ValueError("R must be positive")
    vmax = float(np.max(profile.values))
    outside = profile.grid > R * (1.0 + 1e-12)
    if np.any(profile.values[outside] > 1e-12 * max(vmax, 1e-300)):
        raise SupportError(f"profile support exceeds the reduction radius R = {R}")
    t = np.linspace(0.0, t_max, n_t)
    rho = R * np.exp(-0.5 * t)
    w = np.sqrt(2.0 * OMEGA_1) * profile.value_at(rho)
    edge = np.sqrt(2.0 * OMEGA_1) * profile.value_at(np.array([R]))[0]
    if edge > 1e-10 * max(vmax, 1e-300):
        raise SupportError(f"profile does not vanish at rho = R (value {edge:g})")
    w[0] = 0.0
    w = np.maximum.accumulate(w)  # guard monotonicity against interp round-off
    return RadialProfile(t, w, "moser_t")


def profile_to_csv(profile: RadialProfile, path) -> None:
    name = "rho" if profile.variable == "rho" else "t"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([name, "value"])
        for x, v in zip(profile.grid, profile.values):
            w.writerow([f"{x:.17g}", f"{v:.17g}"])
