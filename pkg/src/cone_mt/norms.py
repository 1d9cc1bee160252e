"""Weighted Lebesgue, cone Sobolev, and Luxemburg (Orlicz) norms.

All norms are taken with respect to the cone measure dx1/x1 dx2, i.e. the
flat measure dr dy of the log grid.  The weighted p-norm carries the row
weight t^{2/p - gamma} with t = e^{-r} (written below as the log-side
weight e^{(gamma p - 2) r} on |u|^p); for p = 2, gamma = 1 it reduces to
the plain L^2 norm in log coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .domain import GridFunction, cone_gradient, integrate_values
from .errors import NumericError, RangeOverflowError, SolverError

#: Any exponent argument above this trips the overflow guard.
EXP_GUARD = 700.0


@dataclass(frozen=True)
class NormSpec:
    """Parameters of a weighted norm: integrability p, weight gamma,
    derivative order m in {0, 1}."""

    p: float = 2.0
    gamma: float = 1.0
    order: int = 0

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.order not in (0, 1):
            raise ValueError(f"order must be 0 or 1, got {self.order}")


@dataclass(frozen=True)
class NFunction:
    """An N-function for Orlicz norms.

    The built-in (and only tested) family is A_alpha(s) = e^{alpha s^2} - 1.
    A user-supplied monotone convex callable may replace it; that path is
    untested beyond the built-in family.
    """

    alpha: float = 1.0
    func: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.func is None and self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    def __call__(self, s: np.ndarray) -> np.ndarray:
        if self.func is not None:
            return self.func(s)
        return np.expm1(self.alpha * np.square(s))


def _weighted_p_integral(u: GridFunction, p: float, gamma: float, arrays) -> float:
    """sum of e^{(gamma*p - 2) r} |a|^p over the quadrature, for each array."""
    g = u.grid
    expo = gamma * p - 2.0
    w = np.ones(g.nr) if expo == 0.0 else np.exp(expo * g.r_nodes)
    total = 0.0
    for a in arrays:
        total += integrate_values(g, w[:, None] * np.abs(a) ** p)
    return total


def lp_gamma_norm(u: GridFunction, spec: NormSpec = NormSpec()) -> float:
    """Weighted Lebesgue norm |u|_{L_p^gamma}."""
    if spec.order != 0:
        raise ValueError("lp_gamma_norm requires order 0")
    if not np.all(np.isfinite(u.values)):
        raise NumericError("norm of non-finite data")
    return _weighted_p_integral(u, spec.p, spec.gamma, [u.values]) ** (1.0 / spec.p)


def h1_norm(u: GridFunction, spec: NormSpec = NormSpec(order=1)) -> float:
    """First-order weighted Sobolev norm: u, the Fuchsian derivative t d/dt u
    and d/dx2 u all measured in L_p^gamma."""
    if spec.order != 1:
        raise ValueError("h1_norm requires order 1")
    if not np.all(np.isfinite(u.values)):
        raise NumericError("norm of non-finite data")
    g1, g2 = cone_gradient(u)
    total = _weighted_p_integral(u, spec.p, spec.gamma, [u.values, g1.values, g2.values])
    return total ** (1.0 / spec.p)


def dirichlet_seminorm(u: GridFunction) -> float:
    """|grad_B u|_2 for p = 2, gamma = 1: the Dirichlet energy norm."""
    g1, g2 = cone_gradient(u)
    return float(np.sqrt(integrate_values(u.grid, np.square(g1.values) + np.square(g2.values))))


def h1_seminorm(u: GridFunction, spec: NormSpec = NormSpec(order=1)) -> float:
    """Gradient part of :func:`h1_norm` alone."""
    g1, g2 = cone_gradient(u)
    return _weighted_p_integral(u, spec.p, spec.gamma, [g1.values, g2.values]) ** (1.0 / spec.p)


def luxemburg_norm(u: GridFunction, A: NFunction) -> float:
    """Luxemburg norm inf{lambda > 0 : integral of A(|u|/lambda) <= 1}.

    Found by bisection on the monotone G(lambda) = integral - 1.  During
    bracketing an overflowing integrand is treated as G = +inf (a valid
    sign); the returned root itself never sits in the overflow region.
    """
    vals = np.abs(u.values)
    umax = float(np.max(vals))
    if umax == 0.0:
        return 0.0
    w = u.grid.quad_weights()

    def G(lam: float) -> float:
        with np.errstate(over="ignore"):
            s = A(vals / lam)
        total = float(np.sum(w * s))
        return total - 1.0 if np.isfinite(total) else np.inf

    alpha = A.alpha if A.func is None else 1.0
    lo = 1e-8
    hi = umax * np.sqrt(alpha / np.log(2.0)) * 10.0
    for _ in range(200):
        if G(hi) < 0.0:
            break
        hi *= 2.0
    else:
        raise RangeOverflowError("luxemburg bracket failed: G never becomes negative")
    for _ in range(200):
        if G(lo) > 0.0:
            break
        lo *= 0.5
    else:  # pragma: no cover - G(lo)>0 is guaranteed for u != 0
        return 0.0
    for _ in range(110):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if G(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    g = G(lam)
    if not abs(g) <= 1e-10:
        raise SolverError(f"luxemburg root residual {g:.3e} exceeds 1e-10")
    return lam
