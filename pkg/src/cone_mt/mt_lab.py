"""Moser-Trudinger functionals, extremal families, and auxiliary constants.

The sharp exponent on the cone is ALPHA_2 = 2 omega_1 = 4 pi.  The 2-D
functional is int (e^{alpha (u/|grad_B u|_2)^2} - 1) d mu; its 1-D reduced
cousin is int e^{beta w^p - t} dt with beta = alpha / ALPHA_2.

Kinked radial profiles (the concentrating sequence, the truncated-log
bump, the 1-D blow-up family) cannot be resolved by any practical tensor
grid once the concentration radius e^{-k/2} falls below the grid spacing,
so their norms and functionals are evaluated on dense 1-D radial
representations: exact piecewise-analytic quadrature where available, with
generically-sampled finite-difference values reported alongside.  Finite
differences across the kinks on a 2-D grid would silently wash out the
sharp constant, which is the one thing this module must not do.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import map_coordinates

from .domain import GridFunction, LogGrid, integrate_values
from .errors import (AdmissibilityError, RangeOverflowError, ResolutionError,
                     SupportError)
from .norms import EXP_GUARD, dirichlet_seminorm, lp_gamma_norm
from .rearrange import OMEGA_1, RadialProfile

#: sharp 2-D exponent: twice the unit-circle perimeter
ALPHA_2 = 2.0 * OMEGA_1


@dataclass(frozen=True)
class MTParams:
    """Exponent bookkeeping: 2-D exponent alpha, reduced exponent
    beta = alpha / ALPHA_2, conjugate pair (p, q) with q >= 2."""

    alpha: float
    p: float = 2.0
    beta: float = field(init=False)
    q: float = field(init=False)

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if not 1.0 < self.p <= 2.0:
            raise ValueError(f"need 1 < p <= 2 so that q = p/(p-1) >= 2, got p = {self.p}")
        object.__setattr__(self, "beta", self.alpha / ALPHA_2)
        object.__setattr__(self, "q", self.p / (self.p - 1.0))


# ---------------------------------------------------------------------------
# radial quadrature helpers (rho-profiles)

def radial_dirichlet_sq(profile: RadialProfile) -> float:
    """|grad_B u|_2^2 of a radial function from its profile, by cell-wise
    difference quotients: omega_1 * sum slope^2 * rho_mid * d_rho."""
    rho, v = profile.grid, profile.values
    drho = np.diff(rho)
    slopes = np.diff(v) / drho
    mid = 0.5 * (rho[1:] + rho[:-1])
    return float(OMEGA_1 * np.sum(slopes ** 2 * mid * drho))


def radial_l2_sq(profile: RadialProfile) -> float:
    """|u|_2^2 of a radial function: omega_1 * int v^2 rho d rho, plus the
    inner disc the profile grid does not reach (value clamped)."""
    rho, v = profile.grid, profile.values
    inner = math.pi * rho[0] ** 2 * v[0] ** 2
    return float(inner + OMEGA_1 * np.trapz(v ** 2 * rho, rho))


def radial_mt_integral(profile: RadialProfile, alpha: float) -> float:
    """int (e^{alpha v^2} - 1) d mu for a radial v given by its profile."""
    rho, v = profile.grid, profile.values
    expo = alpha * v ** 2
    if float(np.max(expo)) > EXP_GUARD:
        raise RangeOverflowError("exponent exceeds the overflow guard")
    f = np.expm1(expo)
    inner = math.pi * rho[0] ** 2 * f[0]
    return float(inner + OMEGA_1 * np.trapz(f * rho, rho))


def _radial_data(u) -> tuple[RadialProfile, float, float]:
    """(profile, |grad|^2, |u|_2^2) for any radial-style input."""
    if isinstance(u, (MoserFunction, MoserBump2D)):
        return u.profile, u.grad_norm_sq, u.l2_norm_sq
    if isinstance(u, RadialProfile):
        if u.variable != "rho":
            raise ValueError("expected a rho-profile")
        return u, radial_dirichlet_sq(u), radial_l2_sq(u)
    raise TypeError(f"unsupported radial input {type(u)!r}")


# ---------------------------------------------------------------------------
# the 2-D functionals

def mt_functional(u, alpha: float) -> float:
    """int (e^{alpha (u/|grad_B u|_2)^2} - 1) d mu.

    Accepts a GridFunction (tensor-grid quadrature) or a radial object
    (profile quadrature with its analytic gradient norm where available).
    """
    if isinstance(u, GridFunction):
        gn = dirichlet_seminorm(u)
        if gn == 0.0:
            raise ValueError("mt_functional of a function with zero gradient")
        expo = alpha * (u.values / gn) ** 2
        if float(np.max(expo)) > EXP_GUARD:
            raise RangeOverflowError(
                "exponent exceeds the overflow guard (genuinely blowing-up integrand)")
        return float(integrate_values(u.grid, np.expm1(expo)))
    profile, grad_sq, _ = _radial_data(u)
    scaled = RadialProfile(profile.grid, profile.values / math.sqrt(grad_sq),
                           profile.variable)
    return radial_mt_integral(scaled, alpha)


def mt_ratio(u, alpha: float) -> float:
    """mt_functional(u, alpha) / (|u|_2^2 / |grad_B u|_2^2)."""
    if isinstance(u, GridFunction):
        l2 = lp_gamma_norm(u)
        if l2 == 0.0:
            raise ValueError("mt_ratio of the zero function")
        return mt_functional(u, alpha) * dirichlet_seminorm(u) ** 2 / l2 ** 2
    _, grad_sq, l2_sq = _radial_data(u)
    return mt_functional(u, alpha) * grad_sq / l2_sq


# ---------------------------------------------------------------------------
# 1-D reduced functional and blow-up family

def admissibility_integral(w: RadialProfile, q: float) -> float:
    """int |dw/dt|^q dt by cell-wise difference quotients (exact for
    piecewise-linear profiles with on-grid kinks)."""
    dt = np.diff(w.grid)
    slopes = np.diff(w.values) / dt
    return float(np.sum(np.abs(slopes) ** q * dt))


def one_d_functional(w: RadialProfile, beta: float, p: float = 2.0,
                     enforce_admissibility: bool = True) -> float:
    """int_0^inf e^{beta w^p - t} dt on the truncated grid, with the exact
    tail (w constant beyond its support) added analytically.

    Admissibility (w(0) = 0, w nondecreasing, unit derivative budget in the
    conjugate power q) is enforced by default; ``enforce_admissibility=False``
    exists for envelope functions that saturate the Hoelder bound, whose
    derivative budget diverges logarithmically.
    """
    if w.variable != "moser_t":
        raise ValueError("one_d_functional expects a moser_t profile")
    t, vals = w.grid, w.values
    wmax = float(np.max(np.abs(vals)))
    if enforce_admissibility:
        if t[0] != 0.0 or abs(vals[0]) > 1e-12 * max(wmax, 1e-300):
            raise AdmissibilityError("profile must start at t = 0 with w(0) = 0")
        if np.any(np.diff(vals) < -1e-12 * max(wmax, 1e-300)):
            raise AdmissibilityError("profile must be nondecreasing")
        q = p / (p - 1.0)
        budget = admissibility_integral(w, q)
        if budget > 1.0 + 1e-9:
            raise AdmissibilityError(
                f"derivative budget int |dw/dt|^{q:g} dt = {budget:.12g} exceeds 1")
    expo = beta * vals ** p - t
    if float(np.max(expo)) > EXP_GUARD:
        raise RangeOverflowError("exponent exceeds the overflow guard")
    main = float(np.trapz(np.exp(expo), t))
    tail = math.exp(beta * vals[-1] ** p - t[-1])
    return main + tail


def blowup_profile(t1: float, p: float = 2.0, n_ramp: int = 2001,
                   plateau: float | None = None) -> RadialProfile:
    """The admissible ramp-and-plateau profile w = t1^{1/p} min(t/t1, 1).

    Its derivative budget equals 1 exactly (the kink at t1 is a grid node),
    for every t1 > 0.
    """
    if t1 <= 0:
        raise ValueError("t1 must be positive")
    if plateau is None:
        plateau = max(5.0, 0.5 * t1)
    ramp = np.linspace(0.0, t1, n_ramp)
    flat = np.linspace(t1, t1 + plateau, max(2, int(n_ramp * plateau / t1) // 4))[1:]
    t = np.concatenate([ramp, flat])
    w = t1 ** (1.0 / p) * np.minimum(t / t1, 1.0)
    return RadialProfile(t, w, "moser_t")


# ---------------------------------------------------------------------------
# extremal families

def _piecewise_log_profile(s_break: float, plateau_len: float, value_fn,
                           n_per_unit: float = 1000.0) -> RadialProfile:
    """Dense rho-profile for functions linear in s = -2 ln rho up to
    ``s_break`` and constant to ``s_break + plateau_len``; the kink is a
    grid node, so the representation is exact."""
    n1 = max(9, int(s_break * n_per_unit) | 1)
    n2 = max(9, int(plateau_len * n_per_unit / 4) | 1)
    s = np.concatenate([np.linspace(0.0, s_break, n1),
                        np.linspace(s_break, s_break + plateau_len, n2)[1:]])
    rho = np.exp(-0.5 * s)[::-1]
    vals = value_fn(s)[::-1]
    return RadialProfile(rho, vals, "rho")


@dataclass(frozen=True)
class MoserFunction:
    """The concentrating radial family u_k: a log ramp from rho = 1 down to
    rho = e^{-k/2}, constant on the inner disc, vanishing for rho >= 1.

    Its Dirichlet integral is exactly 1; the L^2 norm has the closed form
    stored in ``l2_norm_sq``; ``profile`` is a dense exact representation.
    """

    k: float
    profile: RadialProfile
    grad_norm_sq: float
    l2_norm_sq: float

    def mt_value(self, alpha: float) -> float:
        return mt_functional(self, alpha)

    def sampled_profile(self, ds: float = 1e-3) -> RadialProfile:
        """Generic dense sampling (kink deliberately *not* aligned to a
        node), for honest finite-difference cross-checks of the analytic
        norms."""
        s_end = self.k + 30.0 + 0.37
        n = (int(s_end / ds) + 7) | 1
        s = np.linspace(0.0, s_end, n)
        c = 1.0 / math.sqrt(2.0 * OMEGA_1)
        vals = c * np.minimum(s / math.sqrt(self.k), math.sqrt(self.k))
        return RadialProfile(np.exp(-0.5 * s)[::-1], vals[::-1], "rho")

    def to_grid(self, grid: LogGrid) -> GridFunction:
        """Sample on a tensor grid; requires the inner radius e^{-k/2} to
        span at least 4 radial cells."""
        h = max(grid.hr, grid.hy)
        if math.exp(-0.5 * self.k) < 4.0 * h:
            raise ResolutionError(
                f"inner radius e^(-k/2) = {math.exp(-0.5 * self.k):.3e} spans fewer "
                f"than 4 cells at spacing {h:.3e}")
        rr, yy = grid.mesh()
        rho = np.hypot(rr, yy)
        vals = self.profile.value_at(rho)
        vals[0, :] = vals[-1, :] = 0.0
        vals[:, 0] = vals[:, -1] = 0.0
        return GridFunction(grid, vals, boundary_flag=True)


def moser_sequence(k: float) -> MoserFunction:
    """Construct u_k with concentration parameter k > 0."""
    if k <= 0:
        raise ValueError("k must be positive")
    c = 1.0 / math.sqrt(2.0 * OMEGA_1)

    def value_fn(s):
        return c * np.minimum(s / math.sqrt(k), math.sqrt(k))

    profile = _piecewise_log_profile(k, 30.0, value_fn)
    l2 = k * math.exp(-k) / 4.0 + (2.0 / k) * (
        0.25 - math.exp(-k) * (k * k + 2.0 * k + 2.0) / 8.0)
    return MoserFunction(k=k, profile=profile, grad_norm_sq=1.0, l2_norm_sq=l2)


@dataclass(frozen=True)
class MoserBump2D:
    """The truncated-logarithm bump of inner radius d about ``center``:
    constant sqrt(ln 2) on the half ball, log decay to the ball edge, zero
    outside, normalized so its Dirichlet integral is exactly 1 (prefactor
    omega_1^{-1/2})."""

    d: float
    center: tuple[float, float]
    profile: RadialProfile  # about its own center, radius variable rho_loc
    grad_norm_sq: float

    @property
    def l2_norm_sq(self) -> float:
        return radial_l2_sq(self.profile)

    @property
    def support_measure(self) -> float:
        return math.pi * self.d ** 2

    @property
    def max_value(self) -> float:
        return math.sqrt(math.log(2.0) / OMEGA_1)

    def sampled_profile(self, ds: float = 1e-3) -> RadialProfile:
        v_end = 2.0 * math.log(2.0) + 0.37  # v = ln(d / rho_loc), kink off-node
        n = (int(v_end / ds) + 7) | 1
        v = np.linspace(0.0, v_end, n)
        c = 1.0 / math.sqrt(OMEGA_1)
        vals = c * np.minimum(v, math.log(2.0)) / math.sqrt(math.log(2.0))
        return RadialProfile(self.d * np.exp(-v)[::-1], vals[::-1], "rho")

    def to_grid(self, grid: LogGrid) -> GridFunction:
        r0, r1 = grid.domain.r_interval
        y0, y1 = grid.domain.y_interval
        cr, cy = self.center
        if not (r0 <= cr - self.d and cr + self.d <= r1
                and y0 <= cy - self.d and cy + self.d <= y1):
            raise SupportError(
                f"ball of radius {self.d} about {self.center} does not fit the log box")
        rr, yy = grid.mesh()
        rho = np.hypot(rr - cr, yy - cy)
        vals = self.profile.value_at(rho)
        vals[0, :] = vals[-1, :] = 0.0
        vals[:, 0] = vals[:, -1] = 0.0
        return GridFunction(grid, vals, boundary_flag=True)


def moser_function_2d(d: float, center: tuple[float, float]) -> MoserBump2D:
    """Normalized truncated-log bump supported on the log ball of radius d."""
    if d <= 0:
        raise ValueError("d must be positive")
    c = 1.0 / math.sqrt(OMEGA_1)
    sqrt_ln2 = math.sqrt(math.log(2.0))

    def value_fn(s):
        # s = -2 ln(rho/d), branch point at rho = d/2 i.e. s = 2 ln 2
        v = 0.5 * s
        return c * np.minimum(v, math.log(2.0)) / sqrt_ln2

    n1 = 4001
    n2 = 2001
    s = np.concatenate([np.linspace(0.0, 2.0 * math.log(2.0), n1),
                        np.linspace(2.0 * math.log(2.0), 2.0 * math.log(2.0) + 20.0, n2)[1:]])
    rho = d * np.exp(-0.5 * s)[::-1]
    vals = value_fn(s)[::-1]
    profile = RadialProfile(rho, vals, "rho")
    return MoserBump2D(d=d, center=center, profile=profile, grad_norm_sq=1.0)


# ---------------------------------------------------------------------------
# scale invariance

def scale_map(u: GridFunction, r: float) -> GridFunction:
    """The cone rescaling u_r(x1, x2) = u(x1^r, r x2): in log coordinates
    the plane dilation (s, y) -> (r s, r y), resampled bilinearly."""
    if r <= 0:
        raise ValueError("scale factor must be positive")
    g = u.grid
    vmax = float(np.max(np.abs(u.values)))
    if vmax > 0:
        rr, yy = g.mesh()
        mask = np.abs(u.values) > 1e-12 * vmax
        r0, r1 = g.domain.r_interval
        y0, y1 = g.domain.y_interval
        eps = 1e-9
        if (np.min(rr[mask]) < r * r0 - eps or np.max(rr[mask]) > r * r1 + eps
                or np.min(yy[mask]) < r * y0 - eps or np.max(yy[mask]) > r * y1 + eps):
            raise SupportError(
                f"support of the rescaled function (factor {r}) overflows the log box")
    if r == 1.0:
        return u
    fi = (r * g.r_nodes - g.r_nodes[0]) / g.hr
    fj = (r * g.y_nodes - g.y_nodes[0]) / g.hy
    FI, FJ = np.meshgrid(fi, fj, indexing="ij")
    vals = map_coordinates(u.values, [FI, FJ], order=1, mode="constant", cval=0.0)
    vals[0, :] = vals[-1, :] = 0.0
    vals[:, 0] = vals[:, -1] = 0.0
    return GridFunction(g, vals, boundary_flag=True)


# ---------------------------------------------------------------------------
# the endpoint-limit constant of the threshold condition

def _gauss_panels(panels: np.ndarray, fn) -> float:
    xg, wg = np.polynomial.legendre.leggauss(24)
    total = 0.0
    for lo, hi in zip(panels[:-1], panels[1:]):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        total += half * float(np.sum(wg * fn(mid + half * xg)))
    return total


def endpoint_limit_constant(n: int, refine: int = 1) -> float:
    """n * int_0^1 e^{n (t^2 - t)} dt; tends to 2 from above as n grows.

    Composite Gauss-Legendre with panels geometrically refined into the two
    boundary layers of width ~1/n.  ``refine`` doubles the panel count for
    convergence-control checks.
    """
    if n < 1:
        raise ValueError("n must be >= 1")

    def fn(t):
        return np.exp(n * (t * t - t))

    layer = min(0.5, 40.0 / n)
    m = 8 * refine
    left = layer * (np.linspace(0.0, 1.0, m + 1) ** 2)
    mid = np.linspace(layer, 1.0 - layer, 2 * refine + 1)
    right = 1.0 - left[::-1]
    panels = np.unique(np.concatenate([left, mid, right]))
    return n * _gauss_panels(panels, fn)
