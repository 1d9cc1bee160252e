"""Variational functional, nonlinearity families, and the numerical
mountain-pass method with a Newton refinement oracle.

The functional is I(u) = (1/2) a(u, u) - int F(u) d mu, where a is the
exact discrete Dirichlet form of the log-coordinate Laplacian.  With the
trapezoid quadrature of F and Dirichlet data, the nodal Euler-Lagrange
residual of the discrete I is exactly (A u - f(u)) at interior nodes, so
finite differences of the energy match the reported gradient to machine
precision -- the gate every solver run depends on.

The path-deformation solver tracks the maximum of the *continuous*
piecewise-linear path (located by one-dimensional maximization inside the
segments, not just over the stored states): the node-wise maximum alone
stalls with a gradient of the order of the path spacing, because the
located top of a discrete path misses the ridge crossing by half a
segment.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import minimize_scalar

from .domain import GridFunction, integrate_values
from .errors import RangeOverflowError, SolverError
from .norms import EXP_GUARD
from .operator import (DiscreteOperator, energy_product_values, first_eigenvalue,
                       l2_product, _cg)
from .mt_lab import ALPHA_2, endpoint_limit_constant


# ---------------------------------------------------------------------------
# nonlinearity families

@dataclass(frozen=True)
class NonlinearitySpec:
    """An autonomous nonlinearity f(t) with primitive F and derivative f'.

    Families:
      * ``polynomial``:      f(t) = sign(t) |t|^{p_exp - 1},   p_exp > 2
      * ``subcritical_exp``: f(t) = c t^3 e^{|t|^gamma_exp},   gamma_exp in (0, 2)
      * ``critical_exp``:    f(t) = c t^3 e^{alpha0 t^2}
      * ``custom``:          user-supplied callables (reserved hook for
        x-dependent right-hand sides; untested beyond the shipped tests)

    All satisfy f(0) = 0 and a superquadratic primitive.
    """

    family: str
    p_exp: float = 4.0
    gamma_exp: float = 1.5
    alpha0: float = 1.0
    c: float = 1.0
    custom: tuple[Callable, Callable, Callable] | None = None  # (f, F, fprime)

    @classmethod
    def polynomial(cls, p_exp: float = 4.0) -> "NonlinearitySpec":
        if p_exp <= 2:
            raise ValueError("polynomial family needs p_exp > 2")
        return cls("polynomial", p_exp=p_exp)

    @classmethod
    def subcritical(cls, gamma_exp: float = 1.5, c: float = 1.0) -> "NonlinearitySpec":
        if not 0.0 < gamma_exp < 2.0:
            raise ValueError("subcritical family needs gamma_exp in (0, 2)")
        return cls("subcritical_exp", gamma_exp=gamma_exp, c=c)

    @classmethod
    def critical(cls, alpha0: float, c: float = 1.0) -> "NonlinearitySpec":
        if alpha0 <= 0:
            raise ValueError("critical family needs alpha0 > 0")
        return cls("critical_exp", alpha0=alpha0, c=c)

    @classmethod
    def from_callables(cls, f, F, fprime) -> "NonlinearitySpec":
        return cls("custom", custom=(f, F, fprime))

    def _guard(self, expo: np.ndarray):
        if expo.size and float(np.max(expo)) > EXP_GUARD:
            raise RangeOverflowError("nonlinearity exponent exceeds the overflow guard")

    def f(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.family == "polynomial":
            return np.sign(t) * np.abs(t) ** (self.p_exp - 1.0)
        if self.family == "subcritical_exp":
            expo = np.abs(t) ** self.gamma_exp
            self._guard(expo)
            return self.c * t ** 3 * np.exp(expo)
        if self.family == "critical_exp":
            expo = self.alpha0 * t ** 2
            self._guard(expo)
            return self.c * t ** 3 * np.exp(expo)
        return self.custom[0](t)

    def F(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.family == "polynomial":
            return np.abs(t) ** self.p_exp / self.p_exp
        if self.family == "subcritical_exp":
            return self._subcritical_primitive(t)
        if self.family == "critical_exp":
            a = self.alpha0
            expo = a * t ** 2
            self._guard(expo)
            return self.c * (np.exp(expo) * (expo - 1.0) + 1.0) / (2.0 * a * a)
        return self.custom[1](t)

    def fprime(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.family == "polynomial":
            return (self.p_exp - 1.0) * np.abs(t) ** (self.p_exp - 2.0)
        if self.family == "subcritical_exp":
            g = self.gamma_exp
            expo = np.abs(t) ** g
            self._guard(expo)
            return self.c * np.exp(expo) * (3.0 * t ** 2 + g * np.abs(t) ** (g + 2.0))
        if self.family == "critical_exp":
            a = self.alpha0
            expo = a * t ** 2
            self._guard(expo)
            return self.c * np.exp(expo) * (3.0 * t ** 2 + 2.0 * a * t ** 4)
        return self.custom[2](t)

    def bracket(self, t: np.ndarray) -> np.ndarray:
        """f(t) t - 2 F(t): the superquadratic excess used by the
        quasi-monotonicity condition."""
        return self.f(t) * t - 2.0 * self.F(t)

    def _subcritical_primitive(self, t: np.ndarray) -> np.ndarray:
        """F(t) = c sum_n |t|^(4 + g n) / (n! (4 + g n)); all terms positive,
        truncated at machine precision."""
        g = self.gamma_exp
        a = np.abs(t)
        expo = a ** g
        self._guard(expo)
        ag = expo.copy()
        pw = a ** 4
        total = pw / 4.0
        fact = 1.0
        for n in range(1, 2000):
            pw = pw * ag
            fact *= n
            term = pw / (fact * (4.0 + g * n))
            total += term
            if float(np.max(term)) <= 1e-17 * max(float(np.max(total)), 1e-300):
                break
        return self.c * total


# ---------------------------------------------------------------------------
# energy, gradient, and exact bookkeeping

def energy(u: GridFunction, spec: NonlinearitySpec) -> float:
    """I(u) = (1/2) a(u, u) - int F(u) d mu (exact discrete Dirichlet form
    plus trapezoid quadrature of the primitive)."""
    return _energy_values(u.grid, _op_for(u.grid), u.values, spec)


def _op_for(grid) -> DiscreteOperator:
    # tiny per-grid cache so free functions stay cheap
    key = id(grid)
    op = _OP_CACHE.get(key)
    if op is None or not op.grid.same_as(grid):
        op = DiscreteOperator(grid)
        _OP_CACHE[key] = op
    return op


_OP_CACHE: dict[int, DiscreteOperator] = {}


def _energy_values(grid, A: DiscreteOperator, vals: np.ndarray,
                   spec: NonlinearitySpec) -> float:
    quad = 0.5 * energy_product_values(A, vals, vals)
    Fv = spec.F(vals)
    return quad - grid.hr * grid.hy * float(np.sum(Fv[1:-1, 1:-1]))


def gradient(u: GridFunction, spec: NonlinearitySpec) -> GridFunction:
    """Nodal dual-space gradient A u - f(u) (zero on the boundary); pairs
    with test functions through the quadrature inner product."""
    A = _op_for(u.grid)
    res = A.matvec(u.values)
    fu = spec.f(u.values)
    res[1:-1, 1:-1] -= fu[1:-1, 1:-1]
    return GridFunction(u.grid, res, boundary_flag=True)


# ---------------------------------------------------------------------------
# condition validation

@dataclass
class ConditionsReport:
    """Numerical spot checks of the structural hypotheses on f."""

    vanishes_at_zero: bool
    superquadratic: bool
    small_at_zero: bool
    small_at_zero_limit: float
    quasimonotone: bool
    growth_class: str
    alpha0_estimate: float | None
    threshold_applicable: bool
    threshold_pass: bool | None
    threshold_lhs: float | None
    threshold_rhs: float | None

    @property
    def mountain_pass_ready(self) -> bool:
        return (self.vanishes_at_zero and self.superquadratic
                and self.small_at_zero and self.quasimonotone)


def validate_conditions(spec: NonlinearitySpec, lam1: float,
                        d: float = 1.0) -> ConditionsReport:
    """Sample-based validation: superquadratic growth of F, smallness of
    2F/t^2 at zero against lam1, quasi-monotonicity of f(t)t - 2F(t) in
    |t|, exponential growth classification, and (for the critical family)
    the lower-threshold comparison built from the endpoint-limit constant
    and the inner radius d."""
    vanishes = float(spec.f(np.array([0.0]))[0]) == 0.0

    ts = np.array([1e-3, 1e-4, 1e-5, 1e-6])
    small_vals = 2.0 * spec.F(ts) / ts ** 2
    small_limit = float(small_vals[-1])
    small_ok = bool(np.all(small_vals < lam1))

    tg = np.linspace(0.25, 6.0, 24)
    ratio = spec.F(tg) / tg ** 2
    superq = bool(np.all(np.diff(ratio) > 0) and ratio[-1] > 50.0 * max(ratio[0], 1e-12))

    tq = np.concatenate([-tg[::-1], tg])
    sq = np.linspace(0.0, 1.0, 21)
    bracket_full = spec.bracket(tq)
    quasi = True
    for s in sq:
        if np.any(spec.bracket(s * tq) > bracket_full + 1e-12 * np.abs(bracket_full) + 1e-12):
            quasi = False
            break

    growth_class, alpha0_est = _classify_growth(spec)

    applicable = growth_class == "critical"
    thr_pass = thr_lhs = thr_rhs = None
    if applicable and alpha0_est is not None:
        M = endpoint_limit_constant(10_000)
        thr_rhs = (2.0 / d) ** 2 / (M * alpha0_est)
        tt = np.linspace(10.0, 25.0, 16)
        with np.errstate(over="ignore"):
            vals = spec.f(tt) * tt * np.exp(-alpha0_est * tt ** 2)
        thr_lhs = float(np.min(vals))
        thr_pass = bool(thr_lhs > thr_rhs)

    return ConditionsReport(
        vanishes_at_zero=vanishes, superquadratic=superq,
        small_at_zero=small_ok, small_at_zero_limit=small_limit,
        quasimonotone=quasi, growth_class=growth_class,
        alpha0_estimate=alpha0_est, threshold_applicable=applicable,
        threshold_pass=thr_pass, threshold_lhs=thr_lhs, threshold_rhs=thr_rhs,
    )


def _classify_growth(spec: NonlinearitySpec) -> tuple[str, float | None]:
    """Classify by the sampled sign of log|f(t)| - alpha t^2 at large t."""
    ts = np.arange(5.0, 31.0, 5.0)

    def log_f(t):
        with np.errstate(divide="ignore"):
            if spec.family == "polynomial":
                return (spec.p_exp - 1.0) * np.log(t)
            if spec.family == "subcritical_exp":
                return math.log(abs(spec.c)) + 3.0 * np.log(t) + t ** spec.gamma_exp
            if spec.family == "critical_exp":
                return math.log(abs(spec.c)) + 3.0 * np.log(t) + spec.alpha0 * t ** 2
            ft = np.abs(spec.custom[0](t))
            return np.where(ft > 0, np.log(ft), -np.inf)

    lf = log_f(ts)
    # quadratic-coefficient estimate from the largest samples
    a_hat = float((lf[-1] - lf[-2]) / (ts[-1] ** 2 - ts[-2] ** 2))
    if a_hat < 1e-6:
        return ("subcritical", None) if lf[-1] > 0 or spec.family != "polynomial" else ("polynomial", None)
    lo, hi = 0.9 * a_hat, 1.1 * a_hat
    goes_down = np.all(np.diff(lf - hi * ts ** 2) < 0)
    goes_up = np.all(np.diff(lf - lo * ts ** 2) > 0)
    if goes_down and goes_up:
        return "critical", a_hat
    return "indeterminate", a_hat


# ---------------------------------------------------------------------------
# endpoint and geometry

def find_endpoint(spec: NonlinearitySpec, direction: GridFunction) -> GridFunction:
    """Double t until I(t * direction) <= -1; the returned endpoint anchors
    the far side of every mountain-pass path."""
    vals = direction.values
    if float(np.max(np.abs(vals))) == 0.0:
        raise ValueError("direction must be nonzero")
    if float(np.min(vals)) < -1e-12 * float(np.max(np.abs(vals))):
        raise ValueError("direction must be nonnegative")
    grid = direction.grid
    A = _op_for(grid)
    t = 1.0
    for _ in range(60):
        try:
            val = _energy_values(grid, A, t * vals, spec)
        except RangeOverflowError:
            val = -math.inf
        if val <= -1.0:
            while not math.isfinite(val):
                t *= 0.75
                try:
                    val = _energy_values(grid, A, t * vals, spec)
                except RangeOverflowError:
                    val = -math.inf
            return GridFunction(grid, t * vals).with_dirichlet()
        t *= 2.0
    raise SolverError(
        "no endpoint with I <= -1 after 60 doublings (superquadratic growth violated?)")


def mountain_pass_geometry(spec: NonlinearitySpec, A: DiscreteOperator,
                           n_dirs: int = 50, seed: int = 0) -> tuple[float, float]:
    """Locate a sphere radius rho (energy norm) with inf I > 0 over sampled
    random directions; returns (rho, delta)."""
    rng = np.random.default_rng(seed)
    g = A.grid
    dirs = []
    for _ in range(n_dirs):
        v = _random_smooth(g, rng)
        v /= math.sqrt(energy_product_values(A, v, v))
        dirs.append(v)
    best = (0.0, -math.inf)
    for rho in np.geomspace(1e-3, 2.0, 25):
        m = min(_energy_values(g, A, rho * v, spec) for v in dirs)
        if m > best[1]:
            best = (float(rho), float(m))
    rho, delta = best
    if delta <= 0:
        raise SolverError("no sphere with positive energy found: mountain-pass "
                          "geometry fails for this nonlinearity")
    return rho, delta


def _random_smooth(grid, rng) -> np.ndarray:
    """Random smooth Dirichlet field: a low tensor-sine expansion with
    decaying random coefficients."""
    r0, r1 = grid.domain.r_interval
    y0, y1 = grid.domain.y_interval
    xr = (grid.r_nodes - r0) / (r1 - r0)
    xy = (grid.y_nodes - y0) / (y1 - y0)
    out = np.zeros((grid.nr, grid.ny))
    for kk in range(1, 5):
        for ll in range(1, 5):
            c = rng.normal() / (kk * kk + ll * ll)
            out += c * np.outer(np.sin(np.pi * kk * xr), np.sin(np.pi * ll * xy))
    out[0, :] = out[-1, :] = 0.0
    out[:, 0] = out[:, -1] = 0.0
    return out


# ---------------------------------------------------------------------------
# the path-deformation solver

@dataclass
class MPResult:
    u_star: GridFunction
    level: float
    grad_norm: float
    path_history: list[dict]
    iterations: int
    rho: float
    delta: float
    endpoint_energy: float
    final_path_energies: list[float] = field(default_factory=list)
    newton_estimate: float | None = None

    def to_json(self, path) -> None:
        payload = {
            "level": self.level,
            "grad_norm": self.grad_norm,
            "iterations": self.iterations,
            "rho": self.rho,
            "delta": self.delta,
            "endpoint_energy": self.endpoint_energy,
            "u_star_min": float(np.min(self.u_star.values)),
            "u_star_max": float(np.max(self.u_star.values)),
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)


class _PathState:
    """Piecewise-linear path with per-segment located maxima.

    The located maximum of every segment is maintained incrementally
    (1-D bounded maximization on edited segments only), so the global path
    maximum is available exactly at every iteration and every edit can be
    guarded against raising it.
    """

    def __init__(self, nodes: list[np.ndarray], I_of):
        self.I_of = I_of
        self.nodes = nodes
        self.vals = [I_of(q) for q in nodes]
        self.seg_max = [self._segment_peak(i) for i in range(len(nodes) - 1)]

    def _segment_peak(self, i: int, xatol: float = 1e-6) -> tuple[float, float]:
        a, b = self.nodes[i], self.nodes[i + 1]
        res = minimize_scalar(lambda th: -self.I_of((1.0 - th) * a + th * b),
                              bounds=(0.0, 1.0), method="bounded",
                              options={"xatol": xatol, "maxiter": 60})
        cand = [(-res.fun, float(res.x)), (self.vals[i], 0.0), (self.vals[i + 1], 1.0)]
        return max(cand, key=lambda x: x[0])

    def global_max(self) -> tuple[float, int, float]:
        seg = max(range(len(self.seg_max)), key=lambda i: self.seg_max[i][0])
        val, th = self.seg_max[seg]
        return val, seg, th

    def point(self, seg: int, th: float) -> np.ndarray:
        return (1.0 - th) * self.nodes[seg] + th * self.nodes[seg + 1]

    def refine_peak(self, seg: int) -> tuple[float, float]:
        """Re-run the segment maximization at tight tolerance (used before
        certifying convergence at the located point)."""
        self.seg_max[seg] = self._segment_peak(seg, xatol=1e-12)
        return self.seg_max[seg]

    def try_replace(self, k: int, new_node: np.ndarray, new_val: float,
                    cap: float) -> bool:
        """Replace node k if the located maxima of the touched segments stay
        at or below ``cap``."""
        old_node, old_val = self.nodes[k], self.vals[k]
        self.nodes[k], self.vals[k] = new_node, new_val
        touched = [i for i in (k - 1, k) if 0 <= i < len(self.seg_max)]
        new_peaks = {i: self._segment_peak(i) for i in touched}
        if all(p[0] <= cap + 1e-12 for p in new_peaks.values()):
            for i, p in new_peaks.items():
                self.seg_max[i] = p
            return True
        self.nodes[k], self.vals[k] = old_node, old_val
        return False

    def try_insert(self, seg: int, new_node: np.ndarray, new_val: float,
                   cap: float) -> bool:
        """Insert a node inside ``seg`` under the same guard."""
        peaks = []
        for a, b, va, vb in ((self.nodes[seg], new_node, self.vals[seg], new_val),
                             (new_node, self.nodes[seg + 1], new_val, self.vals[seg + 1])):
            res = minimize_scalar(lambda th: -self.I_of((1.0 - th) * a + th * b),
                                  bounds=(0.0, 1.0), method="bounded",
                                  options={"xatol": 1e-6, "maxiter": 60})
            peaks.append(max([(-res.fun, float(res.x)), (va, 0.0), (vb, 1.0)],
                             key=lambda x: x[0]))
        if not all(p[0] <= cap + 1e-12 for p in peaks):
            return False
        self.nodes.insert(seg + 1, new_node)
        self.vals.insert(seg + 1, new_val)
        self.seg_max[seg:seg + 1] = peaks
        return True

    def try_drop(self, cap: float, keep: set[int]) -> bool:
        """Drop one interior node (lowest energy first) whose merged
        segment stays below ``cap``."""
        order = sorted((v, k) for k, v in enumerate(self.vals)
                       if 0 < k < len(self.nodes) - 1 and k not in keep)
        for _, k in order:
            a, b = self.nodes[k - 1], self.nodes[k + 1]
            res = minimize_scalar(lambda th: -self.I_of((1.0 - th) * a + th * b),
                                  bounds=(0.0, 1.0), method="bounded",
                                  options={"xatol": 1e-6, "maxiter": 60})
            peak = max([(-res.fun, float(res.x)), (self.vals[k - 1], 0.0),
                        (self.vals[k + 1], 1.0)], key=lambda x: x[0])
            if peak[0] <= cap + 1e-12:
                del self.nodes[k], self.vals[k]
                self.seg_max[k - 1:k + 1] = [peak]
                return True
        return False

    def segment_lengths(self, A: DiscreteOperator) -> list[float]:
        out = []
        for a, b in zip(self.nodes[:-1], self.nodes[1:]):
            d = b - a
            out.append(math.sqrt(max(energy_product_values(A, d, d), 0.0)))
        return out

    def resplined(self, n_points: int, A: DiscreteOperator,
                  focus_delta: float | None = None) -> "_PathState":
        """Arc-length re-parameterization in the energy norm.

        With ``focus_delta`` the node density is graded geometrically about
        the located maximum, with innermost spacing ``focus_delta``; the
        gradient of the located crossing is polluted by the distance to its
        straddling nodes, so uniform spacing alone floors the achievable
        gradient norm at the order of one segment length.
        """
        seg_len = self.segment_lengths(A)
        cum = np.concatenate([[0.0], np.cumsum(seg_len)])
        total = cum[-1]
        if total == 0.0:
            return _PathState([self.nodes[0].copy() for _ in range(n_points)], self.I_of)
        if focus_delta is None:
            targets = np.linspace(0.0, total, n_points)
        else:
            _, seg, th = self.global_max()
            s_star = cum[seg] + th * seg_len[seg]
            targets = _graded_positions(total, s_star, n_points, focus_delta)
        out = []
        j = 0
        for s in targets:
            while j < len(seg_len) - 1 and cum[j + 1] < s:
                j += 1
            th = (s - cum[j]) / max(seg_len[j], 1e-300)
            out.append((1.0 - min(th, 1.0)) * self.nodes[j]
                       + min(th, 1.0) * self.nodes[j + 1])
        out[0] = self.nodes[0].copy()
        out[-1] = self.nodes[-1].copy()
        return _PathState(out, self.I_of)


def _graded_positions(total: float, s_star: float, n_points: int,
                      delta: float) -> np.ndarray:
    """Arc positions geometrically graded about s_star with innermost
    spacing ``delta``, always including both endpoints."""
    delta = min(max(delta, 1e-12 * total), total / n_points)
    m = max(3, (n_points - 3) // 2)
    span = max(total - s_star, s_star, delta)
    ratio = max(1.5, (span / delta) ** (1.0 / m))
    offs = [0.0]
    d = delta
    for _ in range(m + 2):
        offs.append(offs[-1] + d)
        d *= ratio
        if offs[-1] > span:
            break
    pos = {0.0, total}
    for o in offs:
        pos.add(min(total, max(0.0, s_star + o)))
        pos.add(min(total, max(0.0, s_star - o)))
    pos = sorted(pos)
    # top up with uniform positions if grading used fewer than n_points
    k = 1
    while len(pos) < n_points and k < 4 * n_points:
        cand = total * k / (4.0 * n_points)
        if all(abs(cand - p) > 0.25 * delta for p in pos):
            pos.append(cand)
            pos.sort()
        k += 1
    return np.asarray(pos[: max(n_points, len(pos))])


def mp_solve(A: DiscreteOperator, spec: NonlinearitySpec, path_points: int = 21,
             tol: float = 1e-6, max_iter: int = 3000, seed: int = 0,
             n_geometry_dirs: int = 50) -> MPResult:
    """Path-deformation mountain pass.

    The segment from 0 to the endpoint is discretized into ``path_points``
    states.  Each iteration locates the maximum of the piecewise-linear
    path, steps that point along the negative Riesz (energy) gradient with
    an Armijo backtracking line search, writes the moved point back into
    the path (replacing the nearer segment endpoint, or splitting the
    segment when replacement would raise a located maximum), and re-splines
    to uniform arc length in the energy norm whenever the spacing has
    degenerated.  Every edit is guarded so the located path maximum is
    nonincreasing across iterations by construction.  Terminates when the
    located maximum's energy-dual gradient norm is at most ``tol``.
    """
    grid = A.grid
    rho, delta = mountain_pass_geometry(spec, A, n_dirs=n_geometry_dirs, seed=seed)
    eig = first_eigenvalue(A)
    report = validate_conditions(spec, eig.lam1)
    if not report.mountain_pass_ready:
        raise SolverError(f"nonlinearity fails the structural checks: {report}")
    e = find_endpoint(spec, eig.eigenfunction)
    e_energy = energy(e, spec)

    def I_of(vals: np.ndarray) -> float:
        try:
            return _energy_values(grid, A, vals, spec)
        except RangeOverflowError:
            return math.inf

    state = _PathState([t * e.values for t in np.linspace(0.0, 1.0, path_points)], I_of)
    history: list[dict] = []
    riesz_guess = None
    step = 1.0
    gn_prev = math.inf
    ls_failures = 0
    gn = math.inf
    last_respline_gn = math.inf

    for it in range(1, max_iter + 1):
        m_val, seg, theta = state.global_max()
        p_star = state.point(seg, theta)
        g = A.matvec(p_star)
        g[1:-1, 1:-1] -= spec.f(p_star)[1:-1, 1:-1]
        inner_tol = min(1e-6, max(1e-11, 1e-4 * gn_prev))
        G, info = _cg(A, g, inner_tol, x0=riesz_guess)
        riesz_guess = G
        gn_sq = grid.hr * grid.hy * float(np.sum(g * G))
        gn = math.sqrt(max(gn_sq, 0.0))
        if gn <= 2.0 * tol and (inner_tol > 1.1e-11 or theta not in (0.0, 1.0)):
            # certify: tighten the located point and the Riesz solve
            m_val, theta = state.refine_peak(seg)
            p_star = state.point(seg, theta)
            g = A.matvec(p_star)
            g[1:-1, 1:-1] -= spec.f(p_star)[1:-1, 1:-1]
            G, info = _cg(A, g, 1e-11, x0=G)
            riesz_guess = G
            gn_sq = grid.hr * grid.hy * float(np.sum(g * G))
            gn = math.sqrt(max(gn_sq, 0.0))
        gn_prev = gn
        history.append({"iteration": it, "max_energy": m_val, "grad_norm": gn,
                        "step": step, "cg_iterations": info.iterations})
        if gn <= tol:
            u_star = GridFunction(grid, p_star).with_dirichlet()
            return MPResult(u_star=u_star, level=m_val, grad_norm=gn,
                            path_history=history, iterations=it, rho=rho,
                            delta=delta, endpoint_energy=e_energy,
                            final_path_energies=list(state.vals))

        # Armijo backtracking along -G from the located maximum.  The moved
        # point replaces the nearer segment endpoint (the straddling nodes
        # must themselves contract onto the saddle); only if replacement
        # fails the guard at every step size is the point inserted instead.
        step = min(step * 2.0, 4.0)
        accepted = False
        k = seg + 1 if theta >= 0.5 else seg
        first_ok = None
        s = step
        for _ in range(45):
            trial = p_star - s * G
            val = I_of(trial)
            if val <= m_val - 1e-4 * s * gn_sq:
                if first_ok is None:
                    first_ok = (s, trial, val)
                if (0 < k < len(state.nodes) - 1
                        and state.try_replace(k, trial, val, m_val)):
                    accepted = True
                    step = s
                    break
            s *= 0.5
        if not accepted and first_ok is not None:
            s, trial, val = first_ok
            if state.try_insert(seg, trial, val, m_val):
                if len(state.nodes) > path_points:
                    state.try_drop(m_val, keep={seg, seg + 1, seg + 2})
                accepted = True
                step = s
        if not accepted:
            ls_failures += 1
            if ls_failures >= 30:
                raise SolverError(
                    "line search failed 30 times; path energies: "
                    + ", ".join(f"{v:.6g}" for v in state.vals))
            continue

        if it % 20 == 0 or gn <= 0.25 * last_respline_gn or len(state.nodes) > path_points + 6:
            candidate = state.resplined(path_points, A, focus_delta=2.0 * gn)
            if candidate.global_max()[0] <= m_val + 1e-12:
                state = candidate
                last_respline_gn = gn
    raise SolverError(f"mountain pass did not converge in {max_iter} iterations "
                      f"(grad_norm {gn:.3e})")


# ---------------------------------------------------------------------------
# Newton oracle

@dataclass
class NewtonInfo:
    iterations: int
    residual: float
    trivial: bool


def newton_refine(u0: GridFunction, spec: NonlinearitySpec, tol: float = 1e-9,
                  max_iter: int = 50, return_info: bool = False):
    """Damped Newton for A u = f(u) with the analytic Jacobian A - f'(u),
    solved by a sparse direct factorization; the independent oracle for
    mountain-pass output."""
    grid = u0.grid
    A = _op_for(grid)
    L = A.interior_matrix()
    ni, nj = grid.nr - 2, grid.ny - 2
    u = u0.values.copy()
    u[0, :] = u[-1, :] = 0.0
    u[:, 0] = u[:, -1] = 0.0

    def residual_norm(vals) -> tuple[float, np.ndarray]:
        res = A.matvec(vals)
        res[1:-1, 1:-1] -= spec.f(vals)[1:-1, 1:-1]
        return math.sqrt(l2_product(grid, res, res)), res

    rn, res = residual_norm(u)
    for it in range(max_iter):
        if rn <= tol:
            out = GridFunction(grid, u, boundary_flag=True)
            trivial = math.sqrt(l2_product(grid, u, u)) < 1e-8
            info = NewtonInfo(iterations=it, residual=rn, trivial=trivial)
            return (out, info) if return_info else out
        J = L - sp.diags(spec.fprime(u[1:-1, 1:-1]).ravel())
        delta = spla.spsolve(J.tocsc(), -res[1:-1, 1:-1].ravel()).reshape(ni, nj)
        s = 1.0
        for _ in range(40):
            trial = u.copy()
            trial[1:-1, 1:-1] += s * delta
            try:
                rn_new, res_new = residual_norm(trial)
            except RangeOverflowError:
                s *= 0.5
                continue
            if rn_new < (1.0 - 1e-4 * s) * rn:
                u, rn, res = trial, rn_new, res_new
                break
            s *= 0.5
        else:
            raise SolverError(f"newton damping failed at residual {rn:.3e}")
    raise SolverError(f"newton did not reach tol {tol:g} (residual {rn:.3e})")
