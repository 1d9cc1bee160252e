"""Reproducible test-function corpora shared by the test suite and the
experiment CLI.

Everything is seeded through ``numpy.random.default_rng``; two runs with
the same seed produce identical functions.
"""

from __future__ import annotations

import math

import numpy as np

from .domain import GridFunction, LogGrid
from .mellin import HalfLineFunction
from .rearrange import RadialProfile


def gaussian_bump(grid: LogGrid, center=(0.0, 0.0), sigma=1.0, amp=1.0) -> GridFunction:
    cr, cy = center

    def fn(rr, yy):
        return amp * np.exp(-((rr - cr) ** 2 + (yy - cy) ** 2) / (2.0 * sigma ** 2))

    return GridFunction.from_callable(grid, fn, dirichlet=True)


def random_bumps(grid: LogGrid, n_funcs: int, seed: int = 0,
                 nonnegative: bool = True) -> list[GridFunction]:
    """Sums of 2-4 Gaussians with centers in the middle half of the box, so
    the Dirichlet trace is zero to round-off before it is clipped exactly."""
    rng = np.random.default_rng(seed)
    r0, r1 = grid.domain.r_interval
    y0, y1 = grid.domain.y_interval
    rr, yy = grid.mesh()
    out = []
    for _ in range(n_funcs):
        vals = np.zeros_like(rr)
        for _ in range(int(rng.integers(2, 5))):
            cr = rng.uniform(r0 + 0.3 * (r1 - r0), r1 - 0.3 * (r1 - r0))
            cy = rng.uniform(y0 + 0.3 * (y1 - y0), y1 - 0.3 * (y1 - y0))
            sigma = 0.25 + 0.75 * rng.random()
            amp = 0.3 + 1.2 * rng.random()
            if not nonnegative:
                amp *= rng.choice([-1.0, 1.0])
            vals += amp * np.exp(-((rr - cr) ** 2 + (yy - cy) ** 2) / (2.0 * sigma ** 2))
        out.append(GridFunction(grid, vals).with_dirichlet())
    return out


def smooth_cap_bump(grid: LogGrid, R: float = 3.5, amp: float = 1.0,
                    center=(0.0, 0.0)) -> GridFunction:
    """Infinitely smooth bump with exact compact support in the log ball of
    radius R: amp * exp(1 - 1/(1 - (rho/R)^2))."""
    cr, cy = center

    def fn(rr, yy):
        x2 = ((rr - cr) ** 2 + (yy - cy) ** 2) / (R * R)
        inside = x2 < 1.0
        out = np.zeros_like(rr)
        with np.errstate(divide="ignore", over="ignore"):
            out[inside] = amp * np.exp(1.0 - 1.0 / (1.0 - x2[inside]))
        return out

    return GridFunction.from_callable(grid, fn, dirichlet=True)


def concentrated_bumps(grid: LogGrid, n_funcs: int, seed: int = 0) -> list[GridFunction]:
    """Sharply concentrated positive bumps: narrow enough that the
    exponential-moment integral of u / |grad u|_2 stays below 1, the regime
    in which the Luxemburg norm is dominated by the Dirichlet norm."""
    rng = np.random.default_rng(seed)
    rr, yy = grid.mesh()
    out = []
    for _ in range(n_funcs):
        vals = np.zeros_like(rr)
        for _ in range(int(rng.integers(1, 3))):
            cr = rng.uniform(-0.6, 0.6)
            cy = rng.uniform(-0.6, 0.6)
            sigma = rng.uniform(0.08, 0.14)
            amp = 0.3 + 1.2 * rng.random()
            vals += amp * np.exp(-((rr - cr) ** 2 + (yy - cy) ** 2) / (2.0 * sigma ** 2))
        out.append(GridFunction(grid, vals).with_dirichlet())
    return out


def random_sine_field(grid: LogGrid, rng: np.random.Generator, modes: int = 5,
                      amp: float = 1.0) -> GridFunction:
    """Smooth random Dirichlet function from a decaying tensor-sine
    expansion; exact zero trace."""
    r0, r1 = grid.domain.r_interval
    y0, y1 = grid.domain.y_interval
    xr = (grid.r_nodes - r0) / (r1 - r0)
    xy = (grid.y_nodes - y0) / (y1 - y0)
    vals = np.zeros((grid.nr, grid.ny))
    for k in range(1, modes + 1):
        for l in range(1, modes + 1):
            c = rng.normal() / (k * k + l * l)
            vals += c * np.outer(np.sin(np.pi * k * xr), np.sin(np.pi * l * xy))
    vals *= amp / max(np.max(np.abs(vals)), 1e-300)
    vals[0, :] = vals[-1, :] = 0.0
    vals[:, 0] = vals[:, -1] = 0.0
    return GridFunction(grid, vals, boundary_flag=True)


def mellin_gaussian_corpus(r_max: float = 8.0, n: int = 4001) -> list[HalfLineFunction]:
    """Six smooth functions decaying super-exponentially in s = ln t."""
    defs = [
        lambda t: np.exp(-np.log(t) ** 2),
        lambda t: t * np.exp(-np.log(t) ** 2),
        lambda t: np.exp(-2.0 * (np.log(t) - 1.0) ** 2),
        lambda t: np.log(t) ** 2 * np.exp(-np.log(t) ** 2),
        lambda t: np.exp(-np.log(t) ** 2) * np.cos(2.0 * np.log(t)),
        lambda t: np.exp(-(np.log(t) + 1.0) ** 2) + 0.5 * np.exp(-2.0 * (np.log(t) - 2.0) ** 2),
    ]
    return [HalfLineFunction.from_callable(f, r_max, n) for f in defs]


def radial_cap_profiles(R: float, n: int = 6001) -> list[tuple[str, RadialProfile]]:
    """Five smooth, radial, compactly supported profiles in rho <= R."""
    rho = np.linspace(1e-9, R, n)
    x = rho / R
    caps = [
        ("parabolic_sq", (1.0 - x ** 2) ** 2),
        ("parabolic_cube", (1.0 - x ** 2) ** 3),
        ("cosine_sq", np.cos(0.5 * np.pi * x) ** 2),
        ("quartic_mix", (1.0 - x ** 2) ** 2 * (1.0 + 0.5 * x ** 2)),
        ("smooth_exp", np.exp(1.0 - 1.0 / np.maximum(1.0 - x ** 2, 1e-12)) * (x < 1.0)),
    ]
    out = []
    for name, vals in caps:
        v = np.maximum(vals, 0.0)
        v[-1] = 0.0
        v = np.minimum.accumulate(v)  # enforce monotone against round-off
        out.append((name, RadialProfile(rho, v, "rho")))
    return out


def admissible_ramp_profiles(n_profiles: int, seed: int = 0, t_max: float = 40.0,
                             n_cells: int = 400) -> list[RadialProfile]:
    """Random admissible 1-D profiles: nondecreasing, w(0) = 0, derivative
    budget int (dw/dt)^2 dt scaled to a random level in (0.3, 1]."""
    rng = np.random.default_rng(seed)
    out = []
    t = np.linspace(0.0, t_max, n_cells + 1)
    dt = np.diff(t)
    for _ in range(n_profiles):
        slopes = np.abs(rng.normal(size=n_cells)) * np.exp(-t[:-1] / rng.uniform(3.0, 15.0))
        budget = float(np.sum(slopes ** 2 * dt))
        target = rng.uniform(0.3, 1.0)
        slopes *= math.sqrt(target / budget)
        w = np.concatenate([[0.0], np.cumsum(slopes * dt)])
        out.append(RadialProfile(t, w, "moser_t"))
    return out
