"""Radial ground truth on balls in R^N, any N >= 2.

The Dirichlet problem -Delta_p u = f(u) on the ball reduces (for radially
decreasing solutions) to

    -(r^(N-1) |u'|^(p-2) u')' = r^(N-1) f(u),   u'(0) = 0, u(R) = 0.

Integrating the flux w = r^(N-1) |u'|^(p-2) u' removes both the 1/r
singularity at the origin and the |u'|^(p-2) degeneracy.  A two-term series
start handles the singular origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .geometry import InvalidParameterError, RadialProfile
from .nonlinearity import Nonlinearity


def torsion_exact(p: float, N: int, r) -> np.ndarray | float:
    """Closed-form solution of -Delta_p u = 1 on the unit ball:
    u(r) = ((p-1)/p) N^(-1/(p-1)) (1 - r^(p/(p-1)))."""
    if not p > 1:
        raise InvalidParameterError(f"need p > 1, got {p}")
    if not N >= 2:
        raise InvalidParameterError(f"need N >= 2, got {N}")
    rr = np.asarray(r, dtype=float)
    if np.any(rr < 0) or np.any(rr > 1 + 1e-14):
        raise InvalidParameterError("torsion_exact expects r in [0, 1]")
    val = (p - 1.0) / p * N ** (-1.0 / (p - 1.0)) * (1.0 - np.minimum(rr, 1.0) ** (p / (p - 1.0)))
    return float(val) if np.isscalar(r) else val


@dataclass
class ShootResult:
    """One shooting trajectory from height m at the origin."""

    m: float
    first_zero: Optional[float]     # r0(m), or None if no crossing before r_max
    half_height: Optional[float]    # radius where u first reaches m/2
    r: np.ndarray
    u: np.ndarray
    degenerate_interior: bool = False   # u' returned to 0 with u > 0


def radial_shoot(p: float, N: int, f: Nonlinearity, m: float,
                 r_max: float = 50.0, rtol: float = 1e-10) -> ShootResult:
    """Integrate the radial ODE from u(0) = m until u crosses 0 or r = r_max."""
    if not m > 0:
        raise InvalidParameterError(f"need m > 0, got {m}")
    pc = p / (p - 1.0)

    def rhs(r, y):
        u, w = y
        # w = r^(N-1)|u'|^(p-2)u'  =>  u' = sign(w)(|w|/r^(N-1))^(1/(p-1))
        up = np.sign(w) * (abs(w) / r ** (N - 1)) ** (1.0 / (p - 1.0))
        return [up, -r ** (N - 1) * float(f(max(u, 0.0)))]

    fm = float(f(m))
    if fm <= 0:
        # no descent at the start: u stays at height m (or grows); report no crossing
        r = np.array([0.0, r_max])
        return ShootResult(m, None, None, r, np.array([m, m]))

    # series start: u ~ m - c r^(p'), w ~ -f(m) r^N / N
    r0 = 1e-6 * min(1.0, r_max)
    c = (fm / N) ** (1.0 / (p - 1.0)) * (p - 1.0) / p
    u0 = m - c * r0 ** pc
    w0 = -fm * r0 ** N / N

    events_zero = lambda r, y: y[0]
    events_zero.terminal = True
    events_zero.direction = -1
    events_half = lambda r, y: y[0] - 0.5 * m
    events_half.direction = -1
    events_turn = lambda r, y: y[1]     # flux sign change: u' back to 0
    events_turn.direction = 1

    sol = solve_ivp(rhs, (r0, r_max), [u0, w0], rtol=rtol, atol=rtol * max(1.0, m) * 1e-3,
                    events=[events_zero, events_half, events_turn], dense_output=True,
                    max_step=r_max / 50.0)
    first_zero = float(sol.t_events[0][0]) if sol.t_events[0].size else None
    half = float(sol.t_events[1][0]) if sol.t_events[1].size else None
    degen = bool(sol.t_events[2].size) and (first_zero is None or
                                            float(sol.t_events[2][0]) < first_zero)
    r = np.concatenate([[0.0], sol.t])
    u = np.concatenate([[m], sol.y[0]])
    return ShootResult(m, first_zero, half, r, u, degen)


def _crossing_radius(p, N, f, m, r_max, rtol=1e-10) -> Optional[float]:
    return radial_shoot(p, N, f, m, r_max=r_max, rtol=rtol).first_zero


class NoSolutionFound(RuntimeError):
    """The shooting bracket for the requested radius never closed."""


def radial_solve_bvp(p: float, N: int, f: Nonlinearity, R: float,
                     n_grid: int = 400, m_lo: float = 1e-4, m_hi: float = 1e6,
                     rel_tol: float = 1e-8) -> RadialProfile:
    """Bisection on the shooting height m so that the first zero lands on R.

    Raises NoSolutionFound when no bracket with r0(m) straddling R exists on
    the search interval (e.g. the critical-power obstruction, where the
    trajectory never crosses zero at all).
    """
    r_max = 10.0 * R

    def gap(m):
        r0 = _crossing_radius(p, N, f, m, r_max)
        return None if r0 is None else r0 - R

    # geometric scan for a sign change
    ms = np.geomspace(m_lo, m_hi, 41)
    gaps = []
    for m in ms:
        gaps.append(gap(float(m)))
    bracket = None
    for (ma, ga), (mb, gb) in zip(zip(ms, gaps), zip(ms[1:], gaps[1:])):
        if ga is not None and gb is not None and ga * gb <= 0:
            bracket = (float(ma), float(mb))
            break
    if bracket is None:
        raise NoSolutionFound(
            f"no shooting height in [{m_lo:g}, {m_hi:g}] reaches radius {R:g}")
    a, b = bracket
    ga = gap(a)
    for _ in range(200):
        mid = math.sqrt(a * b)
        gm = gap(mid)
        if gm is None:
            raise NoSolutionFound("crossing disappeared during bisection")
        if (b - a) / b < rel_tol:
            break
        if (ga <= 0) == (gm <= 0):
            a, ga = mid, gm
        else:
            b = mid
    m_star = math.sqrt(a * b)
    shot = radial_shoot(p, N, f, m_star, r_max=r_max)
    if shot.first_zero is None:
        raise NoSolutionFound("final shot lost its zero crossing")
    # rescale the trajectory radius exactly onto [0, R] and sample uniformly
    scale = R / shot.first_zero
    grid = np.linspace(0.0, R, n_grid + 1)
    mask = shot.r * scale <= R
    rr = shot.r[mask] * scale
    uu = shot.u[mask]
    vals = np.interp(grid, np.concatenate([rr, [R]]), np.concatenate([uu, [0.0]]))
    vals[-1] = 0.0
    return RadialProfile(N, R, grid, vals, tol=1e-4)


def radial_eigen(p: float, N: int, R: float, rel_tol: float = 1e-9) -> float:
    """First Dirichlet eigenvalue of -Delta_p on the ball of radius R:
    the lambda whose shoot for f(u) = lambda |u|^(p-2) u first vanishes at R.

    By homogeneity the starting height is irrelevant; bisection on lambda.
    """
    if not p > 1:
        raise InvalidParameterError(f"need p > 1, got {p}")

    def r0(lam):
        f = Nonlinearity(
            name="eigen", f=lambda s: lam * np.abs(s) ** (p - 1.0) * np.sign(s),
            F=lambda t: lam * abs(t) ** p / p)
        return _crossing_radius(p, N, f, 1.0, r_max=20.0 * R, rtol=1e-11)

    lo, hi = 1e-3 / R ** p, 1e3 / R ** p
    # r0 is decreasing in lambda (r0 ~ lambda^(-1/p) by scaling)
    for _ in range(100):
        if (v := r0(lo)) is not None and v < R:
            lo /= 8.0
        else:
            break
    for _ in range(100):
        if (v := r0(hi)) is None or v > R:
            hi *= 8.0
        else:
            break
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        v = r0(mid)
        if v is None or v > R:
            lo = mid
        else:
            hi = mid
        if (hi - lo) / hi < rel_tol:
            break
    return math.sqrt(lo * hi)


def torsion_profile(p: float, N: int, R: float = 1.0, n_grid: int = 400) -> RadialProfile:
    """Exact torsion solution of -Delta_p u = 1 on the ball of radius R,
    rescaled from the unit-ball closed form: u_R(r) = R^(p/(p-1)) u_1(r/R)."""
    grid = np.linspace(0.0, R, n_grid + 1)
    pc = p / (p - 1.0)
    vals = R ** pc * np.asarray(torsion_exact(p, N, grid / R))
    return RadialProfile(N, R, grid, vals, tol=1e-8)
