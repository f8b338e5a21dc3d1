"""Fixed-point existence machinery: the cone-preserving solution operator K,
the homotopy in t, relaxed Picard iteration with divergence detection, probes
for the annulus (Krasnoselskii-type) conditions, and empirical detection of
the nonexistence threshold in -Delta_p u = f(u) + lambda.

For superlinear f with f(0) = 0 the nontrivial fixed point is an index-1
saddle of the iteration: plain Picard either decays to 0 or blows up.  The
solver therefore bisects the starting amplitude between those two behaviors
(the trajectory then shadows the solution) and polishes the best iterate with
a damped Newton step on the discrete residual.  All of this is disclosed in
the returned report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .eigen import EigenPair, first_eigenpair
from .fem import InnerProblem, _grad_vec, _hessian, fem_data, inner_solve
from .geometry import FeFunction, InvalidParameterError, Mesh
from .nonlinearity import Nonlinearity, Verdict, estimate_Lambda


@dataclass
class HomotopyConfig:
    Lambda: float = 0.0
    relaxation: float = 0.5
    fp_tol: float = 1e-8
    max_outer: int = 300
    t_grid: tuple = (1.0, 0.75, 0.5, 0.25, 0.0)
    lambda_grid: tuple = (0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0)
    lambda0: float = 1.0
    solver_tol: float = 1e-10
    blowup_factor: float = 1e6
    amplitude_bisections: int = 60

    def __post_init__(self):
        if not (0 < self.relaxation <= 1):
            raise InvalidParameterError("relaxation must lie in (0, 1]")
        if not self.fp_tol > 0:
            raise InvalidParameterError("fixed-point tolerance must be positive")
        if len(self.t_grid) == 0 or list(self.t_grid) != sorted(self.t_grid, reverse=True):
            raise InvalidParameterError("t grid must be nonempty and sorted descending")
        if len(self.lambda_grid) == 0 or list(self.lambda_grid) != sorted(self.lambda_grid):
            raise InvalidParameterError("lambda grid must be nonempty and sorted ascending")


@dataclass
class BranchPoint:
    parameter: float
    solution: Optional[FeFunction]
    sup_norm: float
    residual: float
    outer_iterations: int
    converged: bool
    status: str = ""    # converged | trivial | diverged | stalled


def operator_K(u: FeFunction, f: Nonlinearity, p: float, Lambda: float,
               t: float, lambda0: float, mesh: Mesh,
               solver_tol: float = 1e-10) -> FeFunction:
    """One application of the solution operator:
    v solves -Delta_p v + Lambda v^(p-1) = f(u) + t lambda0 + Lambda u^(p-1).

    The load is nonnegative whenever Lambda >= estimate_Lambda(f, p), so v
    stays in the nonnegative cone."""
    uv = np.maximum(u.values, 0.0)
    load = f(uv) + t * lambda0 + Lambda * uv ** (p - 1.0)
    rep = inner_solve(InnerProblem(mesh, p, load, Lambda=Lambda, tol=solver_tol))
    if not rep.converged:
        raise RuntimeError("inner solve did not converge inside operator_K")
    return FeFunction(mesh, np.maximum(rep.solution.values, 0.0)).with_zero_boundary()


def _pde_residual(u: FeFunction, f: Nonlinearity, p: float, t: float,
                  lambda0: float, mesh: Mesh) -> float:
    """Relative discrete residual of -Delta_p u = f(u) + t lambda0 measured as
    a dual-scaled norm of the energy gradient."""
    data = fem_data(mesh)
    load = f(np.maximum(u.values, 0.0)) + t * lambda0
    prob = InnerProblem(mesh, p, load, Lambda=0.0)
    g = _grad_vec(u.values, prob, data, 0.0)
    scale = float(np.linalg.norm((data.lumped_mass * load)[data.free])) + 1e-300
    return float(np.linalg.norm(g[data.free])) / scale


def _newton_polish(u0: FeFunction, f: Nonlinearity, p: float, t: float,
                   lambda0: float, mesh: Mesh, tol: float = 1e-11,
                   max_iter: int = 40) -> tuple[FeFunction, float, bool]:
    """Damped Newton on the discrete system A_p(u) = M (f(u) + t lambda0).

    The Jacobian is indefinite near index-1 solutions, so a plain LU solve
    with residual-norm backtracking is used."""
    data = fem_data(mesh)
    free = data.free
    v = u0.values.copy()
    v[~free] = 0.0
    eps = 1e-10 * mesh.diameter

    def residual(vv):
        load = f(np.maximum(vv, 0.0)) + t * lambda0
        prob = InnerProblem(mesh, p, load, Lambda=0.0)
        return _grad_vec(vv, prob, data, eps)

    def fprime(vv):
        h = 1e-6 * (1.0 + np.abs(vv))
        return (f(np.maximum(vv + h, 0.0)) - f(np.maximum(vv - h, 0.0))) / (2.0 * h)

    r = residual(v)
    rn = float(np.linalg.norm(r[free]))
    scale = float(np.linalg.norm(data.lumped_mass[free])) * max(1.0, float(np.max(np.abs(f(v)))) + t * lambda0)
    for _ in range(max_iter):
        if rn <= tol * scale:
            break
        prob = InnerProblem(mesh, p, 0.0, Lambda=0.0)
        J = _hessian(v, prob, data, eps) - sp.diags(data.lumped_mass * fprime(v))
        try:
            d = spla.spsolve(J[free][:, free].tocsc(), -r[free])
        except Exception:
            break
        if not np.all(np.isfinite(d)):
            break
        step = 1.0
        improved = False
        for _ls in range(30):
            v_try = v.copy()
            v_try[free] += step * d
            r_try = residual(v_try)
            rn_try = float(np.linalg.norm(r_try[free]))
            if rn_try < rn:
                v, r, rn = v_try, r_try, rn_try
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    return FeFunction(mesh, v), rn / scale, rn <= tol * scale


def _picard_run(start: FeFunction, f: Nonlinearity, p: float, cfg: HomotopyConfig,
                mesh: Mesh, t: float, max_outer: Optional[int] = None
                ) -> tuple[str, FeFunction, int, float]:
    """Relaxed Picard iteration u <- (1-theta) u + theta K(u).

    Returns (status, best iterate by PDE residual, iterations, best residual).
    Status: 'stagnated', 'trivial', 'diverged', or 'budget'.
    The relaxation is halved when the sup-norm increments alternate sign."""
    theta = cfg.relaxation
    u = start
    ceiling = cfg.blowup_factor * (1.0 + start.sup_norm)
    best = start
    best_res = _pde_residual(start, f, p, t, cfg.lambda0, mesh)
    prev_delta = 0.0
    max_outer = max_outer if max_outer is not None else cfg.max_outer
    for it in range(1, max_outer + 1):
        Ku = operator_K(u, f, p, cfg.Lambda, t, cfg.lambda0, mesh, cfg.solver_tol)
        new_vals = (1.0 - theta) * u.values + theta * Ku.values
        new = FeFunction(mesh, new_vals)
        delta = new.sup_norm - u.sup_norm
        change = float(np.max(np.abs(new.values - u.values)))
        u = new
        if u.sup_norm > ceiling:
            return "diverged", best, it, best_res
        res = _pde_residual(u, f, p, t, cfg.lambda0, mesh)
        if res < best_res:
            best, best_res = u, res
        if change < cfg.fp_tol * max(1.0, u.sup_norm):
            if u.sup_norm <= 10.0 * cfg.fp_tol:
                return "trivial", best, it, best_res
            return "stagnated", best, it, best_res
        if prev_delta * delta < 0:
            theta = max(theta * 0.5, 0.05)
        prev_delta = delta
    if u.sup_norm <= 10.0 * cfg.fp_tol:
        return "trivial", best, it, best_res
    return "budget", best, it, best_res


def fixed_point_solve(f: Nonlinearity, p: float, cfg: HomotopyConfig, mesh: Mesh,
                      t: float = 0.0, start: Optional[FeFunction] = None,
                      eig: Optional[EigenPair] = None) -> BranchPoint:
    """Find a nontrivial fixed point of the relaxed Picard iteration.

    If the iteration from the given start decays to 0 or blows up, the
    starting amplitude along the start profile is bisected between the two
    behaviors (separatrix shooting); the best iterate is polished by Newton.
    A point is reported converged only when the PDE residual gate passes and
    the solution is positive at interior nodes."""
    if eig is None and start is None:
        eig = first_eigenpair(p, mesh, tol=1e-6)
    if start is None:
        start = FeFunction(mesh, 0.5 * eig.phi.values / max(eig.phi.sup_norm, 1e-300))
    res_gate = max(1e-6, 10.0 * cfg.fp_tol)

    status, best, iters, best_res = _picard_run(start, f, p, cfg, mesh, t)
    total_iters = iters
    candidates = [(best_res, best)]

    if status in ("trivial", "diverged", "budget") and start.sup_norm > 0:
        profile = start.values / start.sup_norm
        lo, hi = None, None   # lo -> trivial, hi -> diverged
        c = start.sup_norm
        base_status = status
        if base_status == "trivial":
            lo = c
        elif base_status == "diverged":
            hi = c
        probe_budget = 80
        c_probe = c
        while (lo is None or hi is None) and probe_budget > 0:
            probe_budget -= 1
            c_probe = c_probe * (4.0 if hi is None else 0.25)
            st, bb, its, rr = _picard_run(FeFunction(mesh, c_probe * profile),
                                          f, p, cfg, mesh, t, max_outer=cfg.max_outer)
            total_iters += its
            candidates.append((rr, bb))
            if st == "trivial":
                lo = c_probe
            elif st == "diverged":
                hi = c_probe
            elif st == "stagnated":
                lo = hi = None
                candidates.append((rr, bb))
                break
            if c_probe > 1e12 or c_probe < 1e-12:
                break
        if lo is not None and hi is not None:
            for _ in range(cfg.amplitude_bisections):
                mid = math.sqrt(lo * hi)
                st, bb, its, rr = _picard_run(FeFunction(mesh, mid * profile),
                                              f, p, cfg, mesh, t,
                                              max_outer=min(cfg.max_outer, 120))
                total_iters += its
                candidates.append((rr, bb))
                if st in ("trivial",):
                    lo = mid
                elif st == "diverged":
                    hi = mid
                else:
                    break
                if (hi - lo) / hi < 1e-14:
                    break

    best_res, best = min(candidates, key=lambda c: c[0])
    polished, res, ok = _newton_polish(best, f, p, t, cfg.lambda0, mesh)
    if ok and polished.sup_norm > 10.0 * cfg.fp_tol:
        interior = ~mesh.boundary
        positive = bool(np.all(polished.values[interior] > 0))
        if positive:
            return BranchPoint(t, polished, polished.sup_norm, res,
                               total_iters, True, "converged")
    if status == "diverged":
        return BranchPoint(t, None, math.inf, best_res, total_iters, False, "diverged")
    if status == "trivial" and best_res > res_gate:
        return BranchPoint(t, None, 0.0, best_res, total_iters, False, "trivial")
    return BranchPoint(t, best, best.sup_norm, best_res, total_iters, False, "stalled")


def krasnoselskii_probe_a(f: Nonlinearity, p: float, r: float, mesh: Mesh,
                          samples: int = 5, cfg: Optional[HomotopyConfig] = None,
                          eig: Optional[EigenPair] = None) -> Verdict:
    """Falsification probe for the small-sphere condition: run the s-scaled
    fixed-point problem -Delta_p u = s^(p-1) f(u) - Lambda (1-s^(p-1)) u^(p-1)
    from trial functions of sup-norm r and report FAILS when a near-fixed
    point with sup-norm within 10% of r emerges."""
    cfg = cfg or HomotopyConfig(Lambda=estimate_Lambda(f, p))
    if eig is None:
        eig = first_eigenpair(p, mesh, tol=1e-6)
    profile = eig.phi.values / max(eig.phi.sup_norm, 1e-300)
    for s in np.linspace(0.0, 1.0, samples):
        sp1 = s ** (p - 1.0)
        fs = Nonlinearity(
            name=f"probe-a:s={s}",
            f=lambda x, sp1=sp1: sp1 * f(x) - cfg.Lambda * (1.0 - sp1) * np.abs(x) ** (p - 1.0),
            F=lambda tt, sp1=sp1: sp1 * f.F(tt) - cfg.Lambda * (1.0 - sp1) * abs(tt) ** p / p)
        start = FeFunction(mesh, r * profile)
        probe_cfg = HomotopyConfig(Lambda=cfg.Lambda, relaxation=cfg.relaxation,
                                   fp_tol=cfg.fp_tol, max_outer=80,
                                   lambda0=0.0, solver_tol=cfg.solver_tol)
        status, best, _, best_res = _picard_run(start, fs, p, probe_cfg, mesh, 0.0)
        if status == "stagnated" and abs(best.sup_norm - r) <= 0.1 * r and best_res < 1e-4:
            return Verdict.FAILS
    return Verdict.HOLDS


def homotopy_branch(f: Nonlinearity, p: float, cfg: HomotopyConfig,
                    mesh: Mesh) -> list[BranchPoint]:
    """Continuation in t from 1 down to 0, warm-starting each solve from the
    previous branch point.  Divergence at t = 1 signals that lambda0 sits at
    or above the nonexistence threshold."""
    points: list[BranchPoint] = []
    prev: Optional[FeFunction] = None
    eig = first_eigenpair(p, mesh, tol=1e-6)
    for t in cfg.t_grid:
        start = prev if prev is not None else None
        bp = fixed_point_solve(f, p, cfg, mesh, t=t, start=start, eig=eig)
        points.append(bp)
        if bp.converged:
            prev = bp.solution
    if all(not bp.converged for bp in points):
        points[-1].status += " threshold-exceeded"
    return points


@dataclass
class LambdaMaxReport:
    lambda_hat: Optional[float]
    bracket: tuple
    lower_bound_only: bool
    anomalies: list = field(default_factory=list)
    points: list = field(default_factory=list)


def estimate_lambda_max(f: Nonlinearity, p: float, mesh: Mesh,
                        lambda_grid=None, cfg: Optional[HomotopyConfig] = None,
                        bisections: int = 10) -> LambdaMaxReport:
    """Empirical nonexistence threshold for -Delta_p u = f(u) + lambda:
    scan the lambda grid with monotone Picard from 0, bracket the first
    divergence, bisect.  Returns the bracket midpoint, or a lower-bound-only
    report when every grid point is solvable."""
    cfg = cfg or HomotopyConfig(Lambda=estimate_Lambda(f, p))
    grid = tuple(lambda_grid) if lambda_grid is not None else cfg.lambda_grid
    if list(grid) != sorted(grid) or grid[0] <= 0:
        raise InvalidParameterError("lambda grid must be sorted and positive")
    zero = FeFunction(mesh, np.zeros(mesh.n_nodes))

    def solvable(lam):
        c = HomotopyConfig(Lambda=cfg.Lambda, relaxation=cfg.relaxation,
                           fp_tol=cfg.fp_tol, max_outer=cfg.max_outer,
                           lambda0=lam, solver_tol=cfg.solver_tol)
        # loads with f(0) + lambda > 0: monotone iteration from 0 reaches the
        # minimal solution or blows up
        status, best, its, res = _picard_run(zero, f, p, c, mesh, t=1.0)
        if status == "stagnated":
            return True, best, res
        if status == "budget":
            # slow monotone convergence near the threshold: polish decides
            polished, rr, ok = _newton_polish(best, f, p, 1.0, lam, mesh)
            return bool(ok), polished if ok else best, rr
        return False, None, res

    anomalies = []
    points = []
    last_ok = 0.0
    first_bad = None
    for lam in grid:
        ok, sol, res = solvable(float(lam))
        points.append((float(lam), ok, res))
        if ok:
            if first_bad is not None:
                anomalies.append(f"solvable lambda={lam} above diverging lambda={first_bad}")
            last_ok = float(lam)
        elif first_bad is None:
            first_bad = float(lam)
    if first_bad is None:
        return LambdaMaxReport(None, (last_ok, math.inf), True, anomalies, points)
    lo = last_ok if last_ok > 0 else first_bad / 16.0
    hi = first_bad
    for _ in range(bisections):
        mid = 0.5 * (lo + hi)
        ok, _sol, res = solvable(mid)
        points.append((mid, ok, res))
        if ok:
            lo = mid
        else:
            hi = mid
    return LambdaMaxReport(0.5 * (lo + hi), (lo, hi), False, anomalies, points)


def sweep_alpha(p: float, N: int, alphas, R: float = 1.0) -> list[dict]:
    """Radial existence sweep for the log-damped critical nonlinearity across
    exponents alpha; records sup-norms and hypothesis verdicts per alpha."""
    from .nonlinearity import classify, log_critical
    from .radial import NoSolutionFound, radial_solve_bvp
    rows = []
    for alpha in alphas:
        fn = log_critical(float(alpha), p, N)
        rep = classify(fn, p, N)
        row = {"alpha": float(alpha), "h3pp": str(rep.h3pp), "h4pp": str(rep.h4pp),
               "h5": str(rep.h5)}
        try:
            prof = radial_solve_bvp(p, N, fn, R)
            row["sup_norm"] = float(np.max(prof.values))
            row["solved"] = True
        except NoSolutionFound as exc:
            row["sup_norm"] = None
            row["solved"] = False
            row["error"] = str(exc)
        rows.append(row)
    return rows
