"""First eigenpair of the p-Laplacian on a mesh via nonlinear inverse power
iteration on the Rayleigh quotient  int |Dv|^p / int |v|^p  (lumped
denominator)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fem import InnerProblem, fem_data, gradient_lp_norm, inner_solve
from .geometry import FeFunction, InvalidParameterError, Mesh


@dataclass
class EigenPair:
    lam: float
    phi: FeFunction          # normalized: lumped int |phi|^p = 1
    rayleigh_trace: list = field(default_factory=list)
    converged: bool = True
    iterations: int = 0


def lumped_lp_norm(v: FeFunction, p: float) -> float:
    data = fem_data(v.mesh)
    return float(np.dot(data.lumped_mass, np.abs(v.values) ** p)) ** (1.0 / p)


def rayleigh(v: FeFunction, p: float) -> float:
    """Rayleigh quotient int |Dv|^p / int |v|^p; 0-homogeneous in v."""
    denom = lumped_lp_norm(v, p)
    if denom == 0.0:
        raise InvalidParameterError("rayleigh quotient of the zero function")
    return gradient_lp_norm(v, p) ** p / denom ** p


def first_eigenpair(p: float, mesh: Mesh, tol: float = 1e-8,
                    max_outer: int = 200) -> EigenPair:
    """Inverse power iteration: v_{k+1} solves -Delta_p v = |v_k|^(p-2) v_k
    (normalized), renormalized each step in the lumped L^p norm.

    The positive start keeps iterates in the positive cone; the first
    eigenfunction is simple and positive, so the iteration has a
    one-dimensional target.  Stops when successive Rayleigh quotients differ
    by less than tol * lambda.
    """
    data = fem_data(mesh)
    # positive bump start: linear torsion solve
    start = inner_solve(InnerProblem(mesh, 2.0, 1.0, tol=1e-10))
    v = start.solution.values.copy()
    v /= float(np.dot(data.lumped_mass, np.abs(v) ** p)) ** (1.0 / p)

    trace = []
    lam_prev = rayleigh(FeFunction(mesh, v), p)
    trace.append(lam_prev)
    converged = False
    it = 0
    warm = None
    for it in range(1, max_outer + 1):
        load = np.abs(v) ** (p - 1.0) * np.sign(v)
        prob = InnerProblem(mesh, p, load, Lambda=0.0, tol=min(1e-9, tol))
        rep = inner_solve(prob, warm_start=warm)
        if not rep.converged:
            break
        w = rep.solution.values.copy()
        nrm = float(np.dot(data.lumped_mass, np.abs(w) ** p)) ** (1.0 / p)
        v = w / nrm
        warm = FeFunction(mesh, v)
        lam = rayleigh(warm, p)
        trace.append(lam)
        if abs(lam - lam_prev) < tol * abs(lam):
            converged = True
            lam_prev = lam
            break
        lam_prev = lam
    phi = FeFunction(mesh, np.maximum(v, 0.0)).with_zero_boundary()
    nrm = float(np.dot(data.lumped_mass, np.abs(phi.values) ** p)) ** (1.0 / p)
    phi = FeFunction(mesh, phi.values / nrm)
    return EigenPair(lam=trace[-1], phi=phi, rayleigh_trace=trace,
                     converged=converged, iterations=it)
