"""P1 finite elements for the regularized p-Dirichlet energy

    E(v) = sum_T |T| ((|grad v|_T^2 + eps^2)^(p/2) - eps^p)/p
         + Lambda sum_i m_i |v_i|^p / p - sum_i m_i g_i v_i

with lumped masses m_i and homogeneous Dirichlet data.  The minimizer solves
the discrete counterpart of -div(|Dv|^(p-2) Dv) + Lambda |v|^(p-2) v = g.

Minimization: damped Newton with backtracking line search, continued over a
decreasing sequence of regularization parameters eps (each stage is strictly
convex), with a gradient-step fallback when the Newton system is unreliable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import FeFunction, InvalidParameterError, Mesh


# ---------------------------------------------------------------------------
# per-mesh FEM data

class FemData:
    """Precomputed geometry factors for a mesh: triangle areas, P1 basis
    gradients, and lumped nodal masses."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        nodes, tris = mesh.nodes, mesh.triangles
        p0, p1, p2 = nodes[tris[:, 0]], nodes[tris[:, 1]], nodes[tris[:, 2]]
        d1 = p1 - p0
        d2 = p2 - p0
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        self.area = 0.5 * det
        # gradients of the three barycentric basis functions, shape (t, 2, 3)
        g = np.empty((tris.shape[0], 2, 3))
        g[:, 0, 1] = d2[:, 1] / det
        g[:, 1, 1] = -d2[:, 0] / det
        g[:, 0, 2] = -d1[:, 1] / det
        g[:, 1, 2] = d1[:, 0] / det
        g[:, :, 0] = -g[:, :, 1] - g[:, :, 2]
        self.basis_grad = g
        m = np.zeros(mesh.n_nodes)
        np.add.at(m, tris.ravel(), np.repeat(self.area / 3.0, 3))
        self.lumped_mass = m
        self.free = ~mesh.boundary

    def gradients(self, values: np.ndarray) -> np.ndarray:
        """Per-triangle constant gradient of a nodal field, shape (t, 2)."""
        vt = values[self.mesh.triangles]            # (t, 3)
        return np.einsum("tdi,ti->td", self.basis_grad, vt)


_FEM_CACHE: dict[int, FemData] = {}


def fem_data(mesh: Mesh) -> FemData:
    key = id(mesh)
    data = _FEM_CACHE.get(key)
    if data is None or data.mesh is not mesh:
        data = FemData(mesh)
        _FEM_CACHE[key] = data
        if len(_FEM_CACHE) > 64:
            _FEM_CACHE.pop(next(iter(_FEM_CACHE)))
    return data


# ---------------------------------------------------------------------------
# problem description and reports

@dataclass
class InnerProblem:
    """-Delta_p v + Lambda |v|^(p-2) v = g with zero Dirichlet data."""

    mesh: Mesh
    p: float
    load: Union[FeFunction, Callable, np.ndarray, float]
    Lambda: float = 0.0
    tol: float = 1e-8
    max_iter: int = 500
    eps_final: Optional[float] = None   # default 1e-8 * mesh diameter

    def __post_init__(self):
        if not self.p > 1:
            raise InvalidParameterError(f"need p > 1, got {self.p}")
        if self.Lambda < 0:
            raise InvalidParameterError("need Lambda >= 0")
        if not self.tol > 0:
            raise InvalidParameterError("need tol > 0")

    def load_values(self) -> np.ndarray:
        g = self.load
        if isinstance(g, FeFunction):
            return g.values
        if callable(g):
            return np.asarray(g(self.mesh.nodes), dtype=float)
        if np.isscalar(g):
            return np.full(self.mesh.n_nodes, float(g))
        arr = np.asarray(g, dtype=float)
        if arr.shape != (self.mesh.n_nodes,):
            raise InvalidParameterError("load vector length must equal node count")
        return arr


@dataclass
class SolveReport:
    solution: FeFunction
    energy: float
    grad_norm: float
    iterations: int
    converged: bool
    eps_trace: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# energy, gradient, Hessian

def energy(v: FeFunction, prob: InnerProblem, eps: float = 0.0) -> float:
    data = fem_data(prob.mesh)
    return _energy_vec(v.values, prob, data, eps)


def _energy_vec(values: np.ndarray, prob: InnerProblem, data: FemData, eps: float) -> float:
    p = prob.p
    G = data.gradients(values)
    q = np.einsum("td,td->t", G, G) + eps * eps
    e_grad = float(np.dot(data.area, q ** (0.5 * p) - eps ** p)) / p
    m = data.lumped_mass
    e_zero = prob.Lambda * float(np.dot(m, np.abs(values) ** p)) / p
    e_load = float(np.dot(m * prob.load_values(), values))
    return e_grad + e_zero - e_load


def energy_gradient(v: FeFunction, prob: InnerProblem, eps: float = 0.0) -> np.ndarray:
    data = fem_data(prob.mesh)
    return _grad_vec(v.values, prob, data, eps)


def _grad_vec(values: np.ndarray, prob: InnerProblem, data: FemData, eps: float) -> np.ndarray:
    p = prob.p
    G = data.gradients(values)
    q = np.einsum("td,td->t", G, G) + eps * eps
    w = data.area * q ** (0.5 * p - 1.0)
    # per-triangle 3-vector w * B^T G scattered to nodes
    contrib = np.einsum("t,tdi,td->ti", w, data.basis_grad, G)
    grad = np.zeros(values.size)
    np.add.at(grad, data.mesh.triangles.ravel(), contrib.ravel())
    m = data.lumped_mass
    if prob.Lambda > 0:
        grad += prob.Lambda * m * np.abs(values) ** (p - 1.0) * np.sign(values)
    grad -= m * prob.load_values()
    return grad


def _hessian(values: np.ndarray, prob: InnerProblem, data: FemData, eps: float) -> sp.csr_matrix:
    p = prob.p
    tris = data.mesh.triangles
    G = data.gradients(values)
    q = np.einsum("td,td->t", G, G) + eps * eps
    qs = np.maximum(q, 1e-300)
    w1 = data.area * qs ** (0.5 * p - 1.0)
    BtB = np.einsum("tdi,tdj->tij", data.basis_grad, data.basis_grad)
    blocks = w1[:, None, None] * BtB
    if p != 2.0:
        w2 = data.area * (p - 2.0) * qs ** (0.5 * p - 2.0)
        BtG = np.einsum("tdi,td->ti", data.basis_grad, G)
        blocks = blocks + w2[:, None, None] * np.einsum("ti,tj->tij", BtG, BtG)
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    H = sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(values.size, values.size)).tocsr()
    if prob.Lambda > 0:
        # eps-safeguarded zeroth-order curvature (exact for p = 2)
        vv = values * values + eps * eps
        diag = prob.Lambda * (p - 1.0) * data.lumped_mass * vv ** (0.5 * p - 1.0)
        H = H + sp.diags(diag)
    return H


# ---------------------------------------------------------------------------
# solver

_LINEAR_CACHE: dict[tuple[int, float], object] = {}


def _solve_linear(prob: InnerProblem, data: FemData) -> np.ndarray:
    """p = 2: the energy is quadratic, one factorized solve suffices."""
    key = (id(prob.mesh), prob.Lambda)
    lu = _LINEAR_CACHE.get(key)
    if lu is None:
        H = _hessian(np.zeros(prob.mesh.n_nodes), prob, data, 0.0)
        free = data.free
        lu = spla.splu(H[free][:, free].tocsc())
        _LINEAR_CACHE[key] = lu
        if len(_LINEAR_CACHE) > 64:
            _LINEAR_CACHE.pop(next(iter(_LINEAR_CACHE)))
    rhs = (data.lumped_mass * prob.load_values())[data.free]
    v = np.zeros(prob.mesh.n_nodes)
    v[data.free] = lu.solve(rhs)
    return v


def inner_solve(prob: InnerProblem, warm_start: Optional[FeFunction] = None) -> SolveReport:
    """Minimize the discrete energy; eps-continuation for p != 2.

    Convergence: Euclidean norm of the free-dof energy gradient
    <= tol * (1 + |energy|).  A non-converged report carries the last iterate,
    never a fabricated solution.
    """
    data = fem_data(prob.mesh)
    p = prob.p

    if p == 2.0:
        v = _solve_linear(prob, data)
        g = _grad_vec(v, prob, data, 0.0)
        gn = float(np.linalg.norm(g[data.free]))
        e = _energy_vec(v, prob, data, 0.0)
        rhs_scale = float(np.linalg.norm(data.lumped_mass * prob.load_values()))
        ok = gn <= max(prob.tol * (1.0 + abs(e)), 1e-10 * (1.0 + rhs_scale))
        return SolveReport(FeFunction(prob.mesh, v), e, gn, 1, ok, [(0.0, gn)])

    diam = prob.mesh.diameter
    eps_final = prob.eps_final if prob.eps_final is not None else 1e-8 * diam
    eps_list = []
    e = 1e-1 * diam
    while e > eps_final * 1.0001:
        eps_list.append(e)
        e *= 0.1
    eps_list.append(eps_final)

    if warm_start is not None:
        v = warm_start.values.copy()
        v[~data.free] = 0.0
        eps_list = eps_list[-2:]
    else:
        # linear (p = 2) solve gives a well-shaped start for the continuation
        lin = InnerProblem(prob.mesh, 2.0, prob.load, Lambda=0.0)
        v = _solve_linear(lin, data)
        v[~data.free] = 0.0

    total_iters = 0
    trace = []
    converged = False
    for stage, eps in enumerate(eps_list):
        last_stage = stage == len(eps_list) - 1
        stage_tol = prob.tol if last_stage else max(prob.tol, 1e-6)
        for _ in range(prob.max_iter):
            g = _grad_vec(v, prob, data, eps)
            e_now = _energy_vec(v, prob, data, eps)
            gn = float(np.linalg.norm(g[data.free]))
            if gn <= stage_tol * (1.0 + abs(e_now)):
                break
            step = None
            try:
                H = _hessian(v, prob, data, eps)
                free = data.free
                d = spla.spsolve(H[free][:, free].tocsc(), -g[free])
                if np.all(np.isfinite(d)) and float(np.dot(d, g[free])) < 0:
                    step = d
            except Exception:
                step = None
            if step is None:
                # Barzilai-Borwein-flavored gradient fallback
                step = -g[data.free] * (1.0 / (1.0 + gn))
            # backtracking line search on the stage energy
            t = 1.0
            base = e_now
            slope = float(np.dot(step, g[data.free]))
            for _ls in range(40):
                v_try = v.copy()
                v_try[data.free] += t * step
                if _energy_vec(v_try, prob, data, eps) <= base + 1e-4 * t * slope:
                    v = v_try
                    break
                t *= 0.5
            else:
                break
            total_iters += 1
        g = _grad_vec(v, prob, data, eps)
        gn = float(np.linalg.norm(g[data.free]))
        trace.append((eps, gn))
        if last_stage:
            e_now = _energy_vec(v, prob, data, eps)
            converged = gn <= prob.tol * (1.0 + abs(e_now))
    e_final = _energy_vec(v, prob, data, eps_list[-1])
    return SolveReport(FeFunction(prob.mesh, v), e_final, gn, total_iters, converged, trace)


# ---------------------------------------------------------------------------
# norms and exponent arithmetic

def gradient_lp_norm(v: FeFunction, sigma: float) -> float:
    """(sum_T |T| |grad v|_T^sigma)^(1/sigma)."""
    if sigma < 1:
        raise InvalidParameterError(f"need sigma >= 1, got {sigma}")
    data = fem_data(v.mesh)
    G = data.gradients(v.values)
    gn = np.linalg.norm(G, axis=1)
    return float(np.dot(data.area, gn ** sigma)) ** (1.0 / sigma)


def regularity_exponent(p: float, N: int, q: float) -> tuple[float, bool]:
    """Gradient-summability exponent r = N q (p-1)/(N-q); flags r > N
    (which happens exactly when q > N/p)."""
    if not (1 <= q < N):
        raise InvalidParameterError(f"need 1 <= q < N, got q={q}, N={N}")
    r = N * q * (p - 1.0) / (N - q)
    return r, bool(r > N)
