"""Numeric verification of integral identities, inequalities and qualitative
properties of computed solutions: Pohozaev, Picone, energy identity, weak
comparison, Hopf boundary positivity, near-boundary cone monotonicity, and the
torsion-comparison boundary gradient bound."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .eigen import EigenPair
from .fem import (InnerProblem, energy_gradient, fem_data, gradient_lp_norm,
                  inner_solve)
from .geometry import (Ball, ConvexPolygon2D, FeFunction, InvalidParameterError,
                       Mesh, distance_to_boundary, inward_normal)
from .nonlinearity import Nonlinearity


@dataclass
class IdentityReport:
    name: str
    left: float
    right: float
    residual: float
    relative: float
    passed: bool
    tolerance: float
    notes: str = ""

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _report(name, left, right, tol, floor=1e-12, notes="") -> IdentityReport:
    resid = abs(left - right)
    rel = resid / max(abs(left), abs(right), floor)
    return IdentityReport(name, float(left), float(right), float(resid),
                          float(rel), bool(rel <= tol), tol, notes)


def _domain_centroid(mesh: Mesh) -> np.ndarray:
    if isinstance(mesh.domain, Ball):
        return np.zeros(2)
    if isinstance(mesh.domain, ConvexPolygon2D):
        return mesh.domain.centroid
    a = mesh.areas
    tri_c = mesh.nodes[mesh.triangles].mean(axis=1)
    return (a[:, None] * tri_c).sum(axis=0) / a.sum()


def _boundary_edge_data(mesh: Mesh):
    """Per boundary edge: endpoints, midpoint, length, outward unit normal,
    adjacent triangle index."""
    out = []
    for a, b, it in mesh.boundary_edges():
        pa, pb = mesh.nodes[a], mesh.nodes[b]
        e = pb - pa
        ln = float(np.linalg.norm(e))
        # triangle is on the left of a->b, so the outward normal is the right rotation
        n = np.array([e[1], -e[0]]) / ln
        out.append((a, b, 0.5 * (pa + pb), ln, n, it))
    return out


def pohozaev_residual(u: FeFunction, f: Nonlinearity, p: float,
                      tol: float = 0.05) -> IdentityReport:
    """Domain side  N int F(u) - (N-p)/p int f(u) u  against the boundary side
    (p-1)/p int |du/dnu|^p (x . nu) ds, with x anchored at the domain centroid.

    The boundary flux is recovered variationally: the discrete residual at a
    boundary node equals int_dOmega |du/dnu|^(p-2) du/dnu phi_i ds, so dividing
    by the lumped boundary length gives a superconvergent |du/dnu|^(p-1)."""
    mesh = u.mesh
    N = 2
    data = fem_data(mesh)
    m = data.lumped_mass
    vals = u.values
    Fv = np.array([f.F(float(s)) for s in vals])
    left = N * float(np.dot(m, Fv)) - (N - p) / p * float(np.dot(m, f(vals) * vals))
    centroid = _domain_centroid(mesh)
    prob = InnerProblem(mesh, p, f(vals))
    resid = energy_gradient(FeFunction(mesh, vals), prob)
    blen = np.zeros(mesh.n_nodes)
    nu_acc = np.zeros((mesh.n_nodes, 2))
    warn = ""
    for a, b, mid, ln, nu, it in _boundary_edge_data(mesh):
        xn = float((mid - centroid) @ nu)
        if xn <= 0:
            warn = "non-star-shaped boundary edge encountered (x.nu <= 0)"
        for i in (a, b):
            blen[i] += 0.5 * ln
            nu_acc[i] += 0.5 * ln * nu
    bn = np.where(mesh.boundary)[0]
    w = resid[bn] / blen[bn]                     # ~ |du/dnu|^(p-1)
    nu_node = nu_acc[bn] / blen[bn][:, None]
    xn_node = np.einsum("ij,ij->i", mesh.nodes[bn] - centroid, nu_node)
    right = (p - 1.0) / p * float(
        np.sum(np.abs(w) ** (p / (p - 1.0)) * xn_node * blen[bn]))
    return _report("pohozaev", left, right, tol, notes=warn)


def picone_value(u: FeFunction, f: Nonlinearity, p: float, eig: EigenPair,
                 tol: float = 0.02) -> IdentityReport:
    """Lumped quadrature of f(u)/u^(p-1) phi1^p over interior nodes; must not
    exceed lambda1 (up to tol).  Nodes where u is below a relative floor
    contribute 0 (both factors vanish at the boundary)."""
    mesh = u.mesh
    data = fem_data(mesh)
    interior = ~mesh.boundary
    if np.any(u.values[interior] <= 0):
        raise InvalidParameterError("picone_value needs u > 0 at interior nodes")
    floor = 1e-12 * u.sup_norm
    uv = u.values
    phi = eig.phi.values
    mask = interior & (uv > floor)
    n_floored = int(np.sum(interior) - np.sum(mask))
    integ = f(uv[mask]) / uv[mask] ** (p - 1.0) * phi[mask] ** p
    value = float(np.dot(data.lumped_mass[mask], integ))
    lam = eig.lam
    rep = IdentityReport("picone", value, lam, max(value - lam, 0.0),
                         max(value - lam, 0.0) / lam, value <= lam * (1.0 + tol),
                         tol, notes=f"{n_floored} interior nodes below floor")
    return rep


def energy_identity_residual(u: FeFunction, f: Nonlinearity, p: float,
                             tol: float = 0.01) -> IdentityReport:
    """int |Du|^p = int f(u) u for solutions of -Delta_p u = f(u)."""
    data = fem_data(u.mesh)
    left = gradient_lp_norm(u, p) ** p
    right = float(np.dot(data.lumped_mass, f(u.values) * u.values))
    return _report("energy-identity", left, right, tol)


def comparison_check(g1, g2, p: float, mesh: Mesh, tol: float = 1e-6,
                     solver_tol: float = 1e-10) -> IdentityReport:
    """Weak comparison: ordered loads give ordered solutions (Lambda = 0)."""
    p1 = InnerProblem(mesh, p, g1, tol=solver_tol)
    p2 = InnerProblem(mesh, p, g2, tol=solver_tol)
    gv1, gv2 = p1.load_values(), p2.load_values()
    if np.any(gv1 > gv2 + 1e-14) or np.any(gv1 < -1e-14):
        raise InvalidParameterError("comparison_check needs 0 <= g1 <= g2 nodewise")
    r1 = inner_solve(p1)
    r2 = inner_solve(p2)
    if not (r1.converged and r2.converged):
        return IdentityReport("comparison", math.nan, math.nan, math.nan,
                              math.nan, False, tol, notes="inner solve not converged")
    worst = float(np.max(r1.solution.values - r2.solution.values))
    scale = max(r2.solution.sup_norm, 1e-12)
    return IdentityReport("comparison", worst, 0.0, max(worst, 0.0),
                          max(worst, 0.0) / scale, worst <= tol * scale, tol)


def hopf_boundary_check(u: FeFunction, mesh: Mesh | None = None,
                        tol: float = 0.0) -> IdentityReport:
    """Minimum inward normal derivative over non-corner boundary edges;
    positive for nontrivial positive solutions."""
    mesh = mesh or u.mesh
    data = fem_data(mesh)
    G = data.gradients(u.values)
    corner_nodes: set[int] = set()
    if isinstance(mesh.domain, ConvexPolygon2D):
        verts = mesh.domain.vertices
        for i, x in enumerate(mesh.nodes):
            if np.min(np.linalg.norm(verts - x, axis=1)) < 1e-12:
                corner_nodes.add(i)
    worst = math.inf
    for a, b, mid, ln, nu, it in _boundary_edge_data(mesh):
        if a in corner_nodes or b in corner_nodes:
            continue
        inward = -float(G[it] @ nu)
        worst = min(worst, inward)
    return IdentityReport("hopf", worst, 0.0, max(-worst, 0.0),
                          max(-worst, 0.0) / max(u.sup_norm, 1e-12),
                          worst > tol, tol)


def monotonicity_diagnostic(u: FeFunction, mesh: Mesh | None = None,
                            eps: float | None = None, theta_half: float = math.pi / 6,
                            reach: float | None = None,
                            tol: float = 1e-3) -> IdentityReport:
    """Near-boundary cone monotonicity: for nodes x close to the boundary,
    values deeper inside the truncated cone around the inward normal must not
    drop below u(x) (up to tol * sup-norm).

    The cone is cut off at distance `reach` (default: the collar width eps) --
    the moving-plane mechanism is local and says nothing past the midsurface."""
    mesh = mesh or u.mesh
    d = distance_to_boundary(mesh, mesh.nodes)
    if eps is None:
        eps = 0.2 * float(np.max(d))
    if reach is None:
        reach = eps
    sup = max(u.sup_norm, 1e-300)
    cos_t = math.cos(theta_half)
    worst = 0.0
    checked = 0
    near = np.where((d < eps) & ~mesh.boundary)[0]
    for i in near:
        x = mesh.nodes[i]
        nu_in = inward_normal(mesh, x)
        rel = mesh.nodes - x
        dist = np.linalg.norm(rel, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            cosang = (rel @ nu_in) / np.where(dist > 0, dist, np.inf)
        cone = (cosang >= cos_t) & (d > d[i]) & (dist <= reach)
        if not np.any(cone):
            continue
        checked += 1
        drop = float(u.values[i] - np.min(u.values[cone]))
        worst = max(worst, drop)
    if checked == 0:
        return IdentityReport("monotonicity", math.nan, math.nan, math.nan,
                              math.nan, False, tol, notes="empty cones: mesh too coarse")
    return IdentityReport("monotonicity", worst, 0.0, worst, worst / sup,
                          worst <= tol * sup, tol,
                          notes=f"{checked} near-boundary nodes checked")


def boundary_gradient_bound(u: FeFunction, f: Nonlinearity, p: float,
                            mesh: Mesh | None = None, delta: float = 0.2,
                            tol: float = 0.05) -> IdentityReport:
    """Torsion-comparison bound: the boundary inward normal derivative of u is
    controlled by N_scale times the boundary gradient of the discrete torsion
    function v (-Delta_p v = 1), where N_scale makes N_scale^( p-1) >= sup g
    and N_scale v >= u on the inner collar boundary."""
    mesh = mesh or u.mesh
    data = fem_data(mesh)
    d = distance_to_boundary(mesh, mesh.nodes)
    collar = d <= delta
    if not np.any(collar):
        raise InvalidParameterError("delta collar contains no nodes")
    M = max(float(np.max(np.abs(u.values[collar]))),
            float(np.max(np.abs(f(u.values[collar])))))
    tors = inner_solve(InnerProblem(mesh, p, 1.0, tol=1e-10))
    v = tors.solution
    # inner collar boundary: nodes straddling dist = delta
    band = (d >= delta) & (d <= delta + 2.0 * mesh.h)
    if not np.any(band):
        band = d >= delta
    v_min = float(np.min(v.values[band]))
    if v_min <= 0:
        return IdentityReport("boundary-gradient", math.nan, math.nan, math.nan,
                              math.nan, False, tol,
                              notes="torsion minimum on collar boundary not positive")
    n_scale = max(M ** (1.0 / (p - 1.0)), M / v_min)
    Gu = data.gradients(u.values)
    Gv = data.gradients(v.values)
    max_du = 0.0
    max_dv = 0.0
    for a, b, mid, ln, nu, it in _boundary_edge_data(mesh):
        max_du = max(max_du, -float(Gu[it] @ nu))
        max_dv = max(max_dv, float(np.linalg.norm(Gv[it])))
    bound = n_scale * max_dv * (1.0 + tol)
    return IdentityReport("boundary-gradient", max_du, bound,
                          max(max_du - bound, 0.0),
                          max(max_du - bound, 0.0) / max(bound, 1e-12),
                          max_du <= bound, tol,
                          notes=f"N_scale={n_scale:.4g}")
