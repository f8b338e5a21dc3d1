"""Domains, triangular meshes and nodal function containers.

Meshes are 2D only (discs and strictly convex polygons).  Higher
dimensions are served by the radial module, where the dimension enters
the ODE as a coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay


class InvalidParameterError(ValueError):
    """Raised when a numeric parameter is outside its admissible range."""


class InvalidDomainError(ValueError):
    """Raised when a domain description is degenerate or non-convex."""


@dataclass(frozen=True)
class Ball:
    """Ball of radius R in R^N, centered at the origin."""

    N: int
    R: float

    def __post_init__(self):
        if not (isinstance(self.N, (int, np.integer)) and self.N >= 2):
            raise InvalidDomainError(f"ball dimension must be an integer >= 2, got {self.N}")
        if not self.R > 0:
            raise InvalidDomainError(f"ball radius must be positive, got {self.R}")


@dataclass(frozen=True)
class ConvexPolygon2D:
    """Strictly convex polygon, vertices in counter-clockwise order."""

    vertices: np.ndarray

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or verts.shape[0] < 3:
            raise InvalidDomainError("polygon needs >= 3 planar vertices")
        n = verts.shape[0]
        edges = np.roll(verts, -1, axis=0) - verts
        cross = edges[:, 0] * np.roll(edges, -1, axis=0)[:, 1] - edges[:, 1] * np.roll(edges, -1, axis=0)[:, 0]
        scale = np.max(np.abs(verts)) ** 2 + 1e-30
        if np.any(cross <= 1e-12 * scale):
            raise InvalidDomainError(
                "polygon must be strictly convex and counter-clockwise "
                f"(min consecutive-edge cross product {cross.min():.3e})"
            )
        verts.setflags(write=False)
        object.__setattr__(self, "vertices", verts)

    @property
    def area(self) -> float:
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        return 0.5 * float(np.sum(v[:, 0] * w[:, 1] - v[:, 1] * w[:, 0]))

    @property
    def centroid(self) -> np.ndarray:
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        cr = v[:, 0] * w[:, 1] - v[:, 1] * w[:, 0]
        return (v + w).T @ cr / (6.0 * self.area)


Domain = Ball | ConvexPolygon2D


@dataclass(frozen=True)
class Mesh:
    """P1 triangulation: node coordinates, triangle index triples, boundary flags.

    Triangles are positively oriented.  Immutable after construction; safe to
    share read-only across parallel solves.
    """

    nodes: np.ndarray          # (n, 2)
    triangles: np.ndarray      # (t, 3) int
    boundary: np.ndarray       # (n,) bool
    domain: Domain | None = None

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        tris = np.ascontiguousarray(self.triangles, dtype=np.int64)
        bnd = np.ascontiguousarray(self.boundary, dtype=bool)
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise InvalidParameterError("nodes must be (n, 2)")
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise InvalidParameterError("triangles must be (t, 3)")
        if bnd.shape != (nodes.shape[0],):
            raise InvalidParameterError("boundary flag length must equal node count")
        areas = _signed_areas(nodes, tris)
        flip = areas < 0
        if np.any(flip):
            tris = tris.copy()
            tris[flip] = tris[flip][:, [0, 2, 1]]
            areas = np.abs(areas)
        if np.any(areas <= 0):
            raise InvalidDomainError("degenerate (zero-area) triangle in mesh")
        for a in (nodes, tris, bnd):
            a.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "triangles", tris)
        object.__setattr__(self, "boundary", bnd)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def areas(self) -> np.ndarray:
        return _signed_areas(self.nodes, self.triangles)

    @property
    def h(self) -> float:
        """Characteristic size: maximum edge length."""
        p = self.nodes[self.triangles]
        e = np.linalg.norm(p - np.roll(p, -1, axis=1), axis=2)
        return float(e.max())

    @property
    def diameter(self) -> float:
        lo = self.nodes.min(axis=0)
        hi = self.nodes.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    def edge_counts(self) -> dict[tuple[int, int], int]:
        """Map sorted edge -> number of adjacent triangles."""
        counts: dict[tuple[int, int], int] = {}
        for tri in self.triangles:
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (int(min(a, b)), int(max(a, b)))
                counts[key] = counts.get(key, 0) + 1
        return counts

    def boundary_edges(self) -> list[tuple[int, int, int]]:
        """Boundary edges as (a, b, adjacent_triangle), a->b counter-clockwise
        along the boundary (domain on the left)."""
        seen: dict[tuple[int, int], tuple[int, int, int]] = {}
        dup: set[tuple[int, int]] = set()
        for it, tri in enumerate(self.triangles):
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (int(min(a, b)), int(max(a, b)))
                if key in seen:
                    dup.add(key)
                else:
                    seen[key] = (int(a), int(b), it)
        return [v for k, v in seen.items() if k not in dup]


def _signed_areas(nodes: np.ndarray, tris: np.ndarray) -> np.ndarray:
    p = nodes[tris]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


@dataclass(frozen=True)
class FeFunction:
    """Nodal scalar field on a mesh."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=float)
        if vals.shape != (self.mesh.n_nodes,):
            raise InvalidParameterError(
                f"value vector length {vals.shape} must equal node count {self.mesh.n_nodes}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def with_zero_boundary(self) -> "FeFunction":
        vals = self.values.copy()
        vals[self.mesh.boundary] = 0.0
        return FeFunction(self.mesh, vals)

    def is_dirichlet_zero(self) -> bool:
        return bool(np.all(self.values[self.mesh.boundary] == 0.0))


@dataclass(frozen=True)
class RadialProfile:
    """Radial solution profile on the ball of radius R in R^N: values on a
    uniform grid r_0 = 0 < ... < r_M = R."""

    N: int
    R: float
    r: np.ndarray
    values: np.ndarray
    tol: float = 1e-6

    def __post_init__(self):
        r = np.ascontiguousarray(self.r, dtype=float)
        u = np.ascontiguousarray(self.values, dtype=float)
        if r.shape != u.shape or r.ndim != 1 or r.size < 2:
            raise InvalidParameterError("profile grid and values must be 1-D of equal length >= 2")
        dr = r[1] - r[0]
        if abs(r[0]) > 1e-14 or abs(r[-1] - self.R) > 1e-10 * max(1.0, self.R):
            raise InvalidParameterError("radial grid must start at 0 and end at R")
        if not np.allclose(np.diff(r), dr, rtol=1e-8):
            raise InvalidParameterError("radial grid must be uniform")
        # discrete symmetry at the origin: u'(0) = 0, so the first-interval
        # slope must be small against the steepest slope of the profile
        umax = float(np.max(np.abs(u)))
        max_slope = float(np.max(np.abs(np.diff(u)))) / dr
        slope_cap = max(self.tol, 0.5 * max_slope)
        if abs(u[1] - u[0]) / dr > slope_cap:
            raise InvalidParameterError("profile violates discrete symmetry at the origin")
        if abs(u[-1]) > max(self.tol, 1e-6) * max(1.0, umax):
            raise InvalidParameterError("profile must vanish at r = R within tolerance")
        for a in (r, u):
            a.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "values", u)


# ---------------------------------------------------------------------------
# mesh generation

def mesh_disc(R: float, h: float) -> Mesh:
    """Quasi-uniform triangulation of the disc of radius R with target edge
    length h (max edge <= 1.5 h).

    Nodes are placed on concentric rings (6k nodes on ring k) and connected
    by a Delaunay triangulation, which is deterministic for this layout.
    """
    if not (h > 0 and h < R):
        raise InvalidParameterError(f"need 0 < h < R, got h={h}, R={R}")
    n_r = max(2, math.ceil(R / h))
    dr = R / n_r
    pts = [np.zeros((1, 2))]
    for k in range(1, n_r + 1):
        m = 6 * k
        # stagger alternate rings for better-shaped triangles
        theta = 2.0 * np.pi * (np.arange(m) + 0.5 * (k % 2)) / m
        pts.append(k * dr * np.column_stack([np.cos(theta), np.sin(theta)]))
    nodes = np.vstack(pts)
    tri = Delaunay(nodes)
    boundary = np.linalg.norm(nodes, axis=1) > R - 0.5 * dr
    return Mesh(nodes, tri.simplices, boundary, domain=Ball(2, float(R)))


def mesh_polygon(vertices, h: float) -> Mesh:
    """Triangulate a strictly convex CCW polygon: fan from the centroid,
    then uniform refinement until the max edge length is <= 1.5 h."""
    poly = ConvexPolygon2D(np.asarray(vertices, dtype=float))
    if not h > 0:
        raise InvalidParameterError(f"need h > 0, got {h}")
    verts = poly.vertices
    n = verts.shape[0]
    centroid = poly.centroid
    nodes = np.vstack([verts, centroid[None, :]])
    tris = np.array([[i, (i + 1) % n, n] for i in range(n)], dtype=np.int64)
    boundary = np.ones(n + 1, dtype=bool)
    boundary[n] = False
    mesh = Mesh(nodes, tris, boundary, domain=poly)
    while mesh.h > 1.5 * h:
        mesh = refine(mesh)
    return mesh


def refine(mesh: Mesh) -> Mesh:
    """Uniform refinement: each triangle split in 4 via edge midpoints.

    New midpoints of boundary edges are flagged boundary; for disc domains
    they are projected back onto the circle so the boundary integrals keep
    O(h^2) accuracy.
    """
    counts = mesh.edge_counts()
    edge_index: dict[tuple[int, int], int] = {}
    mid_pts = []
    mid_bnd = []
    n0 = mesh.n_nodes
    for key, cnt in counts.items():
        edge_index[key] = n0 + len(mid_pts)
        a, b = key
        mid = 0.5 * (mesh.nodes[a] + mesh.nodes[b])
        on_boundary = cnt == 1
        if on_boundary and isinstance(mesh.domain, Ball):
            r = np.linalg.norm(mid)
            if r > 0:
                mid = mid * (mesh.domain.R / r)
        mid_pts.append(mid)
        mid_bnd.append(on_boundary)
    nodes = np.vstack([mesh.nodes, np.array(mid_pts)])
    boundary = np.concatenate([mesh.boundary, np.array(mid_bnd, dtype=bool)])
    new_tris = []
    for tri in mesh.triangles:
        i, j, k = (int(v) for v in tri)
        ij = edge_index[(min(i, j), max(i, j))]
        jk = edge_index[(min(j, k), max(j, k))]
        ki = edge_index[(min(k, i), max(k, i))]
        new_tris.extend([[i, ij, ki], [ij, j, jk], [ki, jk, k], [ij, jk, ki]])
    return Mesh(nodes, np.array(new_tris, dtype=np.int64), boundary, domain=mesh.domain)


def interpolate_radial(profile: RadialProfile, mesh: Mesh) -> FeFunction:
    """Nodal values u(|x_i|) by linear interpolation in r.

    The mesh must discretize a disc of the same radius as the profile.
    """
    if not isinstance(mesh.domain, Ball) or mesh.domain.N != 2:
        raise InvalidParameterError("interpolate_radial needs a disc mesh")
    if abs(mesh.domain.R - profile.R) > 1e-9 * max(1.0, profile.R):
        raise InvalidParameterError(
            f"radius mismatch: mesh R={mesh.domain.R}, profile R={profile.R}"
        )
    radii = np.linalg.norm(mesh.nodes, axis=1)
    vals = np.interp(radii, profile.r, profile.values)
    vals[mesh.boundary] = 0.0
    return FeFunction(mesh, vals)


# ---------------------------------------------------------------------------
# serialization: "N T B" header, node lines "x y flag", triangle lines "i j k"

def mesh_to_text(mesh: Mesh) -> str:
    lines = [f"{mesh.n_nodes} {mesh.n_triangles} {int(np.sum(mesh.boundary))}"]
    for (x, y), b in zip(mesh.nodes, mesh.boundary):
        lines.append(f"{float(x)!r} {float(y)!r} {int(b)}")
    for i, j, k in mesh.triangles:
        lines.append(f"{i} {j} {k}")
    return "\n".join(lines) + "\n"


def mesh_from_text(text: str) -> Mesh:
    rows = [ln for ln in text.strip().splitlines() if ln.strip()]
    n, t, _b = (int(v) for v in rows[0].split())
    nodes = np.empty((n, 2))
    bnd = np.empty(n, dtype=bool)
    for i in range(n):
        x, y, flag = rows[1 + i].split()
        nodes[i] = (float(x), float(y))
        bnd[i] = bool(int(flag))
    tris = np.array([[int(v) for v in rows[1 + n + j].split()] for j in range(t)], dtype=np.int64)
    return Mesh(nodes, tris, bnd)


def distance_to_boundary(mesh: Mesh, points: np.ndarray) -> np.ndarray:
    """Distance from given points to the boundary of mesh.domain."""
    pts = np.atleast_2d(points)
    dom = mesh.domain
    if isinstance(dom, Ball):
        return dom.R - np.linalg.norm(pts, axis=1)
    if isinstance(dom, ConvexPolygon2D):
        v = dom.vertices
        w = np.roll(v, -1, axis=0)
        d = np.full(pts.shape[0], np.inf)
        for a, b in zip(v, w):
            ab = b - a
            tt = np.clip((pts - a) @ ab / (ab @ ab), 0.0, 1.0)
            proj = a + tt[:, None] * ab
            d = np.minimum(d, np.linalg.norm(pts - proj, axis=1))
        return d
    raise InvalidParameterError("mesh has no domain attached")


def inward_normal(mesh: Mesh, point: np.ndarray) -> np.ndarray:
    """Unit inward normal of the nearest boundary piece at a point."""
    dom = mesh.domain
    if isinstance(dom, Ball):
        r = np.linalg.norm(point)
        if r == 0:
            return np.array([1.0, 0.0])
        return -point / r
    if isinstance(dom, ConvexPolygon2D):
        v = dom.vertices
        w = np.roll(v, -1, axis=0)
        best, best_d = None, np.inf
        for a, b in zip(v, w):
            ab = b - a
            tt = float(np.clip((point - a) @ ab / (ab @ ab), 0.0, 1.0))
            proj = a + tt * ab
            d = float(np.linalg.norm(point - proj))
            if d < best_d:
                best_d = d
                # CCW polygon: inward normal is the left-rotated edge direction
                n = np.array([-ab[1], ab[0]])
                best = n / np.linalg.norm(n)
        return best
    raise InvalidParameterError("mesh has no domain attached")
