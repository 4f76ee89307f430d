"""
Interior triangulations, their text format, and exterior segmentations.

Mesh file grammar (UTF-8, whitespace separated, ``#`` starts a comment)::

    mesh2d 1
    v <x> <y>                 # one line per vertex
    t <i> <j> <k> <mat>       # triangle, 0-based vertex indices
    be <i> <j> <tag>          # boundary edge
    mat <id> <value>          # coefficient n of  -lap u - kappa^2 n u = 0

Boundary edge tags: ``0`` natural (sound-hard) boundary, ``1`` transparent
boundary, ``2`` transparent boundary carrying an incoming field.  The edges
with tag >= 1 must form one closed convex loop.

Material values are the coefficient ``n`` in the equation, i.e. the square
of the optical refractive index.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (DegenerateEdge, DegenerateTrapezoid, NonConvexBoundary, OpenBoundaryLoop,
                     ParseError, RayCrossing)

log = logging.getLogger(__name__)

TAG_NATURAL = 0
TAG_TRANSPARENT = 1
TAG_INFLOW = 2

STRATEGIES = ("strips_and_triangles", "trapezoids_normal_bisector", "trapezoids_reference_point")


@dataclass
class Mesh2D:
    vertices: np.ndarray
    triangles: np.ndarray
    tri_material: np.ndarray
    boundary_edges: np.ndarray
    edge_tags: np.ndarray
    materials: dict = field(default_factory=dict)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def areas(self):
        v = self.vertices[self.triangles]
        d1 = v[:, 1] - v[:, 0]
        d2 = v[:, 2] - v[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edge_triangle(self):
        """Map sorted vertex pair -> list of (triangle, local edge) pairs."""
        out = {}
        for t, tri in enumerate(self.triangles):
            for le, (a, b) in enumerate(((0, 1), (1, 2), (2, 0))):
                key = tuple(sorted((int(tri[a]), int(tri[b]))))
                out.setdefault(key, []).append((t, le))
        return out

    def coefficient(self, mat_id):
        return self.materials[int(mat_id)]


def _orient(vertices, triangles):
    v = vertices[triangles]
    d1 = v[:, 1] - v[:, 0]
    d2 = v[:, 2] - v[:, 0]
    area2 = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    neg = area2 < 0
    if np.any(neg):
        log.info("reoriented %d negatively oriented triangles", int(neg.sum()))
        triangles = triangles.copy()
        triangles[neg] = triangles[neg][:, [0, 2, 1]]
    if np.any(area2 == 0):
        raise DegenerateEdge("triangle with zero area")
    return triangles


def validate(mesh: Mesh2D) -> Mesh2D:
    """Fix orientation, check closed boundary loops and a convex transparent loop."""
    tris = _orient(mesh.vertices, np.asarray(mesh.triangles, dtype=np.int64))
    mesh = replace(mesh, triangles=tris)
    et = mesh.edge_triangle()
    for e, tag in zip(mesh.boundary_edges, mesh.edge_tags):
        key = tuple(sorted(map(int, e)))
        if key not in et or len(et[key]) != 1:
            raise OpenBoundaryLoop(f"boundary edge {key} is not a boundary edge of the triangulation")
    free = {k for k, v in et.items() if len(v) == 1}
    listed = {tuple(sorted(map(int, e))) for e in mesh.boundary_edges}
    if free != listed:
        missing = sorted(free - listed)[:3]
        raise OpenBoundaryLoop(f"triangulation boundary edges without 'be' entry, e.g. {missing}")
    deg = np.bincount(np.asarray(mesh.boundary_edges).ravel(), minlength=mesh.n_vertices)
    if np.any((deg != 0) & (deg != 2)):
        raise OpenBoundaryLoop("boundary edges do not form closed loops")
    missing = set(np.unique(mesh.tri_material).tolist()) - set(mesh.materials)
    if missing:
        from .errors import MissingMaterial
        raise MissingMaterial(f"no coefficient for material ids {sorted(missing)}")
    if np.any(mesh.edge_tags > 0):
        transparent_loop(mesh)
    return mesh


def transparent_loop(mesh: Mesh2D) -> np.ndarray:
    """Vertices of the transparent boundary in counter-clockwise order (convexity checked)."""
    sel = mesh.edge_tags > 0
    edges = np.asarray(mesh.boundary_edges)[sel]
    if len(edges) < 3:
        raise OpenBoundaryLoop("transparent boundary needs at least three edges")
    nbr = {}
    for a, b in edges:
        nbr.setdefault(int(a), []).append(int(b))
        nbr.setdefault(int(b), []).append(int(a))
    if any(len(v) != 2 for v in nbr.values()):
        raise OpenBoundaryLoop("transparent edges do not form a simple closed loop")
    start = min(nbr)
    loop = [start]
    prev, cur = None, start
    while True:
        a, b = nbr[cur]
        nxt = a if a != prev else b
        if nxt == start:
            break
        loop.append(nxt)
        prev, cur = cur, nxt
        if len(loop) > len(nbr):
            raise OpenBoundaryLoop("transparent loop does not close")
    if len(loop) != len(nbr):
        raise OpenBoundaryLoop("transparent edges form more than one loop")
    loop = np.array(loop)
    P = mesh.vertices[loop]
    area2 = np.sum(P[:, 0] * np.roll(P[:, 1], -1) - np.roll(P[:, 0], -1) * P[:, 1])
    if area2 < 0:
        loop = np.concatenate([loop[:1], loop[1:][::-1]])
        P = mesh.vertices[loop]
    d_in = P - np.roll(P, 1, axis=0)
    d_out = np.roll(P, -1, axis=0) - P
    cross = d_in[:, 0] * d_out[:, 1] - d_in[:, 1] * d_out[:, 0]
    scale = np.linalg.norm(d_in, axis=1) * np.linalg.norm(d_out, axis=1)
    if np.any(scale == 0):
        raise DegenerateEdge("zero-length boundary edge")
    if np.any(cross < -1e-12 * scale):
        raise NonConvexBoundary("transparent boundary is not convex")
    return loop


def parse_mesh(text: str) -> Mesh2D:
    """Parse the mesh text format (see module docstring)."""
    verts, tris, mats, bes, tags, table = [], [], [], [], [], {}
    header = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        col = raw.index(tok[0]) + 1
        if not header:
            if tok != ["mesh2d", "1"]:
                raise ParseError("expected header 'mesh2d 1'", lineno, col)
            header = True
            continue
        kind, args = tok[0], tok[1:]
        try:
            if kind == "v" and len(args) == 2:
                verts.append((float(args[0]), float(args[1])))
            elif kind == "t" and len(args) == 4:
                tris.append(tuple(int(a) for a in args[:3]))
                mats.append(int(args[3]))
            elif kind == "be" and len(args) == 3:
                bes.append((int(args[0]), int(args[1])))
                tags.append(int(args[2]))
            elif kind == "mat" and len(args) == 2:
                table[int(args[0])] = float(args[1])
            else:
                raise ParseError(f"unexpected record {kind!r} with {len(args)} fields", lineno, col)
        except ValueError as exc:
            raise ParseError(str(exc), lineno, col) from exc
    if not header:
        raise ParseError("empty mesh file", 1, 1)
    nv = len(verts)
    for arr, what in ((tris, "triangle"), (bes, "boundary edge")):
        for rec in arr:
            if any(i < 0 or i >= nv for i in rec):
                raise ParseError(f"{what} {rec} references a missing vertex")
    mesh = Mesh2D(vertices=np.array(verts, dtype=float).reshape(-1, 2),
                  triangles=np.array(tris, dtype=np.int64).reshape(-1, 3),
                  tri_material=np.array(mats, dtype=np.int64),
                  boundary_edges=np.array(bes, dtype=np.int64).reshape(-1, 2),
                  edge_tags=np.array(tags, dtype=np.int64),
                  materials=table)
    return validate(mesh)


def load_mesh(path) -> Mesh2D:
    return parse_mesh(Path(path).read_text(encoding="utf-8"))


def dump_mesh(mesh: Mesh2D) -> str:
    """Serialize with shortest round-trip float repr."""
    out = ["mesh2d 1"]
    out += [f"mat {k} {float(v)!r}" for k, v in sorted(mesh.materials.items())]
    out += [f"v {float(x)!r} {float(y)!r}" for x, y in mesh.vertices]
    out += [f"t {a} {b} {c} {m}" for (a, b, c), m in zip(mesh.triangles, mesh.tri_material)]
    out += [f"be {a} {b} {t}" for (a, b), t in zip(mesh.boundary_edges, mesh.edge_tags)]
    return "\n".join(out) + "\n"


def save_mesh(mesh: Mesh2D, path):
    Path(path).write_text(dump_mesh(mesh), encoding="utf-8")


def rectangle_mesh(xs, ys, material, materials, tag=None) -> Mesh2D:
    """Structured triangulation of a tensor grid.

    Parameters
    ----------
    xs, ys
        Increasing grid lines.
    material
        ``material(xc, yc) -> id`` evaluated at cell centers; ``None`` leaves
        the cell out (a hole with natural boundary).
    materials
        Material id -> coefficient ``n``.
    tag
        ``tag(x_mid, y_mid, on_outer) -> int`` for boundary edges.  Defaults to
        transparent outer boundary and natural hole boundaries.
    """
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    nx, ny = len(xs), len(ys)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    verts = np.column_stack([X.ravel(), Y.ravel()])
    vid = np.arange(nx * ny).reshape(nx, ny)
    tris, mats = [], []
    for i in range(nx - 1):
        for j in range(ny - 1):
            m = material(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]))
            if m is None:
                continue
            a, b, c, d = vid[i, j], vid[i + 1, j], vid[i + 1, j + 1], vid[i, j + 1]
            # alternate diagonals so the mesh has no preferred direction
            if (i + j) % 2 == 0:
                tris += [(a, b, c), (a, c, d)]
            else:
                tris += [(a, b, d), (b, c, d)]
            mats += [m, m]
    tris = np.array(tris, dtype=np.int64)
    used = np.unique(tris)
    remap = -np.ones(len(verts), dtype=np.int64)
    remap[used] = np.arange(len(used))
    verts = verts[used]
    tris = remap[tris]
    mesh = Mesh2D(verts, tris, np.array(mats, dtype=np.int64), np.zeros((0, 2), np.int64),
                  np.zeros(0, np.int64), dict(materials))
    return _with_boundary(mesh, tag, (xs[0], xs[-1], ys[0], ys[-1]))


def _with_boundary(mesh, tag, box):
    et = mesh.edge_triangle()
    bes, tags = [], []
    for key in sorted(k for k, v in et.items() if len(v) == 1):
        t, le = et[key][0]
        a = mesh.triangles[t][le]
        b = mesh.triangles[t][(le + 1) % 3]
        mid = 0.5 * (mesh.vertices[a] + mesh.vertices[b])
        x0, x1, y0, y1 = box
        tol = 1e-12 * max(x1 - x0, y1 - y0)
        outer = (abs(mid[0] - x0) < tol or abs(mid[0] - x1) < tol
                 or abs(mid[1] - y0) < tol or abs(mid[1] - y1) < tol)
        bes.append((a, b))
        if tag is None:
            tags.append(TAG_TRANSPARENT if outer else TAG_NATURAL)
        else:
            tags.append(int(tag(mid[0], mid[1], outer)))
    mesh = replace(mesh, boundary_edges=np.array(bes, dtype=np.int64).reshape(-1, 2),
                   edge_tags=np.array(tags, dtype=np.int64))
    return validate(mesh)


def refine_uniform(mesh: Mesh2D, times: int = 1) -> Mesh2D:
    """Split every triangle into four through its edge midpoints."""
    for _ in range(times):
        et = mesh.edge_triangle()
        keys = sorted(et)
        mid_id = {k: mesh.n_vertices + i for i, k in enumerate(keys)}
        mids = np.array([0.5 * (mesh.vertices[a] + mesh.vertices[b]) for a, b in keys]).reshape(-1, 2)
        verts = np.vstack([mesh.vertices, mids])
        new_t = []
        for tri in mesh.triangles:
            a, b, c = map(int, tri)
            ab = mid_id[tuple(sorted((a, b)))]
            bc = mid_id[tuple(sorted((b, c)))]
            ca = mid_id[tuple(sorted((c, a)))]
            new_t += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        bes, tags = [], []
        for (a, b), t in zip(mesh.boundary_edges, mesh.edge_tags):
            m = mid_id[tuple(sorted((int(a), int(b))))]
            bes += [(int(a), m), (m, int(b))]
            tags += [int(t), int(t)]
        mesh = Mesh2D(verts, np.array(new_t, dtype=np.int64), np.repeat(mesh.tri_material, 4),
                      np.array(bes, dtype=np.int64), np.array(tags, dtype=np.int64), dict(mesh.materials))
    return mesh


# --------------------------------------------------------------------------
# exterior segmentation


def rotation_matrix(v1, v2) -> np.ndarray:
    """Rotation taking the local x axis onto the direction ``v1 -> v2``."""
    dx, dy = np.asarray(v2, float) - np.asarray(v1, float)
    h = np.hypot(dx, dy)
    return np.array([[dx, -dy], [dy, dx]]) / h


def trapezoid_params(v1, v2, v3, v4):
    """Parameters ``(h_eta, h_xi, a, b, R)`` of the infinite trapezoid.

    ``v1 v2`` is the boundary edge with the exterior on its left, ``v1 v4``
    and ``v2 v3`` are the first-layer rays; ``v3 v4`` must be parallel to
    ``v1 v2``.  ``a`` and ``b`` are signed overhangs of the outer side.
    """
    v1, v2, v3, v4 = (np.asarray(v, dtype=float) for v in (v1, v2, v3, v4))
    h_eta = float(np.hypot(*(v2 - v1)))
    if h_eta == 0:
        raise DegenerateEdge("boundary edge has zero length")
    d43 = v4 - v3
    L = float(np.hypot(*d43))
    if L == 0:
        raise DegenerateTrapezoid("outer side has zero length")
    a = float(d43 @ (v2 - v3)) / L
    b = float((v3 - v4) @ (v1 - v4)) / L
    hx2 = float((v3 - v2) @ (v3 - v2)) - a * a
    if hx2 <= 0:
        raise DegenerateTrapezoid(f"nonpositive h_xi^2 = {hx2}")
    h_xi = float(np.sqrt(hx2))
    R = rotation_matrix(v1, v2)
    # outer side must be the translate of the edge at height h_xi on the left
    n_left = R @ np.array([0.0, 1.0])
    heights = ((v4 - v1) @ n_left, (v3 - v2) @ n_left)
    tol = 1e-10 * max(h_eta, h_xi)
    if abs(heights[0] - h_xi) > tol or abs(heights[1] - h_xi) > tol:
        raise DegenerateTrapezoid(f"outer side not parallel to the edge at height h_xi (heights {heights})")
    return h_eta, h_xi, a, b, R


@dataclass(frozen=True)
class ExteriorSegment:
    """One exterior piece: ``strip``, ``trapezoid`` or ``inf_triangle``.

    For strips and trapezoids ``vertices = (v1, v2)`` is the boundary edge
    (exterior on the left of ``v1 -> v2``), ``rays`` the physical ray vectors
    at ``v1`` and ``v2`` (``xi = 1`` points) and ``ray_keys`` their identities.
    For infinite triangles ``vertices = (corner,)`` and ``rays = (n1, n2)``.
    """

    kind: str
    vertices: tuple
    points: np.ndarray
    rays: np.ndarray
    ray_keys: tuple
    material: int
    tag: int = TAG_TRANSPARENT
    h_eta: float = 0.0
    h_xi: float = 0.0
    a: float = 0.0
    b: float = 0.0
    R: np.ndarray | None = None

    @property
    def key(self):
        return (self.kind,) + tuple(sorted(self.vertices)) + tuple(map(str, self.ray_keys))

    def reference_coords(self, x):
        """Reference coordinates of physical point(s) ``x``.

        Returns ``(eta, xi)`` for edge segments and ``(xi, eta)`` for triangles.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "inf_triangle":
            J = self.rays.T
            return np.linalg.solve(J, (x - self.points[0]).T).T
        loc = (x - self.points[0]) @ self.R
        xi = loc[:, 1] / self.h_xi
        eta = (loc[:, 0] + self.b * xi) / (self.h_eta + (self.a + self.b) * xi)
        return np.column_stack([eta, xi])

    def map(self, ref):
        ref = np.atleast_2d(np.asarray(ref, dtype=float))
        if self.kind == "inf_triangle":
            return self.points[0] + ref @ self.rays
        eta, xi = ref[:, 0], ref[:, 1]
        loc = np.column_stack([self.h_eta * eta - self.b * xi + (self.a + self.b) * eta * xi,
                               self.h_xi * xi])
        return self.points[0] + loc @ self.R.T

    def contains(self, x, tol=1e-12):
        ref = self.reference_coords(x)
        if self.kind == "inf_triangle":
            return np.all(ref >= -tol, axis=1)
        return (ref[:, 1] >= -tol) & (ref[:, 0] >= -tol) & (ref[:, 0] <= 1 + tol)


def _outward_normal(p, q):
    # loop is counter-clockwise, so the outward normal is on the right
    d = q - p
    L = np.hypot(*d)
    if L == 0:
        raise DegenerateEdge("zero-length boundary edge")
    return np.array([d[1], -d[0]]) / L


def build_segmentation(mesh: Mesh2D, strategy: str = "trapezoids_normal_bisector",
                       p0=None, collinear_tol: float = 1e-12) -> list[ExteriorSegment]:
    """Decompose the exterior of the transparent loop into infinite elements."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    loop = transparent_loop(mesh)
    P = mesh.vertices[loop]
    nloop = len(loop)
    et = mesh.edge_triangle()
    tag_of = {tuple(sorted(map(int, e))): int(t) for e, t in zip(mesh.boundary_edges, mesh.edge_tags)}
    normals = np.array([_outward_normal(P[k], P[(k + 1) % nloop]) for k in range(nloop)])

    def edge_material(k):
        key = tuple(sorted((int(loop[k]), int(loop[(k + 1) % nloop]))))
        t, _ = et[key][0]
        return int(mesh.tri_material[t]), tag_of[key]

    # rays[k] at loop vertex k; normals[k-1] is the edge arriving at vertex k
    corner = np.array([np.linalg.norm(normals[k - 1] - normals[k]) > collinear_tol for k in range(nloop)])
    if strategy == "trapezoids_reference_point":
        if p0 is None:
            raise ValueError("reference point strategy needs p0")
        p0 = np.asarray(p0, dtype=float)
        dist = np.array([(p0 - P[k]) @ normals[k] for k in range(nloop)])
        if np.any(dist >= 0):
            raise ValueError("reference point must lie strictly inside the polygon")
        rays = P - p0
    elif strategy == "trapezoids_normal_bisector":
        rays = np.empty_like(P)
        for k in range(nloop):
            n_in, n_out = normals[k - 1], normals[k]
            if corner[k]:
                # unit height over both adjacent edges
                rays[k] = (n_in + n_out) / (1.0 + n_in @ n_out)
            else:
                rays[k] = n_in
    segs = []
    for k in range(nloop):
        ia, ib = int(loop[k]), int(loop[(k + 1) % nloop])
        mat, tag = edge_material(k)
        # v1 = ib, v2 = ia puts the exterior on the left of v1 -> v2
        v1, v2 = P[(k + 1) % nloop], P[k]
        if strategy == "strips_and_triangles":
            r1 = r2 = normals[k]
            keys = ((ib, k) if corner[(k + 1) % nloop] else (ib, -1),
                    (ia, k) if corner[k] else (ia, -1))
            kind = "strip"
        else:
            r1, r2 = rays[(k + 1) % nloop], rays[k]
            keys = ((ib, -1), (ia, -1))
            kind = "trapezoid"
        h_eta, h_xi, a, b, R = trapezoid_params(v1, v2, v2 + r2, v1 + r1)
        if a + b < -1e-12 * h_eta:
            raise RayCrossing(f"rays of edge ({ia}, {ib}) cross at finite distance (a+b={a + b})")
        if kind == "strip":
            a = b = 0.0
        segs.append(ExteriorSegment(kind=kind, vertices=(ib, ia), points=np.array([v1, v2]),
                                    rays=np.array([r1, r2]), ray_keys=keys, material=mat, tag=tag,
                                    h_eta=h_eta, h_xi=h_xi, a=a, b=b, R=R))
    if strategy == "strips_and_triangles":
        for k in np.flatnonzero(corner):
            iv = int(loop[k])
            n1, n2 = normals[k - 1], normals[k]
            mat, _ = edge_material(k - 1)
            segs.append(ExteriorSegment(kind="inf_triangle", vertices=(iv,), points=P[k][None, :].copy(),
                                        rays=np.array([n1, n2]), ray_keys=((iv, (k - 1) % nloop), (iv, k)),
                                        material=mat, tag=TAG_TRANSPARENT))
    return sorted(segs, key=lambda s: s.key)
