"""
Global DOF numbering and assembly of interior and exterior contributions.

Global numbering (deterministic): interior finite element DOFs (including
all boundary traces), then the radial DOFs ``1..N+1`` of each ray sorted by
ray key, then the edge Hardy DOFs of each edge segment, then the internal
DOFs of each infinite triangle, segments taken in key order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InconsistentRays, MissingTraceData
from .exterior import segment_matrices
from .fem import FeSpace, assemble_interior, coo_to_csr, edge_matrices
from .hardy import HardyParams
from .mesh import TAG_INFLOW

CORNER_TOL = 1e-8


@dataclass
class DofMap:
    """Identification of local exterior DOFs with global indices.

    ``local_to_global[k]`` is the global index array of segment
    ``segments[k]`` in its local (radial-major) ordering.
    """

    n_fe: int
    n_ray: int
    n_edge_hardy: int
    n_corner: int
    segments: list
    local_to_global: list
    ray_dofs: dict

    @property
    def n_total(self):
        return self.n_fe + self.n_ray + self.n_edge_hardy + self.n_corner

    @property
    def n_exterior(self):
        """Hardy DOFs, i.e. every DOF not shared with the interior space."""
        return self.n_ray + self.n_edge_hardy + self.n_corner

    def counts(self):
        return {"fe": self.n_fe, "ray": self.n_ray, "edge_hardy": self.n_edge_hardy,
                "corner": self.n_corner, "total": self.n_total}


def _ray_key(k):
    return tuple(int(v) for v in k)


def build_dof_map(space: FeSpace, segments, hp: HardyParams) -> DofMap:
    """Number all DOFs; segments are processed in key order.

    Raises
    ------
    InconsistentRays
        Two segments claim the same ray with different ray vectors.
    """
    segs = sorted(segments, key=lambda s: s.key)
    p = space.order
    nr = hp.n_modes + 1
    rays = {}
    for s in segs:
        for key, r in zip(s.ray_keys, s.rays):
            key = _ray_key(key)
            if key in rays and not np.array_equal(rays[key], r):
                raise InconsistentRays(f"ray {key} has two different directions {rays[key]} and {r}")
            rays.setdefault(key, np.asarray(r))
    nxt = space.n_dofs
    ray_dofs = {}
    for key in sorted(rays):
        ray_dofs[key] = nxt + np.arange(nr)
        nxt += nr
    n_ray = nxt - space.n_dofs
    edge_hardy = {}
    for k, s in enumerate(segs):
        if s.kind != "inf_triangle":
            edge_hardy[k] = nxt + np.arange(nr * (p - 1)).reshape(nr, p - 1)
            nxt += nr * (p - 1)
    n_edge = nxt - space.n_dofs - n_ray
    l2g = []
    for k, s in enumerate(segs):
        if s.kind == "inf_triangle":
            g = np.empty((nr + 1, nr + 1), dtype=np.int64)
            g[0, 0] = s.vertices[0]
            g[1:, 0] = ray_dofs[_ray_key(s.ray_keys[0])]
            g[0, 1:] = ray_dofs[_ray_key(s.ray_keys[1])]
            g[1:, 1:] = nxt + np.arange(nr * nr).reshape(nr, nr)
            nxt += nr * nr
        else:
            g = np.empty((nr + 1, p + 1), dtype=np.int64)
            g[0] = space.edge_dofs(*s.vertices)
            g[1:, 0] = ray_dofs[_ray_key(s.ray_keys[0])]
            g[1:, p] = ray_dofs[_ray_key(s.ray_keys[1])]
            g[1:, 1:p] = edge_hardy[k]
        l2g.append(g.ravel())
    n_corner = nxt - space.n_dofs - n_ray - n_edge
    return DofMap(n_fe=space.n_dofs, n_ray=n_ray, n_edge_hardy=n_edge, n_corner=n_corner,
                  segments=segs, local_to_global=l2g, ray_dofs=ray_dofs)


@dataclass
class GlobalSystem:
    """Assembled ``S`` and ``M`` with the data needed to build right-hand sides."""

    S: sp.csr_matrix
    M: sp.csr_matrix
    space: FeSpace
    dofmap: DofMap
    hardy: HardyParams
    local: list = field(default_factory=list)

    @property
    def n_dofs(self):
        return self.S.shape[0]

    def operator(self, kappa):
        return (self.S - complex(kappa) ** 2 * self.M).tocsr()


def assemble_global(space: FeSpace, segments, dofmap: DofMap | None = None, n_by_material=None,
                    hp: HardyParams | None = None, resolvent_pad: int = 0) -> GlobalSystem:
    """Assemble ``S`` and ``M`` such that ``S - kappa^2 M`` is the discrete operator.

    ``kappa`` never enters; local blocks are merged in segment key order so the
    result does not depend on the order of ``segments``.
    """
    if hp is None:
        raise ValueError("HardyParams required")
    if dofmap is None:
        dofmap = build_dof_map(space, segments, hp)
    table = space.mesh.materials if n_by_material is None else n_by_material
    S_int, M_int = assemble_interior(space, table)
    n = dofmap.n_total
    Si = S_int.tocoo()
    Mi = M_int.tocoo()
    rows, cols, sv, mv = [Si.row], [Si.col], [Si.data], [np.zeros_like(Si.data)]
    rows.append(Mi.row)
    cols.append(Mi.col)
    sv.append(np.zeros_like(Mi.data))
    mv.append(Mi.data)
    local = []
    for seg, g in zip(dofmap.segments, dofmap.local_to_global):
        nseg = table[int(seg.material)]
        em = segment_matrices(seg, space.order, hp, nseg, pad=resolvent_pad)
        local.append((seg, em, g))
        ln = len(g)
        rows.append(np.repeat(g, ln))
        cols.append(np.tile(g, ln))
        sv.append(em.S.ravel())
        mv.append(em.M.ravel())
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    S = coo_to_csr(rows, cols, np.concatenate(sv), (n, n))
    M = coo_to_csr(rows, cols, np.concatenate(mv), (n, n))
    return GlobalSystem(S=S, M=M, space=space, dofmap=dofmap, hardy=hp, local=local)


@dataclass
class IncomingField:
    """Trace data ``(g_D, g_N)`` on inflow edges.

    Keys are oriented vertex pairs ``(v1, v2)``; the vectors hold the values at
    the ``p + 1`` trace nodes from ``v1`` to ``v2``.  ``g_N`` is the normal
    derivative along the outward normal of the interior.
    """

    edges: dict = field(default_factory=dict)

    def get(self, v1, v2):
        if (v1, v2) in self.edges:
            return self.edges[(v1, v2)]
        if (v2, v1) in self.edges:
            gD, gN = self.edges[(v2, v1)]
            return gD[::-1], gN[::-1]
        return None


def inflow_edges(system: GlobalSystem):
    """``(key, v1_xy, v2_xy, outward_normal)`` for each inflow segment."""
    out = []
    for seg, _, _ in system.local:
        if seg.kind != "inf_triangle" and seg.tag == TAG_INFLOW:
            v1, v2 = seg.points
            d = v2 - v1
            # exterior on the left of v1 -> v2
            nrm = np.array([-d[1], d[0]]) / np.hypot(*d)
            out.append((seg.vertices, v1, v2, nrm))
    return out


def incoming_from_field(system: GlobalSystem, fld) -> IncomingField:
    """Sample a field with ``__call__`` and ``gradient`` on every inflow edge."""
    from .waveguide import eval_incoming

    inc = IncomingField()
    for key, v1, v2, nrm in inflow_edges(system):
        inc.edges[key] = eval_incoming(fld, v1, v2, nrm, system.space.order)
    return inc


def apply_incoming(system: GlobalSystem, inc: IncomingField, kappa) -> np.ndarray:
    """Right-hand side of ``(S - kappa^2 M) x = rhs`` for an incoming field.

    Exterior unknowns of inflow segments represent the scattered field; the
    relation ``u_s = u - g_D`` on the trace moves ``A_E g_D`` to the right-hand
    side, and ``int g_N v`` is added on the edge.

    Raises
    ------
    MissingTraceData
        An inflow edge has no data, data is given on a non-inflow edge, or
        ``g_D`` does not vanish at a vertex shared with a non-inflow
        transparent edge.
    """
    kappa = complex(kappa)
    rhs = np.zeros(system.n_dofs, dtype=complex)
    p = system.space.order
    inflow = [(seg, em, g) for seg, em, g in system.local
              if seg.kind != "inf_triangle" and seg.tag == TAG_INFLOW]
    known = {seg.vertices for seg, _, _ in inflow} | {seg.vertices[::-1] for seg, _, _ in inflow}
    extra = [k for k in inc.edges if tuple(k) not in known]
    if extra:
        raise MissingTraceData(f"trace data on edges without inflow tag: {extra[:3]}")
    if not inflow:
        return rhs
    data = {}
    for seg, _, _ in inflow:
        d = inc.get(*seg.vertices)
        if d is None:
            raise MissingTraceData(f"inflow edge {seg.vertices} has no trace data")
        gD = np.asarray(d[0], dtype=complex).copy()
        gN = np.asarray(d[1], dtype=complex)
        if gD.shape != (p + 1,) or gN.shape != (p + 1,):
            raise MissingTraceData(f"trace data on {seg.vertices} must have {p + 1} values")
        data[seg.vertices] = (gD, gN)
    scale = max(np.abs(gD).max() for gD, _ in data.values()) or 1.0
    # vertices where inflow edges meet other transparent edges
    inflow_count = {}
    for seg, _, _ in inflow:
        for v in seg.vertices:
            inflow_count[v] = inflow_count.get(v, 0) + 1
    for seg, em, g in inflow:
        gD, gN = data[seg.vertices]
        for end, v in ((0, seg.vertices[0]), (p, seg.vertices[1])):
            if inflow_count[v] == 1:
                if abs(gD[end]) > CORNER_TOL * scale:
                    raise MissingTraceData(
                        f"g_D = {gD[end]:.3e} at corner vertex {v}; the incoming field must vanish there")
                gD[end] = 0.0
        B0, _ = edge_matrices(p, seg.h_eta)
        tr = g[:p + 1]
        rhs[tr] += B0 @ gN
        A = em.S[:, :p + 1] - kappa**2 * em.M[:, :p + 1]
        np.add.at(rhs, g, A @ gD)
    return rhs
