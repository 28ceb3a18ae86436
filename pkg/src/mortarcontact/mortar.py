"""Mortar coupling on non-conforming interfaces.

The non-mortar side carries the multipliers. Each mortar face is projected
along the non-mortar face's averaged normal onto that face's plane, clipped
against it (Sutherland-Hodgman), and the overlap polygons are fanned into
triangles integrated with a degree-5 rule. D integrates the non-mortar basis
over the whole face; M integrates the projected mortar basis over the overlap.
Both use the flattened in-plane measure so that full coverage reproduces
constants: D 1 - M 1 = 0.

Contact frame convention: the frame normal is the *negated* averaged outward
normal of the non-mortar side, so an opening gap has g_N > 0 and a compressive
traction has t_N < 0. The multiplier is the traction exerted by the non-mortar
side on the mortar side; the displacement residual sees it through
B1 = [D^T; -M^T].
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import AssemblyError, ProjectionError
from .mesh import InterfaceTopology, quad_shape, quad_shape_grad
from .quadrature import gauss_quad, triangle_points

_SLIVER_FACTOR = 1e-12  # overlap polygons below this fraction of the face area are dropped
_NEWTON_TOL = 1e-12
_NEWTON_MAX = 20


def averaged_nodal_normals(nodes: np.ndarray, quads: np.ndarray) -> dict[int, np.ndarray]:
    """Averaged outward normals at the nodes of an oriented quad patch.

    Per-face normals (diagonal cross product, normalized) are summed at each
    node and renormalized. A vanishing sum means incompatible orientations.
    """
    xyz = nodes[quads]
    fn = np.cross(xyz[:, 2] - xyz[:, 0], xyz[:, 3] - xyz[:, 1])
    norms = np.linalg.norm(fn, axis=1)
    if (norms <= 0).any():
        raise ProjectionError("degenerate face normal in interface patch")
    fn /= norms[:, None]
    acc: dict[int, np.ndarray] = {}
    for f, q in enumerate(quads):
        for n in q:
            acc.setdefault(int(n), np.zeros(3))
            acc[int(n)] += fn[f]
    out = {}
    for n, v in acc.items():
        nv = np.linalg.norm(v)
        if nv < 1e-8:
            raise ProjectionError(f"averaged normal vanishes at node {n} (folded patch)")
        out[n] = v / nv
    return out


def householder_frame(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal tangents for a unit normal.

    Householder reflection pinned to the dominant axis; the images of the two
    least-aligned coordinate axes span the tangent plane.
    """
    n = np.asarray(normal, dtype=float)
    j = int(np.argmax(np.abs(n)))
    s = 1.0 if n[j] >= 0 else -1.0
    w = n.copy()
    w[j] += s
    H = np.eye(3) - 2.0 * np.outer(w, w) / (w @ w)
    cols = [k for k in range(3) if k != j]
    return H[:, cols[0]], H[:, cols[1]]


def polygon_area(poly: np.ndarray) -> float:
    """Signed shoelace area of a 2D polygon (k, 2)."""
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def clip_convex(subject: np.ndarray, clip: np.ndarray, eps: float) -> np.ndarray:
    """Sutherland-Hodgman clip of a polygon against a convex CCW polygon."""
    out = [p for p in np.asarray(subject, dtype=float)]
    nc = clip.shape[0]
    for i in range(nc):
        if not out:
            break
        a = clip[i]
        d = clip[(i + 1) % nc] - a
        inp = out
        out = []
        prev = inp[-1]
        sp = d[0] * (prev[1] - a[1]) - d[1] * (prev[0] - a[0])
        for cur in inp:
            sc = d[0] * (cur[1] - a[1]) - d[1] * (cur[0] - a[0])
            if sc >= -eps:
                if sp < -eps:
                    t = sp / (sp - sc)
                    out.append(prev + t * (cur - prev))
                out.append(cur)
            elif sp >= -eps:
                t = sp / (sp - sc)
                out.append(prev + t * (cur - prev))
            prev, sp = cur, sc
    if not out:
        return np.empty((0, 2))
    # drop consecutive duplicates left by touching edges
    dedup = [out[0]]
    tol = np.sqrt(eps)
    for p in out[1:]:
        if np.linalg.norm(p - dedup[-1]) > tol:
            dedup.append(p)
    if len(dedup) > 1 and np.linalg.norm(dedup[0] - dedup[-1]) <= tol:
        dedup.pop()
    return np.array(dedup)


def inverse_bilinear(quad2d: np.ndarray, pts: np.ndarray, scale: float) -> np.ndarray:
    """Reference coordinates of 2D points under the bilinear map of quad2d.

    Newton iteration from the center; tolerance 1e-12 relative to the face
    scale, at most 20 iterations.
    """
    pts = np.atleast_2d(pts)
    xi = np.zeros_like(pts)
    tol = _NEWTON_TOL * max(scale, 1e-300)
    for _ in range(_NEWTON_MAX):
        res = quad_shape(xi) @ quad2d - pts
        if np.abs(res).max() <= tol:
            return xi
        g = quad_shape_grad(xi)  # (k, 4, 2)
        jac = np.einsum("kia,id->kda", g, quad2d)  # d x_d / d xi_a
        xi = xi - np.linalg.solve(jac, res[:, :, None])[:, :, 0]
    res = quad_shape(xi) @ quad2d - pts
    if np.abs(res).max() <= tol:
        return xi
    raise ProjectionError("bilinear face map inversion did not converge")


@dataclass
class FacePair:
    """One clipped non-mortar/mortar overlap with its quadrature data."""

    nm_face: int
    m_face: int
    area: float
    points: np.ndarray  # (k, 2) in-plane quadrature points
    weights: np.ndarray  # (k,)
    nm_shape: np.ndarray  # (k, 4) non-mortar basis values
    m_shape: np.ndarray  # (k, 4) projected mortar basis values


@dataclass
class ProjectionMap:
    """Averaged normals, per-face contact frames, and clipped face pairs."""

    node_normals: dict[int, np.ndarray]  # outward, on non-mortar nodes
    frames: np.ndarray  # (F, 3, 3) rows: contact normal (inward), t1, t2
    origins: np.ndarray  # (F, 3) face centroids
    flat_areas: np.ndarray  # (F,) in-plane face areas
    pairs: list[FacePair] = field(default_factory=list)

    def pairs_of(self, face: int) -> list[FacePair]:
        return [p for p in self.pairs if p.nm_face == face]


def _project(points: np.ndarray, origin: np.ndarray, t1: np.ndarray, t2: np.ndarray) -> np.ndarray:
    rel = points - origin
    return np.column_stack([rel @ t1, rel @ t2])


def _is_convex_ccw(poly: np.ndarray, tol: float) -> bool:
    n = poly.shape[0]
    for i in range(n):
        a, b, c = poly[i], poly[(i + 1) % n], poly[(i + 2) % n]
        if (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]) < -tol:
            return False
    return True


def build_projection(interface: InterfaceTopology) -> ProjectionMap:
    """Averaged normals, contact frames, and clipped overlap quadrature."""
    mesh_a, mesh_b = interface.mesh_a, interface.mesh_b
    nm_quads, m_quads = interface.nm_quads, interface.m_quads
    node_normals = averaged_nodal_normals(mesh_a.nodes, nm_quads)

    F = nm_quads.shape[0]
    frames = np.empty((F, 3, 3))
    origins = np.empty((F, 3))
    flat_areas = np.empty(F)
    nm2d_all = []
    for f, quad in enumerate(nm_quads):
        avg = sum(node_normals[int(n)] for n in quad)
        nrm = np.linalg.norm(avg)
        if nrm < 1e-8:
            raise ProjectionError(f"face {f}: averaged face normal vanishes")
        n_contact = -avg / nrm  # points into the non-mortar side
        t1, t2 = householder_frame(n_contact)
        frames[f, 0], frames[f, 1], frames[f, 2] = n_contact, t1, t2
        origins[f] = mesh_a.nodes[quad].mean(axis=0)
        nm2d = _project(mesh_a.nodes[quad], origins[f], t1, t2)
        nm2d_all.append(nm2d)
        flat_areas[f] = abs(polygon_area(nm2d))

    # axis-aligned bounding boxes for candidate pairing
    nm_lo = mesh_a.nodes[nm_quads].min(axis=1)
    nm_hi = mesh_a.nodes[nm_quads].max(axis=1)
    m_lo = mesh_b.nodes[m_quads].min(axis=1)
    m_hi = mesh_b.nodes[m_quads].max(axis=1)
    pad = 0.25 * (interface.nm_diameters.mean() + interface.m_diameters.mean())

    pairs: list[FacePair] = []
    for f in range(F):
        cand = np.flatnonzero(
            (m_hi >= nm_lo[f] - pad).all(axis=1) & (m_lo <= nm_hi[f] + pad).all(axis=1)
        )
        nm2d = nm2d_all[f]
        diam = interface.nm_diameters[f]
        eps = 1e-12 * diam * diam
        clip_poly = nm2d if polygon_area(nm2d) > 0 else nm2d[::-1]
        if _is_convex_ccw(clip_poly, eps):
            clip_parts = [clip_poly]
        else:
            clip_parts = [clip_poly[[0, 1, 2]], clip_poly[[0, 2, 3]]]
        t1, t2 = frames[f, 1], frames[f, 2]
        for g in cand:
            m2d = _project(mesh_b.nodes[m_quads[g]], origins[f], t1, t2)
            for part in clip_parts:
                poly = clip_convex(m2d, part, eps)
                if poly.shape[0] < 3:
                    continue
                area = abs(polygon_area(poly))
                if area < _SLIVER_FACTOR * flat_areas[f]:
                    continue
                centroid = poly.mean(axis=0)
                pts_list, wts_list = [], []
                for k in range(poly.shape[0]):
                    tri = np.array([centroid, poly[k], poly[(k + 1) % poly.shape[0]]])
                    p, w = triangle_points(tri)
                    pts_list.append(p)
                    wts_list.append(w)
                pts = np.vstack(pts_list)
                wts = np.concatenate(wts_list)
                xi_nm = inverse_bilinear(nm2d, pts, diam)
                xi_m = inverse_bilinear(m2d, pts, diam)
                pairs.append(
                    FacePair(
                        nm_face=f,
                        m_face=int(g),
                        area=area,
                        points=pts,
                        weights=wts,
                        nm_shape=quad_shape(xi_nm),
                        m_shape=quad_shape(xi_m),
                    )
                )
    return ProjectionMap(
        node_normals=node_normals, frames=frames, origins=origins, flat_areas=flat_areas, pairs=pairs
    )


def _vectorize(scalar: sp.coo_matrix) -> sp.csr_matrix:
    """Expand a scalar coupling matrix to 3 displacement components per entry."""
    rows = np.concatenate([3 * scalar.row + c for c in range(3)])
    cols = np.concatenate([3 * scalar.col + c for c in range(3)])
    data = np.concatenate([scalar.data] * 3)
    return sp.coo_matrix((data, (rows, cols)), shape=(3 * scalar.shape[0], 3 * scalar.shape[1])).tocsr()


@dataclass
class MortarAssembly:
    """Mortar matrices and per-entity contact frames for one interface.

    Entities are non-mortar faces (P0 multipliers) or non-mortar interface
    nodes (standard nodal multipliers). D couples entities to non-mortar
    displacements, M to mortar displacements; both are (3E x 3n) sparse.
    weights holds the entity measures used to average integrated jumps.
    """

    mode: str
    interface: InterfaceTopology
    projection: ProjectionMap
    D: sp.csr_matrix
    M: sp.csr_matrix
    weights: np.ndarray
    frames: np.ndarray  # (E, 3, 3) rows: n, t1, t2
    entities: np.ndarray  # face indices (p0) or node ids (nodal)
    coverage: np.ndarray  # covered fraction per non-mortar face

    @property
    def n_entities(self) -> int:
        return self.entities.shape[0]

    def coverage_warnings(self, tol: float = 1e-8) -> list[int]:
        return [int(f) for f in np.flatnonzero(self.coverage < 1.0 - tol)]


def assemble_mortar(interface: InterfaceTopology, mode: str = "p0") -> MortarAssembly:
    """Assemble D, M, and contact frames for an interface.

    mode "p0": one vector multiplier per non-mortar face.
    mode "nodal": standard continuous multipliers at non-mortar interface
    nodes (comparison baseline; no cross-point or boundary modification).
    """
    if mode not in ("p0", "nodal"):
        raise AssemblyError(f"unknown multiplier mode {mode!r}")
    proj = build_projection(interface)
    mesh_a, mesh_b = interface.mesh_a, interface.mesh_b
    nm_quads, m_quads = interface.nm_quads, interface.m_quads
    F = nm_quads.shape[0]

    pts2, wts2 = gauss_quad(2)
    shp2 = quad_shape(pts2)
    grd2 = quad_shape_grad(pts2)

    if mode == "p0":
        ent = np.arange(F, dtype=np.int64)
        rows_of_face = {f: f for f in range(F)}
        n_ent = F
        frames = proj.frames
    else:
        ent = np.unique(nm_quads).astype(np.int64)
        node_row = {int(n): i for i, n in enumerate(ent)}
        n_ent = ent.shape[0]
        frames = np.empty((n_ent, 3, 3))
        for i, n in enumerate(ent):
            nc = -proj.node_normals[int(n)]
            t1, t2 = householder_frame(nc)
            frames[i, 0], frames[i, 1], frames[i, 2] = nc, t1, t2

    d_r, d_c, d_v = [], [], []
    # D over the full non-mortar face in its flattened plane
    for f, quad in enumerate(nm_quads):
        nm2d = _project(mesh_a.nodes[quad], proj.origins[f], proj.frames[f, 1], proj.frames[f, 2])
        jac = np.einsum("kia,id->kda", grd2, nm2d)
        det = np.abs(np.linalg.det(jac))
        nodal = np.einsum("ki,k,k->i", shp2, det, wts2)  # integral of each basis function
        if mode == "p0":
            d_r.extend([f] * 4)
            d_c.extend(int(n) for n in quad)
            d_v.extend(nodal)
        else:
            mass = np.einsum("ki,kj,k,k->ij", shp2, shp2, det, wts2)
            for a in range(4):
                for b in range(4):
                    d_r.append(node_row[int(quad[a])])
                    d_c.append(int(quad[b]))
                    d_v.append(mass[a, b])

    m_r, m_c, m_v = [], [], []
    covered = np.zeros(F)
    for pair in proj.pairs:
        covered[pair.nm_face] += pair.area
        quad_m = m_quads[pair.m_face]
        if mode == "p0":
            vals = pair.m_shape * pair.weights[:, None]  # (k, 4)
            m_r.extend([pair.nm_face] * 4)
            m_c.extend(int(n) for n in quad_m)
            m_v.extend(vals.sum(axis=0))
        else:
            quad_nm = nm_quads[pair.nm_face]
            cross = np.einsum("ki,kj,k->ij", pair.nm_shape, pair.m_shape, pair.weights)
            for a in range(4):
                for b in range(4):
                    m_r.append(node_row[int(quad_nm[a])])
                    m_c.append(int(quad_m[b]))
                    m_v.append(cross[a, b])

    D = _vectorize(sp.coo_matrix((d_v, (d_r, d_c)), shape=(n_ent, mesh_a.n_nodes)))
    M = _vectorize(sp.coo_matrix((m_v, (m_r, m_c)), shape=(n_ent, mesh_b.n_nodes)))

    d_scalar_rowsum = np.asarray(
        sp.coo_matrix((d_v, (d_r, d_c)), shape=(n_ent, mesh_a.n_nodes)).sum(axis=1)
    ).ravel()
    weights = proj.flat_areas.copy() if mode == "p0" else d_scalar_rowsum

    return MortarAssembly(
        mode=mode,
        interface=interface,
        projection=proj,
        D=D,
        M=M,
        weights=weights,
        frames=frames,
        entities=ent,
        coverage=covered / np.maximum(proj.flat_areas, 1e-300),
    )


def jump_operator(asm: MortarAssembly) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Blocks of the integrated jump rows: (D, -M) acting on each side."""
    return asm.D, -asm.M


def evaluate_gaps(asm: MortarAssembly, u_a: np.ndarray, u_b: np.ndarray):
    """Entity-averaged jump and its frame decomposition.

    Returns (g, g_N, g_T): g is (E, 3) = (D u_a - M u_b) / weight, g_N = g.n
    (positive when opening), g_T = tangential part.
    """
    raw = (asm.D @ u_a - asm.M @ u_b).reshape(-1, 3)
    g = raw / asm.weights[:, None]
    n = asm.frames[:, 0, :]
    g_n = np.einsum("ed,ed->e", g, n)
    g_t = g - g_n[:, None] * n
    return g, g_n, g_t


def face_pair_table(asm: MortarAssembly):
    """Rows for the diagnostic face-pair CSV dump."""
    header = ["nm_face", "m_face", "overlap_area", "nm_coverage"]
    rows = [
        (p.nm_face, p.m_face, p.area, asm.coverage[p.nm_face])
        for p in asm.projection.pairs
    ]
    return header, rows
