"""Hexahedral meshes, face sets, and contact-interface topology.

Cell corner convention: the first four nodes are the bottom quadrilateral
counter-clockwise (viewed from above, i.e. from +local-zeta), the last four the
top quadrilateral in the matching order. The trilinear map must have a strictly
positive Jacobian determinant at all eight corners.

Local faces are numbered zmin, zmax, ymin, xmax, ymax, xmin and stored with an
outward-oriented node ordering.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidGeometryError
from .quadrature import gauss_quad

# Outward-oriented local faces of the reference hexahedron.
HEX_FACES = np.array(
    [
        [0, 3, 2, 1],  # 0: zeta = -1
        [4, 5, 6, 7],  # 1: zeta = +1
        [0, 1, 5, 4],  # 2: eta  = -1
        [1, 2, 6, 5],  # 3: xi   = +1
        [2, 3, 7, 6],  # 4: eta  = +1
        [3, 0, 4, 7],  # 5: xi   = -1
    ]
)

HEX_CORNERS = np.array(
    [
        [-1.0, -1.0, -1.0],
        [1.0, -1.0, -1.0],
        [1.0, 1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
        [1.0, -1.0, 1.0],
        [1.0, 1.0, 1.0],
        [-1.0, 1.0, 1.0],
    ]
)

# Face area below diam^2 * this factor counts as degenerate.
DEGENERATE_FACE_FACTOR = 1e-14


def hex_shape(points: np.ndarray) -> np.ndarray:
    """Trilinear shape functions at reference points (k, 3) -> (k, 8)."""
    p = np.atleast_2d(points)
    out = np.empty((p.shape[0], 8))
    for i, (xc, yc, zc) in enumerate(HEX_CORNERS):
        out[:, i] = 0.125 * (1 + xc * p[:, 0]) * (1 + yc * p[:, 1]) * (1 + zc * p[:, 2])
    return out


def hex_shape_grad(points: np.ndarray) -> np.ndarray:
    """Reference gradients of the trilinear shapes: (k, 8, 3)."""
    p = np.atleast_2d(points)
    out = np.empty((p.shape[0], 8, 3))
    for i, (xc, yc, zc) in enumerate(HEX_CORNERS):
        out[:, i, 0] = 0.125 * xc * (1 + yc * p[:, 1]) * (1 + zc * p[:, 2])
        out[:, i, 1] = 0.125 * yc * (1 + xc * p[:, 0]) * (1 + zc * p[:, 2])
        out[:, i, 2] = 0.125 * zc * (1 + xc * p[:, 0]) * (1 + yc * p[:, 1])
    return out


def quad_shape(points: np.ndarray) -> np.ndarray:
    """Bilinear shape functions on [-1,1]^2 at (k, 2) points -> (k, 4)."""
    p = np.atleast_2d(points)
    xi, eta = p[:, 0], p[:, 1]
    return 0.25 * np.column_stack(
        [(1 - xi) * (1 - eta), (1 + xi) * (1 - eta), (1 + xi) * (1 + eta), (1 - xi) * (1 + eta)]
    )


def quad_shape_grad(points: np.ndarray) -> np.ndarray:
    """Reference gradients of the bilinear shapes: (k, 4, 2)."""
    p = np.atleast_2d(points)
    xi, eta = p[:, 0], p[:, 1]
    g = np.empty((p.shape[0], 4, 2))
    g[:, 0, 0] = -0.25 * (1 - eta)
    g[:, 1, 0] = 0.25 * (1 - eta)
    g[:, 2, 0] = 0.25 * (1 + eta)
    g[:, 3, 0] = -0.25 * (1 + eta)
    g[:, 0, 1] = -0.25 * (1 - xi)
    g[:, 1, 1] = -0.25 * (1 + xi)
    g[:, 2, 1] = 0.25 * (1 + xi)
    g[:, 3, 1] = 0.25 * (1 - xi)
    return g


@dataclass
class Mesh:
    """Hexahedral mesh with named face sets.

    nodes: (n, 3) float64 coordinates.
    cells: (m, 8) node indices following the corner convention above.
    regions: (m,) integer material tag per cell.
    face_sets: name -> (k, 2) array of (cell index, local face index).
    characteristic_size: informational side-tag -> length map filled by the
    generators (hx, hy, hz and their mean).
    """

    nodes: np.ndarray
    cells: np.ndarray
    regions: np.ndarray
    face_sets: dict[str, np.ndarray] = field(default_factory=dict)
    characteristic_size: dict[str, float] = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def n_dofs(self) -> int:
        return 3 * self.nodes.shape[0]

    def face_quads(self, face_set: str) -> np.ndarray:
        """Node quads (k, 4) of a face set, outward oriented."""
        if face_set not in self.face_sets:
            raise KeyError(f"unknown face set {face_set!r}")
        pairs = self.face_sets[face_set]
        return self.cells[pairs[:, 0][:, None], HEX_FACES[pairs[:, 1]]]

    def face_set_nodes(self, face_set: str) -> np.ndarray:
        """Sorted unique node ids touched by a face set."""
        return np.unique(self.face_quads(face_set))

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.nodes.min(axis=0), self.nodes.max(axis=0)


def corner_jacobians(mesh: Mesh) -> np.ndarray:
    """det of the trilinear map at the 8 corners of every cell: (m, 8)."""
    grads = hex_shape_grad(HEX_CORNERS)  # (8, 8, 3)
    xyz = mesh.nodes[mesh.cells]  # (m, 8, 3)
    jac = np.einsum("cia,mid->mcad", grads, xyz)  # (m, 8, 3ref, 3phys) -> careful
    # jac[m, c, a, d] = d x_d / d xi_a at corner c
    return np.linalg.det(np.swapaxes(jac, 2, 3))


def face_geometry(mesh: Mesh, quads: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Areas and diameters of node quads (k, 4).

    Area integrates the bilinear surface measure with 2x2 Gauss; the diameter is
    the longest node-to-node distance of the quad.
    """
    pts, wts = gauss_quad(2)
    grads = quad_shape_grad(pts)  # (4, 4, 2)
    xyz = mesh.nodes[quads]  # (k, 4, 3)
    tang = np.einsum("gia,kid->kgad", grads, xyz)  # (k, 4gp, 2, 3)
    cross = np.cross(tang[:, :, 0, :], tang[:, :, 1, :])
    areas = np.einsum("kg,g->k", np.linalg.norm(cross, axis=2), wts)
    diffs = xyz[:, :, None, :] - xyz[:, None, :, :]
    diameters = np.linalg.norm(diffs, axis=3).max(axis=(1, 2))
    return areas, diameters


def validate(mesh: Mesh) -> None:
    """Raise InvalidGeometryError on inverted cells, degenerate or non-boundary faces."""
    if mesh.nodes.ndim != 2 or mesh.nodes.shape[1] != 3:
        raise InvalidGeometryError("nodes must be an (n, 3) array")
    if mesh.cells.ndim != 2 or mesh.cells.shape[1] != 8:
        raise InvalidGeometryError("cells must be an (m, 8) array")
    if mesh.cells.size and (mesh.cells.min() < 0 or mesh.cells.max() >= mesh.n_nodes):
        raise InvalidGeometryError("cell references a node out of range")
    dets = corner_jacobians(mesh)
    if mesh.n_cells and dets.min() <= 0.0:
        bad = int(np.argwhere(dets <= 0.0)[0][0])
        raise InvalidGeometryError(f"cell {bad} has non-positive corner Jacobian ({dets.min():.3e})")

    # Faces of a face set must be boundary faces: owned by exactly one cell.
    shared: dict[tuple[int, ...], int] = {}
    for cell in mesh.cells:
        for lf in range(6):
            key = tuple(sorted(cell[HEX_FACES[lf]]))
            shared[key] = shared.get(key, 0) + 1
    for name, pairs in mesh.face_sets.items():
        if pairs.size == 0:
            continue
        if pairs[:, 0].min() < 0 or pairs[:, 0].max() >= mesh.n_cells:
            raise InvalidGeometryError(f"face set {name!r} references a cell out of range")
        if pairs[:, 1].min() < 0 or pairs[:, 1].max() > 5:
            raise InvalidGeometryError(f"face set {name!r} has a local face index out of range")
        quads = mesh.face_quads(name)
        for q in quads:
            if shared[tuple(sorted(q))] != 1:
                raise InvalidGeometryError(f"face set {name!r} contains an interior face {q}")
        areas, diameters = face_geometry(mesh, quads)
        if (areas < DEGENERATE_FACE_FACTOR * diameters**2).any():
            raise InvalidGeometryError(f"face set {name!r} contains a degenerate face")


def generate_tensor(xs, ys, zs, region: int = 0) -> Mesh:
    """Structured mesh from explicit, strictly increasing axis coordinates."""
    xs, ys, zs = (np.asarray(a, dtype=float) for a in (xs, ys, zs))
    for a in (xs, ys, zs):
        if a.size < 2 or (np.diff(a) <= 0).any():
            raise InvalidGeometryError("axis coordinates must be strictly increasing with >= 2 entries")
    nx, ny, nz = xs.size - 1, ys.size - 1, zs.size - 1
    X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
    # node id = i + (nx+1)*(j + (ny+1)*k)
    nodes = np.column_stack(
        [X.transpose(2, 1, 0).ravel(), Y.transpose(2, 1, 0).ravel(), Z.transpose(2, 1, 0).ravel()]
    )

    def nid(i, j, k):
        return i + (nx + 1) * (j + (ny + 1) * k)

    cells = np.empty((nx * ny * nz, 8), dtype=np.int64)
    c = 0
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                cells[c] = (
                    nid(i, j, k),
                    nid(i + 1, j, k),
                    nid(i + 1, j + 1, k),
                    nid(i, j + 1, k),
                    nid(i, j, k + 1),
                    nid(i + 1, j, k + 1),
                    nid(i + 1, j + 1, k + 1),
                    nid(i, j + 1, k + 1),
                )
                c += 1

    def cid(i, j, k):
        return i + nx * (j + ny * k)

    face_sets = {
        "xmin": np.array([(cid(0, j, k), 5) for k in range(nz) for j in range(ny)]),
        "xmax": np.array([(cid(nx - 1, j, k), 3) for k in range(nz) for j in range(ny)]),
        "ymin": np.array([(cid(i, 0, k), 2) for k in range(nz) for i in range(nx)]),
        "ymax": np.array([(cid(i, ny - 1, k), 4) for k in range(nz) for i in range(nx)]),
        "zmin": np.array([(cid(i, j, 0), 0) for j in range(ny) for i in range(nx)]),
        "zmax": np.array([(cid(i, j, nz - 1), 1) for j in range(ny) for i in range(nx)]),
    }
    hx, hy, hz = (float(np.diff(a).mean()) for a in (xs, ys, zs))
    mesh = Mesh(
        nodes=nodes,
        cells=cells,
        regions=np.full(nx * ny * nz, region, dtype=np.int64),
        face_sets=face_sets,
        characteristic_size={"hx": hx, "hy": hy, "hz": hz, "h": (hx + hy + hz) / 3.0},
    )
    return mesh


def generate_structured(
    extent: tuple[float, float, float],
    divisions: tuple[int, int, int],
    offset: tuple[float, float, float] = (0.0, 0.0, 0.0),
    region: int = 0,
) -> Mesh:
    """Axis-aligned structured block of hexahedra.

    extent: positive edge lengths; divisions: cells per axis (>= 1).
    """
    extent = tuple(float(e) for e in extent)
    divisions = tuple(int(d) for d in divisions)
    if any(e <= 0 for e in extent):
        raise InvalidGeometryError(f"extent must be positive, got {extent}")
    if any(d < 1 for d in divisions):
        raise InvalidGeometryError(f"divisions must be >= 1, got {divisions}")
    axes = [offset[a] + extent[a] * np.linspace(0.0, 1.0, divisions[a] + 1) for a in range(3)]
    return generate_tensor(*axes, region=region)


def warp(mesh: Mesh, fn) -> Mesh:
    """New mesh with nodes mapped through fn((n,3)) -> (n,3); revalidates."""
    out = Mesh(
        nodes=np.asarray(fn(mesh.nodes.copy()), dtype=float),
        cells=mesh.cells.copy(),
        regions=mesh.regions.copy(),
        face_sets={k: v.copy() for k, v in mesh.face_sets.items()},
        characteristic_size=dict(mesh.characteristic_size),
    )
    validate(out)
    return out


def nodes_on_plane(mesh: Mesh, axis: int, value: float, tol: float = 1e-9) -> np.ndarray:
    """Node ids with |coordinate[axis] - value| <= tol (absolute)."""
    return np.flatnonzero(np.abs(mesh.nodes[:, axis] - value) <= tol)


def _edge_map(quads: np.ndarray) -> dict[tuple[int, int], list[int]]:
    edges: dict[tuple[int, int], list[int]] = {}
    for f, q in enumerate(quads):
        for a in range(4):
            key = tuple(sorted((int(q[a]), int(q[(a + 1) % 4]))))
            edges.setdefault(key, []).append(f)
    return edges


@dataclass
class InterfaceTopology:
    """Connectivity of one contact interface.

    Side 1 (non-mortar) carries the multipliers; side 2 (mortar) is projected
    onto it. Faces are stored as node quads in each side's own mesh numbering.
    internal_edges pairs adjacent non-mortar faces; mortar_internal_nodes are
    the mortar-patch nodes not touching the patch boundary (macroelement seeds).
    """

    mesh_a: Mesh
    mesh_b: Mesh
    non_mortar_set: str
    mortar_set: str
    nm_quads: np.ndarray  # (F, 4) node ids in mesh_a
    m_quads: np.ndarray  # (G, 4) node ids in mesh_b
    nm_areas: np.ndarray
    nm_diameters: np.ndarray
    m_areas: np.ndarray
    m_diameters: np.ndarray
    ratio: float  # r_h = mean nm diameter / mean mortar diameter
    internal_edges: np.ndarray  # (E, 2) non-mortar face index pairs
    edge_nodes: np.ndarray  # (E, 2) shared node ids per internal edge
    boundary_nm_nodes: np.ndarray  # nm nodes on the patch boundary
    mortar_internal_nodes: np.ndarray
    mortar_node_faces: dict[int, np.ndarray]  # mortar node -> adjacent mortar faces

    @property
    def n_faces(self) -> int:
        return self.nm_quads.shape[0]

    @property
    def n_tractions(self) -> int:
        """Size of the P0 traction index set (3 dofs per non-mortar face)."""
        return 3 * self.nm_quads.shape[0]

    @property
    def mean_h(self) -> float:
        """Interface mesh size: mean non-mortar face diameter."""
        return float(self.nm_diameters.mean())


def build_interface(mesh_a: Mesh, non_mortar_set: str, mesh_b: Mesh, mortar_set: str) -> InterfaceTopology:
    """Assemble the interface topology for a non-mortar/mortar face-set pair."""
    nm_quads = mesh_a.face_quads(non_mortar_set)
    m_quads = mesh_b.face_quads(mortar_set)
    if nm_quads.shape[0] == 0 or m_quads.shape[0] == 0:
        raise InvalidGeometryError("interface face sets must be non-empty")

    nm_areas, nm_diam = face_geometry(mesh_a, nm_quads)
    m_areas, m_diam = face_geometry(mesh_b, m_quads)

    edges = _edge_map(nm_quads)
    internal, enodes, boundary_nodes = [], [], set()
    for (n0, n1), faces in edges.items():
        if len(faces) == 2:
            internal.append(sorted(faces))
            enodes.append((n0, n1))
        elif len(faces) == 1:
            boundary_nodes.update((n0, n1))
        else:
            raise InvalidGeometryError(f"non-manifold interface edge {(n0, n1)} shared by {len(faces)} faces")

    m_edges = _edge_map(m_quads)
    m_boundary_nodes = set()
    for (n0, n1), faces in m_edges.items():
        if len(faces) == 1:
            m_boundary_nodes.update((n0, n1))
        elif len(faces) > 2:
            raise InvalidGeometryError(f"non-manifold mortar edge {(n0, n1)}")
    m_nodes = np.unique(m_quads)
    internal_m = np.array(sorted(set(int(n) for n in m_nodes) - m_boundary_nodes), dtype=np.int64)
    node_faces = {
        int(n): np.flatnonzero((m_quads == n).any(axis=1)) for n in internal_m
    }

    internal_arr = np.array(internal, dtype=np.int64).reshape(-1, 2)
    enodes_arr = np.array(enodes, dtype=np.int64).reshape(-1, 2)
    if internal_arr.shape[0]:
        order = sorted(range(internal_arr.shape[0]), key=lambda e: (int(internal_arr[e, 0]), int(internal_arr[e, 1])))
        internal_arr = internal_arr[order]
        enodes_arr = enodes_arr[order]

    return InterfaceTopology(
        mesh_a=mesh_a,
        mesh_b=mesh_b,
        non_mortar_set=non_mortar_set,
        mortar_set=mortar_set,
        nm_quads=nm_quads,
        m_quads=m_quads,
        nm_areas=nm_areas,
        nm_diameters=nm_diam,
        m_areas=m_areas,
        m_diameters=m_diam,
        ratio=float(nm_diam.mean() / m_diam.mean()),
        internal_edges=internal_arr,
        edge_nodes=enodes_arr,
        boundary_nm_nodes=np.array(sorted(boundary_nodes), dtype=np.int64),
        mortar_internal_nodes=internal_m,
        mortar_node_faces=node_faces,
    )
