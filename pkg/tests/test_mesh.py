"""Mesh generation, validation, and interface topology."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mortarcontact.errors import InvalidGeometryError
from mortarcontact.mesh import (
    HEX_FACES,
    Mesh,
    build_interface,
    corner_jacobians,
    face_geometry,
    generate_structured,
    generate_tensor,
    nodes_on_plane,
    validate,
    warp,
)
from mortarcontact.quadrature import gauss_hex
from mortarcontact.mesh import hex_shape_grad


def mesh_volume(mesh):
    # independent volume evaluation: sum of |J| over a 2x2x2 Gauss rule
    pts, wts = gauss_hex(2)
    grads = hex_shape_grad(pts)
    xyz = mesh.nodes[mesh.cells]
    vol = 0.0
    for g in range(len(wts)):
        jac = np.einsum("ia,mid->mad", grads[g], xyz)
        vol += wts[g] * np.linalg.det(jac).sum()
    return vol


def count_edges(mesh):
    pairs = set()
    local = [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 4),
             (0, 4), (1, 5), (2, 6), (3, 7)]
    for cell in mesh.cells:
        for a, b in local:
            pairs.add((min(cell[a], cell[b]), max(cell[a], cell[b])))
    return len(pairs)


class TestGenerators:
    def test_node_and_cell_counts(self):
        mesh = generate_structured((1.0, 2.0, 3.0), (2, 3, 4))
        assert mesh.n_nodes == 3 * 4 * 5
        assert mesh.n_cells == 2 * 3 * 4

    @given(
        nx=st.integers(1, 4), ny=st.integers(1, 4), nz=st.integers(1, 4)
    )
    @settings(max_examples=25, deadline=None)
    def test_structured_edge_count(self, nx, ny, nz):
        # closed form for a box grid: sum over axes of d_a (d_b+1)(d_c+1)
        mesh = generate_structured((1.0, 1.0, 1.0), (nx, ny, nz))
        expected = (
            nx * (ny + 1) * (nz + 1)
            + ny * (nx + 1) * (nz + 1)
            + nz * (nx + 1) * (ny + 1)
        )
        assert count_edges(mesh) == expected

    def test_face_sets_cover_boundary(self):
        mesh = generate_structured((1.0, 1.0, 1.0), (3, 2, 2))
        assert set(mesh.face_sets) == {"xmin", "xmax", "ymin", "ymax", "zmin", "zmax"}
        assert mesh.face_sets["xmin"].shape == (2 * 2, 2)
        assert mesh.face_sets["zmax"].shape == (3 * 2, 2)

    def test_tensor_spacing(self):
        xs = [0.0, 0.5, 2.0]
        mesh = generate_tensor(xs, [0.0, 1.0], [0.0, 1.0])
        assert np.allclose(np.unique(mesh.nodes[:, 0]), xs)

    def test_invalid_generator_input(self):
        with pytest.raises(InvalidGeometryError):
            generate_structured((-1.0, 1.0, 1.0), (1, 1, 1))
        with pytest.raises(InvalidGeometryError):
            generate_structured((1.0, 1.0, 1.0), (0, 1, 1))


class TestGeometry:
    def test_face_areas_and_diameters(self):
        mesh = generate_structured((2.0, 3.0, 1.0), (4, 3, 2))
        areas, diameters = face_geometry(mesh, mesh.face_quads("zmax"))
        assert np.allclose(areas.sum(), 2.0 * 3.0)
        assert np.allclose(diameters, np.hypot(0.5, 1.0))

    def test_face_quads_outward(self):
        mesh = generate_structured((1.0, 1.0, 1.0), (2, 2, 2))
        for name, direction in [("zmax", [0, 0, 1]), ("xmin", [-1, 0, 0]),
                                ("ymax", [0, 1, 0])]:
            xyz = mesh.nodes[mesh.face_quads(name)]
            normal = np.cross(xyz[:, 1] - xyz[:, 0], xyz[:, 3] - xyz[:, 0])
            normal /= np.linalg.norm(normal, axis=1, keepdims=True)
            assert np.allclose(normal, direction)

    def test_corner_jacobians_positive(self):
        mesh = generate_structured((1.0, 1.0, 1.0), (2, 2, 2))
        assert (corner_jacobians(mesh) > 0).all()

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=20, deadline=None)
    def test_affine_warp_preserves_validity_and_volume(self, seed):
        rng = np.random.default_rng(seed)
        A = np.eye(3) + 0.2 * rng.uniform(-1, 1, (3, 3))
        if np.linalg.det(A) < 0.1:
            A += 0.5 * np.eye(3)
        shift = rng.uniform(-1, 1, 3)
        base = generate_structured((1.0, 2.0, 1.5), (2, 2, 3))
        warped = warp(base, lambda x: x @ A.T + shift)
        expected = abs(np.linalg.det(A)) * (1.0 * 2.0 * 1.5)
        assert mesh_volume(warped) == pytest.approx(expected, rel=1e-12)

    def test_inverted_cell_rejected(self):
        mesh = generate_structured((1.0, 1.0, 1.0), (1, 1, 1))
        with pytest.raises(InvalidGeometryError):
            warp(mesh, lambda x: x * np.array([-1.0, 1.0, 1.0]))

    def test_nodes_on_plane(self):
        mesh = generate_structured((1.0, 1.0, 1.0), (2, 2, 2))
        assert len(nodes_on_plane(mesh, 2, 0.0)) == 9
        assert len(nodes_on_plane(mesh, 0, 0.5)) == 9
        assert len(nodes_on_plane(mesh, 0, 0.4)) == 0

    def test_unknown_face_set(self):
        mesh = generate_structured((1.0, 1.0, 1.0), (1, 1, 1))
        with pytest.raises(KeyError):
            mesh.face_quads("top")


class TestValidation:
    def test_duplicate_node_reference(self):
        mesh = generate_structured((1.0, 1.0, 1.0), (1, 1, 1))
        cells = mesh.cells.copy()
        cells[0, 1] = cells[0, 0]
        bad = Mesh(nodes=mesh.nodes, cells=cells, regions=mesh.regions,
                   face_sets=mesh.face_sets)
        with pytest.raises(InvalidGeometryError):
            validate(bad)

    def test_face_set_out_of_range(self):
        mesh = generate_structured((1.0, 1.0, 1.0), (1, 1, 1))
        mesh.face_sets["bad"] = np.array([[5, 0]])
        with pytest.raises(InvalidGeometryError):
            validate(mesh)


class TestInterfaceTopology:
    def test_conforming_counts(self):
        a = generate_structured((1.0, 1.0, 1.0), (2, 2, 2))
        b = generate_structured((1.0, 1.0, 1.0), (2, 2, 2), offset=(0, 0, 1.0))
        topo = build_interface(a, "zmax", b, "zmin")
        assert topo.n_faces == 4
        assert topo.n_tractions == 12
        assert topo.mean_h == pytest.approx(np.sqrt(2) / 2)

    def test_ratio_non_conforming(self):
        a = generate_structured((1.0, 1.0, 1.0), (4, 4, 4))
        b = generate_structured((1.0, 1.0, 1.0), (2, 2, 2), offset=(0, 0, 1.0))
        topo = build_interface(a, "zmax", b, "zmin")
        # non-mortar faces half the size of mortar faces
        assert topo.ratio == pytest.approx(0.5)

    def test_internal_edges_count(self):
        a = generate_structured((1.0, 1.0, 1.0), (3, 3, 1))
        b = generate_structured((1.0, 1.0, 1.0), (2, 2, 1), offset=(0, 0, 1.0))
        topo = build_interface(a, "zmax", b, "zmin")
        # 3x3 face grid has 2*3 vertical + 2*3 horizontal interior edges
        assert len(topo.internal_edges) == 12
