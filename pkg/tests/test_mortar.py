"""Mortar projection, D/M assembly against closed-form overlap integrals."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mortarcontact.errors import AssemblyError
from mortarcontact.mesh import build_interface, generate_structured, generate_tensor
from mortarcontact.mortar import (
    assemble_mortar,
    averaged_nodal_normals,
    clip_convex,
    evaluate_gaps,
    householder_frame,
    inverse_bilinear,
    polygon_area,
)
from mortarcontact.quadrature import gauss_quad, triangle_points


def stacked_pair(div_a, div_b, extent=(1.0, 1.0, 1.0)):
    a = generate_structured(extent, div_a)
    b = generate_structured(extent, div_b, offset=(0.0, 0.0, extent[2]))
    return a, b, build_interface(a, "zmax", b, "zmin")


def interval_overlap_integrals(xs_a, xs_b):
    """1D mortar mass entries: integral of the hat function of grid b over
    each cell of grid a, by direct interval splitting."""
    cells = [(xs_a[i], xs_a[i + 1]) for i in range(len(xs_a) - 1)]
    out = np.zeros((len(cells), len(xs_b)))
    for ci, (lo, hi) in enumerate(cells):
        for j in range(len(xs_b)):
            # hat at node j of grid b, supported on (xs_b[j-1], xs_b[j+1])
            for seg in range(max(0, j - 1), min(j + 1, len(xs_b) - 1)):
                L, R = max(lo, xs_b[seg]), min(hi, xs_b[seg + 1])
                if R <= L:
                    continue
                h = xs_b[seg + 1] - xs_b[seg]
                # linear shape on the segment, rising toward node j or away
                if seg == j - 1:
                    val = lambda x: (x - xs_b[seg]) / h
                else:
                    val = lambda x: (xs_b[seg + 1] - x) / h
                # exact trapezoid of a linear function
                out[ci, j] += 0.5 * (val(L) + val(R)) * (R - L)
    return out


class TestPolygonTools:
    def test_polygon_area(self):
        square = np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]])
        assert polygon_area(square) == pytest.approx(2.0)
        tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assert polygon_area(tri) == pytest.approx(0.5)

    @given(
        ax=st.floats(-0.4, 0.4), ay=st.floats(-0.4, 0.4),
        w=st.floats(0.2, 1.5), h=st.floats(0.2, 1.5),
    )
    @settings(max_examples=50, deadline=None)
    def test_clip_matches_rectangle_intersection(self, ax, ay, w, h):
        subject = np.array([[ax, ay], [ax + w, ay], [ax + w, ay + h], [ax, ay + h]])
        clip = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        poly = clip_convex(subject, clip, eps=1e-12)
        wx = max(0.0, min(ax + w, 1.0) - max(ax, 0.0))
        wy = max(0.0, min(ay + h, 1.0) - max(ay, 0.0))
        area = polygon_area(poly) if len(poly) >= 3 else 0.0
        assert area == pytest.approx(wx * wy, abs=1e-12)

    def test_clip_disjoint_empty(self):
        subject = np.array([[2.0, 2.0], [3.0, 2.0], [3.0, 3.0], [2.0, 3.0]])
        clip = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        assert len(clip_convex(subject, clip, eps=1e-12)) == 0

    def test_inverse_bilinear_round_trip(self):
        quad = np.array([[0.0, 0.0], [2.0, 0.1], [2.2, 1.9], [-0.1, 1.7]])
        rng = np.random.default_rng(2)
        xi = rng.uniform(-1, 1, size=(40, 2))
        from mortarcontact.mesh import quad_shape

        phys = quad_shape(xi) @ quad
        back = inverse_bilinear(quad, phys, scale=2.0)
        assert back == pytest.approx(xi, abs=1e-10)


class TestFrames:
    @given(
        nx=st.floats(-1, 1), ny=st.floats(-1, 1), nz=st.floats(-1, 1)
    )
    @settings(max_examples=60, deadline=None)
    def test_householder_orthonormal(self, nx, ny, nz):
        v = np.array([nx, ny, nz])
        if np.linalg.norm(v) < 1e-3:
            return
        n = v / np.linalg.norm(v)
        t1, t2 = householder_frame(n)
        G = np.array([n, t1, t2])
        assert G @ G.T == pytest.approx(np.eye(3), abs=1e-13)

    def test_householder_deterministic(self):
        n = np.array([0.3, -0.5, 0.81])
        n /= np.linalg.norm(n)
        a = householder_frame(n)
        b = householder_frame(n.copy())
        assert (a[0] == b[0]).all() and (a[1] == b[1]).all()

    def test_averaged_normals_flat_patch(self):
        mesh = generate_structured((1.0, 1.0, 1.0), (2, 2, 1))
        quads = mesh.face_quads("zmax")
        normals = averaged_nodal_normals(mesh.nodes, quads)
        for node, n in normals.items():
            assert n == pytest.approx([0.0, 0.0, 1.0])
        assert set(normals) == set(np.unique(quads))


class TestTriangleQuadrature:
    # degree-5 rule: exact for x^a y^b with a+b <= 5 on the unit triangle,
    # where the integral is a! b! / (a+b+2)!
    CASES = {
        (0, 0): 0.5,
        (1, 0): 1.0 / 6.0,
        (2, 1): 1.0 / 60.0,
        (3, 2): 0.002380952380952381,
        (0, 5): 0.023809523809523808,
        (4, 1): 0.004761904761904762,
    }

    @pytest.mark.parametrize("powers,exact", sorted(CASES.items()))
    def test_monomials_exact(self, powers, exact):
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        pts, wts = triangle_points(verts)
        a, b = powers
        val = float(np.sum(wts * pts[:, 0] ** a * pts[:, 1] ** b))
        assert val == pytest.approx(exact, rel=1e-14)

    def test_weights_carry_measure(self):
        verts = np.array([[1.0, 1.0], [3.0, 1.0], [1.0, 4.0]])
        _, wts = triangle_points(verts)
        assert wts.sum() == pytest.approx(3.0, rel=1e-14)

    def test_gauss_quad_weights(self):
        _, wts = gauss_quad(2)
        assert wts.sum() == pytest.approx(4.0, rel=1e-15)


class TestMortarMatrices:
    def test_partition_of_unity(self):
        # fully covered non-mortar faces: row sums of D and M agree
        _, _, topo = stacked_pair((4, 4, 1), (3, 3, 1))
        asm = assemble_mortar(topo)
        ones_a = np.ones(asm.D.shape[1])
        ones_b = np.ones(asm.M.shape[1])
        resid = asm.D @ ones_a - asm.M @ ones_b
        areas = np.repeat(asm.weights, 3)
        assert np.abs(resid / areas).max() <= 1e-12

    def test_d_is_diagonal_face_area(self):
        a, _, topo = stacked_pair((2, 2, 1), (1, 1, 1))
        asm = assemble_mortar(topo)
        assert np.allclose(asm.weights, 0.25)
        # D row sum per entity equals the face area (P0 times hat partition)
        assert np.allclose(np.asarray(asm.D.sum(axis=1)).reshape(-1, 3), 0.25)

    def test_m_matches_interval_tensor_product(self):
        # separable geometry: M entries = product of 1D overlap integrals
        xa = np.array([0.0, 0.5, 1.0])
        ya = np.array([0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0])
        xb = np.array([0.0, 0.25, 0.65, 1.0])
        yb = np.array([0.0, 0.5, 1.0])
        a = generate_tensor(xa, ya, [0.0, 1.0])
        b = generate_tensor(xb, yb, [1.0, 2.0])
        topo = build_interface(a, "zmax", b, "zmin")
        asm = assemble_mortar(topo)

        Ix = interval_overlap_integrals(xa, xb)
        Iy = interval_overlap_integrals(ya, yb)
        quads = topo.nm_quads
        centers = a.nodes[quads].mean(axis=1)
        for e in range(asm.n_entities):
            face = topo.nm_quads[asm.entities[e]]
            cx, cy = centers[asm.entities[e]][:2]
            ci = np.searchsorted(xa, cx) - 1
            cj = np.searchsorted(ya, cy) - 1
            row = asm.M[3 * e].toarray().ravel()
            for node in range(b.n_nodes):
                px, py, pz = b.nodes[node]
                if pz != 1.0:
                    assert row[3 * node] == 0.0
                    continue
                i = int(np.argmin(np.abs(xb - px)))
                j = int(np.argmin(np.abs(yb - py)))
                expected = Ix[ci, i] * Iy[cj, j]
                assert row[3 * node] == pytest.approx(expected, abs=1e-13)

    def test_conforming_m_equals_d_permuted(self):
        a, b, topo = stacked_pair((3, 2, 1), (3, 2, 1))
        asm = assemble_mortar(topo)
        # map each mortar node to the coincident non-mortar node
        top_a = a.face_set_nodes("zmax")
        bot_b = b.face_set_nodes("zmin")
        D = asm.D.toarray()
        M = asm.M.toarray()
        for nb in bot_b:
            match = top_a[np.argmin(np.linalg.norm(a.nodes[top_a] - b.nodes[nb], axis=1))]
            assert np.allclose(M[:, 3 * nb: 3 * nb + 3], D[:, 3 * match: 3 * match + 3], atol=1e-12)

    def test_coverage_fractions_on_offset_mortar(self):
        # mortar side shifted by half a face: outer non-mortar column only
        # half covered
        a = generate_structured((1.0, 1.0, 1.0), (2, 2, 1))
        b = generate_structured((1.0, 1.0, 1.0), (2, 2, 1), offset=(0.25, 0.0, 1.0))
        topo = build_interface(a, "zmax", b, "zmin")
        asm = assemble_mortar(topo)
        cov = np.sort(asm.coverage)
        assert cov == pytest.approx([0.5, 0.5, 1.0, 1.0])
        assert sorted(asm.coverage_warnings()) == sorted(
            np.flatnonzero(asm.coverage < 1.0 - 1e-8).tolist()
        )

    def test_rigid_offset_gap(self):
        a, b, topo = stacked_pair((4, 4, 2), (2, 2, 1))
        asm = assemble_mortar(topo)
        delta = 1e-3
        u_a = np.zeros(a.n_dofs)
        u_b = np.zeros(b.n_dofs)
        u_b.reshape(-1, 3)[:, 2] = delta  # lift the upper block
        g, g_n, g_t = evaluate_gaps(asm, u_a, u_b)
        assert g_n == pytest.approx(np.full(asm.n_entities, delta), rel=1e-12)
        assert np.abs(g_t).max() <= 1e-15

    def test_nodal_mode_partition_of_unity(self):
        _, _, topo = stacked_pair((4, 4, 1), (2, 2, 1))
        asm = assemble_mortar(topo, mode="nodal")
        ones_a = np.ones(asm.D.shape[1])
        ones_b = np.ones(asm.M.shape[1])
        resid = (asm.D @ ones_a - asm.M @ ones_b).reshape(-1, 3)
        assert np.abs(resid).max() <= 1e-12 * asm.weights.max()
        # entities are the non-mortar interface nodes
        assert asm.n_entities == len(topo.mesh_a.face_set_nodes("zmax"))

    def test_unknown_mode_rejected(self):
        _, _, topo = stacked_pair((2, 2, 1), (1, 1, 1))
        with pytest.raises(AssemblyError):
            assemble_mortar(topo, mode="p2")
