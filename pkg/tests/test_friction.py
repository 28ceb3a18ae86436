"""Coulomb friction laws, KKT regime transitions, contact operator blocks."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mortarcontact.errors import ConfigurationError
from mortarcontact.friction import (
    OPEN,
    SLIP,
    STICK,
    ContactState,
    FrictionMaterial,
    KKTTolerances,
    contact_operator,
    coulomb_limit,
    friction_derivatives,
    limiting_traction,
    traction_components,
    update_active_set,
)
from mortarcontact.mesh import build_interface, generate_structured
from mortarcontact.mortar import assemble_mortar

TAN30 = 0.5773502691896257
EPS = 1e-12
MAT30 = FrictionMaterial(cohesion=0.0, friction_angle=np.radians(30.0))
TOL = KKTTolerances(traction_tol=1e-9)


@pytest.fixture(scope="module")
def stacked_assembly():
    # 2x2 non-mortar faces against one mortar face; contact normal is -z
    a = generate_structured((1.0, 1.0, 1.0), (2, 2, 1))
    b = generate_structured((1.0, 1.0, 1.0), (1, 1, 1), offset=(0.0, 0.0, 1.0))
    return assemble_mortar(build_interface(a, "zmax", b, "zmin"))


class TestMaterial:
    def test_validation(self):
        with pytest.raises(ConfigurationError):
            FrictionMaterial(cohesion=-1.0, friction_angle=0.1)
        with pytest.raises(ConfigurationError):
            FrictionMaterial(cohesion=0.0, friction_angle=np.pi / 2)

    def test_tan_phi(self):
        assert MAT30.tan_phi == pytest.approx(TAN30, rel=1e-15)

    def test_coulomb_limit(self):
        assert coulomb_limit(-1.0, MAT30) == pytest.approx(TAN30, rel=1e-15)
        shifted = FrictionMaterial(cohesion=2.0, friction_angle=np.radians(30.0))
        assert coulomb_limit(-1.0, shifted) == pytest.approx(2.0 + TAN30, rel=1e-15)
        # tensile traction: limit floored at zero, not negative
        assert coulomb_limit(5.0, MAT30) == 0.0
        assert np.allclose(coulomb_limit(np.array([-1.0, 5.0]), MAT30), [TAN30, 0.0])


class TestLimitingTraction:
    def test_magnitude_and_direction(self):
        d = np.array([3e-3, -4e-3])
        ts = limiting_traction(d, -1.0, MAT30, EPS)
        assert np.linalg.norm(ts) == pytest.approx(TAN30, rel=1e-14)
        assert ts[0] * d[1] - ts[1] * d[0] == pytest.approx(0.0, abs=1e-18)
        assert ts @ d > 0

    def test_axis_aligned(self):
        ts = limiting_traction(np.array([1e-2, 0.0]), -1.0, MAT30, EPS)
        assert ts == pytest.approx([TAN30, 0.0], abs=1e-15)

    def test_regularized_origin(self):
        assert limiting_traction(np.zeros(2), -1.0, MAT30, EPS) == pytest.approx([0.0, 0.0])

    def test_inside_eps_ball_linear(self):
        # below the regularization length the map is linear in dgt
        eps = 1e-6
        a = limiting_traction(np.array([1e-8, 0.0]), -1.0, MAT30, eps)
        b = limiting_traction(np.array([2e-8, 0.0]), -1.0, MAT30, eps)
        assert b == pytest.approx(2 * a, rel=1e-12)


class TestFrictionDerivatives:
    def test_axis_aligned_closed_form(self):
        d = np.array([3e-3, 0.0])
        X2, dtn = friction_derivatives(d, -1.0, MAT30, EPS)
        assert X2 == pytest.approx(np.diag([0.0, TAN30 / 3e-3]), rel=1e-13)
        assert dtn == pytest.approx([-TAN30, 0.0], rel=1e-14)

    def test_projector_annihilates_slip_direction(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            d = rng.normal(size=2) * 1e-3
            X2, _ = friction_derivatives(d, -rng.uniform(0.5, 3.0), MAT30, EPS)
            assert X2 @ d == pytest.approx([0.0, 0.0], abs=1e-12)

    def test_outside_cone_zero(self):
        X2, dtn = friction_derivatives(np.array([1e-3, 0.0]), 1.0, MAT30, EPS)
        assert not X2.any()
        assert not dtn.any()

    @given(
        dx=st.floats(-1e-2, 1e-2),
        dy=st.floats(-1e-2, 1e-2),
        tn=st.floats(-5.0, -0.1),
    )
    @settings(max_examples=60, deadline=None)
    def test_matches_central_differences(self, dx, dy, tn):
        d = np.array([dx, dy])
        nrm = np.linalg.norm(d)
        if nrm < 1e-4:
            return  # stay away from the regularization ball
        X2, dtn = friction_derivatives(d, tn, MAT30, EPS)
        h = 1e-6 * nrm
        scale = np.linalg.norm(X2)
        for k in range(2):
            dp, dm = d.copy(), d.copy()
            dp[k] += h
            dm[k] -= h
            col = (limiting_traction(dp, tn, MAT30, EPS) - limiting_traction(dm, tn, MAT30, EPS)) / (2 * h)
            assert col == pytest.approx(X2[:, k], rel=1e-5, abs=1e-5 * scale)
        ht = 1e-6 * abs(tn)
        fd = (limiting_traction(d, tn + ht, MAT30, EPS) - limiting_traction(d, tn - ht, MAT30, EPS)) / (2 * ht)
        assert fd == pytest.approx(dtn, rel=1e-5, abs=1e-9)


def entity_tractions(asm, t_n, t_t):
    """Traction vector (3E,) with prescribed normal scalars and 2D tangents."""
    n = asm.frames[:, 0, :]
    T = asm.frames[:, 1:, :]
    tv = t_n[:, None] * n + np.einsum("eka,ek->ea", T, t_t)
    return tv.ravel()


class TestActiveSet:
    def test_stick_holds_inside_cone(self, stacked_assembly):
        asm = stacked_assembly
        st_ = ContactState.all_stick(4)
        t = entity_tractions(asm, np.full(4, -1.0), np.tile([0.3, 0.0], (4, 1)))
        new, changed = update_active_set(
            st_, asm, t, np.zeros(4), np.zeros((4, 3)), MAT30, TOL
        )
        assert changed == 0
        assert (new.regime == STICK).all()

    def test_stick_to_slip_and_open(self, stacked_assembly):
        asm = stacked_assembly
        st_ = ContactState.all_stick(4)
        t_n = np.array([-1.0, -1.0, 0.1, -1.0])
        t_t = np.array([[0.3, 0.0], [0.7, 0.0], [0.0, 0.0], [0.0, 0.0]])
        t = entity_tractions(asm, t_n, t_t)
        new, changed = update_active_set(
            st_, asm, t, np.zeros(4), np.zeros((4, 3)), MAT30, TOL
        )
        assert changed == 2
        assert list(new.regime) == [STICK, SLIP, OPEN, STICK]

    def test_slip_back_to_stick_on_reversal(self, stacked_assembly):
        asm = stacked_assembly
        st_ = ContactState.all_stick(4)
        st_.regime[:] = SLIP
        t = entity_tractions(asm, np.full(4, -1.0), np.tile([0.5, 0.0], (4, 1)))
        dgt = np.zeros((4, 3))
        dgt[0] = [-1e-3, 0.0, 0.0]  # sliding against the traction: reversal
        dgt[1] = [1e-3, 0.0, 0.0]  # consistent sliding keeps slipping
        new, changed = update_active_set(st_, asm, t, np.zeros(4), dgt, MAT30, TOL)
        assert new.regime[0] == STICK
        assert new.regime[1] == SLIP
        assert changed == 1

    def test_open_closes_on_penetration(self, stacked_assembly):
        asm = stacked_assembly
        st_ = ContactState.all_stick(4)
        st_.regime[:] = OPEN
        g_n = np.array([-1e-4, 1e-4, 0.0, -2e-3])
        new, changed = update_active_set(
            st_, asm, np.zeros(12), g_n, np.zeros((4, 3)), MAT30, TOL
        )
        assert list(new.regime) == [STICK, OPEN, OPEN, STICK]
        assert changed == 2

    def test_frozen_entities_never_change(self, stacked_assembly):
        asm = stacked_assembly
        st_ = ContactState.all_stick(4)
        st_.frozen[:] = True
        t = entity_tractions(asm, np.full(4, 2.0), np.tile([5.0, 0.0], (4, 1)))
        new, changed = update_active_set(
            st_, asm, t, np.zeros(4), np.zeros((4, 3)), MAT30, TOL
        )
        assert changed == 0
        assert (new.regime == STICK).all()

    def test_input_state_not_mutated(self, stacked_assembly):
        asm = stacked_assembly
        st_ = ContactState.all_stick(4)
        t = entity_tractions(asm, np.full(4, 1.0), np.zeros((4, 2)))
        new, _ = update_active_set(st_, asm, t, np.zeros(4), np.zeros((4, 3)), MAT30, TOL)
        assert (st_.regime == STICK).all()
        assert (new.regime == OPEN).all()

    @given(
        regimes=st.lists(st.sampled_from([STICK, SLIP, OPEN]), min_size=4, max_size=4),
        frozen=st.lists(st.booleans(), min_size=4, max_size=4),
        tn=st.floats(-2.0, 2.0),
    )
    @settings(max_examples=40, deadline=None)
    def test_frozen_mask_respected(self, stacked_assembly, regimes, frozen, tn):
        asm = stacked_assembly
        st_ = ContactState.all_stick(4)
        st_.regime[:] = regimes
        st_.frozen[:] = frozen
        t = entity_tractions(asm, np.full(4, tn), np.tile([1.0, 0.0], (4, 1)))
        new, changed = update_active_set(
            st_, asm, t, np.full(4, -1e-3), np.zeros((4, 3)), MAT30, TOL
        )
        for e in range(4):
            if frozen[e]:
                assert new.regime[e] == regimes[e]
        assert changed == int((new.regime != st_.regime).sum())


class TestContactOperator:
    def test_all_stick_rows(self, stacked_assembly):
        asm = stacked_assembly
        st_ = ContactState.all_stick(4)
        rng = np.random.default_rng(3)
        ju = rng.normal(size=(4, 3))
        t = rng.normal(size=12)
        op = contact_operator(asm, st_, t, ju, MAT30, 1.0, EPS)
        assert op.r_t == pytest.approx(ju.ravel())
        assert np.allclose(op.P.toarray(), np.eye(12))
        assert op.C.count_nonzero() == 0

    def test_open_rows(self, stacked_assembly):
        asm = stacked_assembly
        st_ = ContactState.all_stick(4)
        st_.regime[:] = OPEN
        t = np.arange(12.0)
        c = 2.0
        op = contact_operator(asm, st_, t, np.zeros((4, 3)), MAT30, c, EPS)
        w = asm.weights[0]
        assert op.r_t == pytest.approx(w / c * t)
        assert np.allclose(op.C.toarray(), w / c * np.eye(12))
        assert op.P.count_nonzero() == 0

    def test_slip_row_components(self, stacked_assembly):
        asm = stacked_assembly
        st_ = ContactState.all_stick(4)
        st_.regime[:] = SLIP
        st_.prev_gt[:] = 0.0
        n = asm.frames[:, 0, :]
        w = asm.weights
        rng = np.random.default_rng(5)
        ju = rng.normal(size=(4, 3)) * 1e-2
        t = entity_tractions(asm, np.full(4, -1.0), np.tile([0.4, 0.1], (4, 1)))
        op = contact_operator(asm, st_, t, ju, MAT30, 1.0, EPS)
        # limit traction has Coulomb magnitude and the slip direction
        g = ju / w[:, None]
        g_t = g - np.einsum("ed,ed->e", g, n)[:, None] * n
        for e in range(4):
            assert np.linalg.norm(op.t_star[e]) == pytest.approx(TAN30, rel=1e-12)
            assert np.cross(op.t_star[e], g_t[e]) == pytest.approx([0, 0, 0], abs=1e-14)
        # normal residual component is the integrated normal jump
        r = op.r_t.reshape(4, 3)
        assert np.einsum("ed,ed->e", r, n) == pytest.approx(
            np.einsum("ed,ed->e", ju, n), rel=1e-12
        )

    def test_traction_components_split(self, stacked_assembly):
        asm = stacked_assembly
        rng = np.random.default_rng(11)
        t = rng.normal(size=12)
        t_n, t_t = traction_components(asm, t)
        n = asm.frames[:, 0, :]
        recon = t_n[:, None] * n + t_t
        assert recon.ravel() == pytest.approx(t)
        assert np.einsum("ed,ed->e", t_t, n) == pytest.approx(np.zeros(4), abs=1e-14)
