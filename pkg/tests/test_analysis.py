"""Numerical inf-sup machinery: Schur complements, beta*, kernel detection."""

import numpy as np
import pytest
import scipy.sparse as sp

from mortarcontact.analysis import (
    assemble_Q,
    infsup_constant,
    infsup_sweep,
    model_schur,
    patch_model,
    schur_complement,
    schur_kernel,
)
from mortarcontact.errors import ConfigurationError, SolverError


@pytest.fixture(scope="module")
def base_patch():
    return patch_model(4, 2)


@pytest.fixture(scope="module")
def base_schur(base_patch):
    return model_schur(base_patch)


class TestSchurComplement:
    def test_small_dense_identity_check(self):
        # S = B' A^-1 B with A = 2I is B'B / 2
        rng = np.random.default_rng(0)
        B = sp.csr_matrix(rng.normal(size=(6, 4)))
        A = sp.identity(6, format="csr") * 2.0
        S = schur_complement(A, B)
        assert S == pytest.approx((B.T @ B).toarray() / 2.0, rel=1e-12)

    def test_rejects_indefinite_block(self):
        A = sp.diags([1.0, -1.0, 1.0]).tocsr()
        B = sp.csr_matrix(np.ones((3, 2)))
        with pytest.raises(SolverError, match="positive definite"):
            schur_complement(A, B)

    def test_rejects_asymmetric_block(self):
        A = sp.csr_matrix(np.array([[1.0, 0.5], [0.0, 1.0]]))
        B = sp.csr_matrix(np.ones((2, 1)))
        with pytest.raises(SolverError, match="not symmetric"):
            schur_complement(A, B)

    def test_model_schur_symmetric_psd(self, base_schur):
        S = base_schur
        assert np.abs(S - S.T).max() <= 1e-12 * np.abs(S).max()
        ev = np.linalg.eigvalsh(S)
        assert ev.min() >= -1e-10 * ev.max()


class TestMassMatrix:
    def test_q_is_face_area_diagonal(self, base_patch):
        asm = base_patch.bindings[0].asm
        Q = assemble_Q(asm)
        # 4x4 unit-square grid: every face has area 1/16
        assert Q.shape == (48, 48)
        assert np.allclose(Q.diagonal(), 1.0 / 16.0)
        rng = np.random.default_rng(1)
        t = rng.normal(size=48)
        norms = (t.reshape(-1, 3) ** 2).sum(axis=1)
        assert t @ (Q @ t) == pytest.approx(float(asm.weights @ norms), rel=1e-13)


class TestInfSup:
    def test_unstabilized_kernel_and_beta(self, base_patch, base_schur):
        b = base_patch.bindings[0]
        Q = assemble_Q(b.asm)
        h = b.asm.interface.mean_h
        res = infsup_constant(base_schur, Q, h)
        assert res.beta <= 1e-7
        dim, vecs = schur_kernel(base_schur)
        assert dim >= 1
        # the reported eigvec attains the Rayleigh quotient lam_min
        t = res.eigvec
        num = t @ (base_schur @ t)
        den = t @ (h * Q @ t)
        assert num / den == pytest.approx(res.lam_min, abs=1e-10)

    def test_stabilization_removes_kernel(self, base_patch, base_schur):
        b = base_patch.bindings[0]
        Q = assemble_Q(b.asm)
        h = b.asm.interface.mean_h
        H = np.asarray(b.H.todense())
        dim, _ = schur_kernel(base_schur + H)
        assert dim == 0
        res = infsup_constant(base_schur, Q, h, H=b.H)
        assert res.beta > 1e-3  # bounded away from zero

    def test_checkerboard_mode_is_in_the_kernel(self, base_patch, base_schur):
        # alternating +/- normal tractions on the 4x4 grid and zero mean:
        # the classical spurious mode the stabilization is built to kill
        b = base_patch.bindings[0]
        asm = b.asm
        pos = b.entity_positions()
        i = np.round(pos[:, 0] * 4 - 0.5).astype(int)
        j = np.round(pos[:, 1] * 4 - 0.5).astype(int)
        sign = np.where((i + j) % 2 == 0, 1.0, -1.0)
        n = asm.frames[:, 0, :]
        mode = (sign[:, None] * n).ravel()
        S_norm = np.linalg.norm(base_schur, 2)
        resid = np.linalg.norm(base_schur @ mode) / (S_norm * np.linalg.norm(mode))
        assert resid <= 1e-8
        H = np.asarray(b.H.todense())
        assert mode @ (H @ mode) > 0

    def test_beta_scales_with_inverse_sqrt_young(self):
        # S ~ 1/E, Q fixed: beta* must shrink by sqrt(alpha) when E grows
        betas = {}
        for young in (1000.0, 4000.0):
            m = patch_model(4, 2, young=young)
            b = m.bindings[0]
            res = infsup_constant(
                model_schur(m), assemble_Q(b.asm), b.asm.interface.mean_h, H=b.H
            )
            betas[young] = res.beta
        assert betas[1000.0] / betas[4000.0] == pytest.approx(2.0, rel=1e-6)


class TestSweep:
    def test_sweep_rows_and_flags(self):
        rep = infsup_sweep([(4, 2)])
        assert len(rep.entries) == 2
        assert [e.stabilized for e in rep.entries] == [False, True]
        unstab, stab = rep.entries
        assert unstab.kernel_dim >= 1
        assert stab.kernel_dim == 0
        assert stab.beta > unstab.beta
        assert unstab.r_h == pytest.approx(0.5)
        header, rows = rep.rows()
        assert header[-1] == "beta_star"
        assert len(rows) == 2

    def test_stabilized_only(self):
        rep = infsup_sweep([(4, 2), (6, 3)], stabilized_only=True)
        assert len(rep.entries) == 2
        assert all(e.stabilized for e in rep.entries)


def test_q_rejects_nodal_mode():
    m = patch_model(4, 2, multiplier="nodal")
    with pytest.raises(ConfigurationError):
        assemble_Q(m.bindings[0].asm)
