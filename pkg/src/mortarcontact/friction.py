"""Coulomb friction: limit traction, consistent linearization, active sets.

Regimes follow the traction/gap sign convention of the mortar module:
compressive t_N < 0, opening g_N > 0. The slip increment uses a backward
difference against the last converged load step. The return-style limiting
traction t_T* = tau_lim * dgT / ||dgT|| is regularized by flooring the norm at
eps (a small length, 1e-12 times the model size by default).

Residual rows per entity (w = entity measure, c = unit-restoring scalar):
    stick: integrated jump rows          (enforces g = 0)
    slip:  n (n . ju) + (w/c)(t_T - t_T*)   (g_N = 0, traction on the cone)
    open:  (w/c) t                        (traction-free)
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError
from .mortar import MortarAssembly

STICK, SLIP, OPEN = 0, 1, 2
REGIME_NAMES = {STICK: "stick", SLIP: "slip", OPEN: "open"}


@dataclass(frozen=True)
class FrictionMaterial:
    """Coulomb parameters: cohesion >= 0, friction angle in radians in [0, pi/2)."""

    cohesion: float
    friction_angle: float

    def __post_init__(self):
        if self.cohesion < 0:
            raise ConfigurationError(f"cohesion must be non-negative, got {self.cohesion}")
        if not (0.0 <= self.friction_angle < np.pi / 2):
            raise ConfigurationError("friction angle must lie in [0, pi/2)")

    @property
    def tan_phi(self) -> float:
        return float(np.tan(self.friction_angle))


def coulomb_limit(t_n, mat: FrictionMaterial):
    """tau_lim = max(c - t_N tan(phi), 0); vectorized over t_N."""
    return np.maximum(mat.cohesion - np.asarray(t_n) * mat.tan_phi, 0.0)


def limiting_traction(dgt: np.ndarray, t_n: float, mat: FrictionMaterial, eps: float) -> np.ndarray:
    """Slip-aligned limit traction t_T* in 2D tangent coordinates."""
    dgt = np.asarray(dgt, dtype=float)
    tau = float(coulomb_limit(t_n, mat))
    nrm = max(float(np.linalg.norm(dgt)), eps)
    return tau * dgt / nrm


def friction_derivatives(dgt: np.ndarray, t_n: float, mat: FrictionMaterial, eps: float):
    """(d t_T*/d dgT (2x2), d t_T*/d t_N (2,)) at the current slip increment.

    Outside the cone (tau_lim floored to zero) both derivatives vanish.
    """
    dgt = np.asarray(dgt, dtype=float)
    tau = float(coulomb_limit(t_n, mat))
    if tau <= 0.0:
        return np.zeros((2, 2)), np.zeros(2)
    nrm = max(float(np.linalg.norm(dgt)), eps)
    dir_ = dgt / nrm
    ddgt = tau * (np.eye(2) - np.outer(dir_, dir_)) / nrm
    dtn = -mat.tan_phi * dir_
    return ddgt, dtn


@dataclass(frozen=True)
class KKTTolerances:
    """Transition tolerances; traction_tol and gap_tol are absolute scales."""

    traction_tol: float
    ratio_tol: float = 1e-8
    gap_tol: float = 0.0


@dataclass
class ContactState:
    """Per-entity regime flags and the last converged tangential gap."""

    regime: np.ndarray  # (E,) int, STICK/SLIP/OPEN
    frozen: np.ndarray  # (E,) bool
    prev_gt: np.ndarray  # (E, 3) tangential gap at the last converged step

    @classmethod
    def all_stick(cls, n_entities: int) -> "ContactState":
        return cls(
            regime=np.full(n_entities, STICK, dtype=np.int64),
            frozen=np.zeros(n_entities, dtype=bool),
            prev_gt=np.zeros((n_entities, 3)),
        )

    def copy(self) -> "ContactState":
        return ContactState(self.regime.copy(), self.frozen.copy(), self.prev_gt.copy())

    def counts(self) -> dict[str, int]:
        return {name: int((self.regime == r).sum()) for r, name in REGIME_NAMES.items()}


def traction_components(asm: MortarAssembly, t: np.ndarray):
    """Split entity tractions (3E,) into normal scalars and tangential vectors."""
    tv = t.reshape(-1, 3)
    n = asm.frames[:, 0, :]
    t_n = np.einsum("ed,ed->e", tv, n)
    t_t = tv - t_n[:, None] * n
    return t_n, t_t


def update_active_set(
    state: ContactState,
    asm: MortarAssembly,
    t: np.ndarray,
    g_n: np.ndarray,
    dgt: np.ndarray,
    mat: FrictionMaterial,
    tol: KKTTolerances,
) -> tuple[ContactState, int]:
    """One transition sweep; returns the new state and the number of flips.

    stick -> open : t_N > traction_tol
    stick -> slip : ||t_T|| > tau_lim (1 + ratio_tol) + traction_tol
    slip  -> open : t_N > traction_tol
    slip  -> stick: dgT . t_T < -traction_tol ||dgT||  (reverse sliding)
    open  -> stick: g_N < -gap_tol
    Frozen entities never change.
    """
    t_n, t_t = traction_components(asm, t)
    tau = coulomb_limit(t_n, mat)
    tt_norm = np.linalg.norm(t_t, axis=1)
    new = state.copy()
    changed = 0
    for e in range(asm.n_entities):
        if state.frozen[e]:
            continue
        r = state.regime[e]
        nr = r
        if r == STICK:
            if t_n[e] > tol.traction_tol:
                nr = OPEN
            elif tt_norm[e] > tau[e] * (1.0 + tol.ratio_tol) + tol.traction_tol:
                nr = SLIP
        elif r == SLIP:
            if t_n[e] > tol.traction_tol:
                nr = OPEN
            elif float(dgt[e] @ t_t[e]) < -tol.traction_tol * float(np.linalg.norm(dgt[e])):
                nr = STICK
        else:  # OPEN
            if g_n[e] < -tol.gap_tol:
                nr = STICK
        if nr != r:
            new.regime[e] = nr
            changed += 1
    return new, changed


def _block_diag(blocks: np.ndarray) -> sp.csr_matrix:
    """(E, 3, 3) entity blocks -> (3E, 3E) sparse block diagonal."""
    E = blocks.shape[0]
    rows = (3 * np.arange(E)[:, None, None] + np.arange(3)[None, :, None] + np.zeros(3, dtype=int)[None, None, :]).ravel()
    cols = (3 * np.arange(E)[:, None, None] + np.zeros(3, dtype=int)[None, :, None] + np.arange(3)[None, None, :]).ravel()
    return sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(3 * E, 3 * E)).tocsr()


@dataclass
class ContactOperator:
    """State-dependent multiplier rows: residual and Jacobian weights.

    r_t: (3E,) residual before stabilization. P: (3E, 3E) row weighting so that
    B2 = P @ [D, -M]. C: (3E, 3E) traction Jacobian block.
    """

    r_t: np.ndarray
    P: sp.csr_matrix
    C: sp.csr_matrix
    t_star: np.ndarray  # (E, 3) limiting tractions (zero off slip rows)


def contact_operator(
    asm: MortarAssembly,
    state: ContactState,
    t: np.ndarray,
    ju: np.ndarray,
    mat: FrictionMaterial,
    c_scale: float,
    eps: float,
) -> ContactOperator:
    """Assemble the multiplier residual rows and their Jacobian weights.

    ju is the integrated jump (D u_a - M u_b) as an (E, 3) array; t the entity
    tractions (3E,). The slip increment is measured against state.prev_gt.
    """
    E = asm.n_entities
    n = asm.frames[:, 0, :]
    w = asm.weights
    tv = t.reshape(-1, 3)
    t_n = np.einsum("ed,ed->e", tv, n)

    g = ju / w[:, None]
    g_n = np.einsum("ed,ed->e", g, n)
    g_t = g - g_n[:, None] * n
    dgt = g_t - state.prev_gt

    r = np.zeros((E, 3))
    Pb = np.zeros((E, 3, 3))
    Cb = np.zeros((E, 3, 3))
    t_star = np.zeros((E, 3))
    eye = np.eye(3)

    for e in range(E):
        ne = n[e]
        Pt = eye - np.outer(ne, ne)
        reg = state.regime[e]
        if reg == STICK:
            r[e] = ju[e]
            Pb[e] = eye
        elif reg == SLIP:
            T = asm.frames[e, 1:, :].T  # (3, 2)
            dgt2 = T.T @ dgt[e]
            ts2 = limiting_traction(dgt2, t_n[e], mat, eps)
            X2, dtn2 = friction_derivatives(dgt2, t_n[e], mat, eps)
            ts3 = T @ ts2
            t_star[e] = ts3
            tt3 = Pt @ tv[e]
            r[e] = ne * (ne @ ju[e]) + (w[e] / c_scale) * (tt3 - ts3)
            Pb[e] = np.outer(ne, ne) - (T @ X2 @ T.T) / c_scale
            Cb[e] = (w[e] / c_scale) * (Pt - np.outer(T @ dtn2, ne))
        else:  # OPEN
            r[e] = (w[e] / c_scale) * tv[e]
            Cb[e] = (w[e] / c_scale) * eye

    return ContactOperator(r_t=r.ravel(), P=_block_diag(Pb), C=_block_diag(Cb), t_star=t_star)
