"""Macroelement-scaled jump penalization for face-wise constant multipliers.

Face-wise constant tractions on the non-mortar side overconstrain the
interface when that side is the finer one. The fix assembled here penalizes
traction jumps across internal edges of the non-mortar facing, scaled so the
penalty matches the local Schur complement of the saddle point:

1. A macroelement is grown around every internal node of the mortar facing
   (a node of the mortar patch that touches no patch-boundary edge): its
   mortar faces, the non-mortar faces overlapping them, and the nodes of both
   face groups.
2. On the macroelement the Schur complement of the local saddle point is
   estimated with the stiffness diagonal: S = D diag(A1)^-1 D^T
   + M diag(A2)^-1 M^T, restricted to the local free displacement DOFs.
   Because the mortar matrices couple like Cartesian components only, the
   3x3 face blocks of S are diagonal.
3. Every internal edge between two member faces K, L receives the 6x6
   contribution [S_E, -S_E; -S_E, S_E] with S_E = (S_KK + S_LL) / 2,
   accumulated over all macroelements that cover the edge.

The result H is symmetric positive semidefinite and vanishes on tractions
that are constant over the interface, so consistency is untouched.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError
from .mortar import MortarAssembly


@dataclass(frozen=True)
class Macroelement:
    """Faces gathered around one internal mortar node."""

    node: int
    m_faces: np.ndarray
    nm_faces: np.ndarray


@dataclass
class StabilizationInfo:
    """Coverage bookkeeping for diagnostics and reports."""

    n_macroelements: int
    n_internal_edges: int
    edge_counts: np.ndarray  # accumulation multiplicity per internal edge
    uncovered_faces: np.ndarray  # non-mortar faces in no macroelement

    @property
    def n_uncovered_edges(self) -> int:
        return int((self.edge_counts == 0).sum())


def build_macroelements(asm: MortarAssembly) -> list[Macroelement]:
    """One macroelement per internal mortar node, via the overlap pairing."""
    interface = asm.interface
    overlap: dict[int, set[int]] = {}
    for pair in asm.projection.pairs:
        overlap.setdefault(pair.m_face, set()).add(pair.nm_face)
    out = []
    for node in interface.mortar_internal_nodes:
        m_faces = interface.mortar_node_faces[int(node)]
        nm: set[int] = set()
        for mf in m_faces:
            nm |= overlap.get(int(mf), set())
        if nm:
            out.append(
                Macroelement(
                    node=int(node),
                    m_faces=np.asarray(m_faces, dtype=np.int64),
                    nm_faces=np.array(sorted(nm), dtype=np.int64),
                )
            )
    return out


def inverse_diagonal(diag: np.ndarray, fixed: np.ndarray) -> np.ndarray:
    """Per-node (n, 3) reciprocal stiffness diagonal, zeroed on fixed DOFs."""
    d = np.asarray(diag, dtype=float).reshape(-1, 3).copy()
    if np.any(d[~fixed.reshape(-1, 3)] <= 0):
        raise ConfigurationError("stiffness diagonal must be positive on free DOFs")
    inv = np.zeros_like(d)
    free = ~fixed.reshape(-1, 3)
    inv[free] = 1.0 / d[free]
    return inv


def macroelement_schur(
    asm: MortarAssembly,
    me: Macroelement,
    ds: sp.csr_matrix,
    ms: sp.csr_matrix,
    inva1: np.ndarray,
    inva2: np.ndarray,
) -> np.ndarray:
    """Diagonals of the local Schur face blocks, one (3,) row per member face.

    ds, ms are the scalar (single-component) mortar matrices; inva1, inva2 the
    (n, 3) reciprocal stiffness diagonals of the two sides.
    """
    interface = asm.interface
    loc1 = np.unique(interface.nm_quads[me.nm_faces])
    loc2 = np.unique(interface.m_quads[me.m_faces])
    dsub = ds[me.nm_faces][:, loc1].toarray()
    msub = ms[me.nm_faces][:, loc2].toarray()
    return dsub**2 @ inva1[loc1] + msub**2 @ inva2[loc2]


def edge_block(s_diag: np.ndarray) -> np.ndarray:
    """6x6 edge contribution [S, -S; -S, S] for a diagonal 3x3 tensor."""
    s = np.diag(np.asarray(s_diag, dtype=float))
    return np.block([[s, -s], [-s, s]])


def assemble_stabilization(
    asm: MortarAssembly,
    diag_a: np.ndarray,
    fixed_a: np.ndarray,
    diag_b: np.ndarray,
    fixed_b: np.ndarray,
) -> tuple[sp.csr_matrix, StabilizationInfo]:
    """Assemble H over the face traction entities of one interface.

    diag_*: stiffness diagonals (3n,) of the two domains; fixed_*: boolean
    prescribed-DOF masks of the same shape. Only the face-wise multiplier
    mode carries a jump penalty.
    """
    if asm.mode != "p0":
        raise ConfigurationError("jump stabilization requires face-wise multipliers")
    interface = asm.interface
    E = asm.n_entities
    edges = interface.internal_edges
    edge_index = {(int(k), int(l)): i for i, (k, l) in enumerate(edges)}
    counts = np.zeros(len(edges), dtype=np.int64)

    inva1 = inverse_diagonal(diag_a, fixed_a)
    inva2 = inverse_diagonal(diag_b, fixed_b)
    ds = asm.D[0::3, 0::3].tocsr()
    ms = asm.M[0::3, 0::3].tocsr()

    macros = build_macroelements(asm)
    covered = np.zeros(interface.nm_quads.shape[0], dtype=bool)

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    comp = np.arange(3)
    for me in macros:
        covered[me.nm_faces] = True
        s_face = macroelement_schur(asm, me, ds, ms, inva1, inva2)
        pos = {int(f): i for i, f in enumerate(me.nm_faces)}
        member = set(pos)
        for k, l in ((a, b) for a in member for b in member if a < b):
            ei = edge_index.get((k, l))
            if ei is None:
                continue
            counts[ei] += 1
            s = 0.5 * (s_face[pos[k]] + s_face[pos[l]])
            rk, rl = 3 * k + comp, 3 * l + comp
            rows.append(np.concatenate([rk, rl, rk, rl]))
            cols.append(np.concatenate([rk, rl, rl, rk]))
            vals.append(np.concatenate([s, s, -s, -s]))

    if rows:
        H = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(3 * E, 3 * E),
        ).tocsr()
    else:
        H = sp.csr_matrix((3 * E, 3 * E))
    info = StabilizationInfo(
        n_macroelements=len(macros),
        n_internal_edges=len(edges),
        edge_counts=counts,
        uncovered_faces=np.flatnonzero(~covered),
    )
    return H, info
