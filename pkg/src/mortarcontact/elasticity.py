"""Isotropic linear elasticity on trilinear hexahedra.

Stiffness uses 2x2x2 Gauss integration (exact for affine cells); Voigt order is
(xx, yy, zz, xy, yz, zx) with engineering shear strains. Dirichlet conditions
are eliminated symmetrically by the solver, which keeps the reduced stiffness
positive definite.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import AssemblyError, ConfigurationError
from .mesh import Mesh, hex_shape, hex_shape_grad, quad_shape, quad_shape_grad
from .quadrature import gauss_hex, gauss_quad


@dataclass(frozen=True)
class ElasticMaterial:
    """Isotropic material; young > 0 and -1 < poisson < 0.5."""

    young: float
    poisson: float

    def __post_init__(self):
        if self.young <= 0:
            raise ConfigurationError(f"Young modulus must be positive, got {self.young}")
        if not (-1.0 < self.poisson < 0.5):
            raise ConfigurationError(f"Poisson ratio must lie in (-1, 0.5), got {self.poisson}")

    @property
    def lame(self) -> tuple[float, float]:
        lam = self.young * self.poisson / ((1 + self.poisson) * (1 - 2 * self.poisson))
        mu = self.young / (2 * (1 + self.poisson))
        return lam, mu

    def voigt(self) -> np.ndarray:
        lam, mu = self.lame
        D = np.zeros((6, 6))
        D[:3, :3] = lam
        D[np.arange(3), np.arange(3)] += 2 * mu
        D[np.arange(3, 6), np.arange(3, 6)] = mu
        return D


def cell_dofs(cells: np.ndarray) -> np.ndarray:
    """(m, 24) displacement dof indices for (m, 8) cells."""
    return (3 * cells[:, :, None] + np.arange(3)[None, None, :]).reshape(cells.shape[0], 24)


def assemble_stiffness(mesh: Mesh, materials: dict[int, ElasticMaterial], n_gauss: int = 2) -> sp.csr_matrix:
    """Global stiffness (3n x 3n) for one mesh; materials keyed by region tag."""
    missing = set(int(r) for r in np.unique(mesh.regions)) - set(materials)
    if missing:
        raise AssemblyError(f"no material for region tags {sorted(missing)}")

    pts, wts = gauss_hex(n_gauss)
    grads = hex_shape_grad(pts)  # (G, 8, 3)
    xyz = mesh.nodes[mesh.cells]  # (m, 8, 3)
    m = mesh.n_cells
    K = np.zeros((m, 24, 24))

    Dm = np.empty((m, 6, 6))
    for tag, mat in materials.items():
        Dm[mesh.regions == tag] = mat.voigt()

    for g in range(pts.shape[0]):
        jac = np.einsum("ia,mid->mad", grads[g], xyz)  # d x_d / d xi_a
        det = np.linalg.det(jac)
        if (det <= 0).any():
            raise AssemblyError("non-positive Jacobian at a quadrature point")
        inv = np.linalg.inv(jac)
        # jac[a, d] = dx_d/dxi_a, so dxi_a/dx_d sits at inv[d, a]
        dphys = np.einsum("ia,mda->mid", grads[g], inv)  # dN_i/dx_d
        B = np.zeros((m, 6, 24))
        ix = np.arange(8)
        B[:, 0, 3 * ix + 0] = dphys[:, :, 0]
        B[:, 1, 3 * ix + 1] = dphys[:, :, 1]
        B[:, 2, 3 * ix + 2] = dphys[:, :, 2]
        B[:, 3, 3 * ix + 0] = dphys[:, :, 1]
        B[:, 3, 3 * ix + 1] = dphys[:, :, 0]
        B[:, 4, 3 * ix + 1] = dphys[:, :, 2]
        B[:, 4, 3 * ix + 2] = dphys[:, :, 1]
        B[:, 5, 3 * ix + 0] = dphys[:, :, 2]
        B[:, 5, 3 * ix + 2] = dphys[:, :, 0]
        K += np.einsum("mak,mab,mbl,m->mkl", B, Dm, B, det * wts[g], optimize=True)

    dofs = cell_dofs(mesh.cells)
    rows = np.repeat(dofs, 24, axis=1).ravel()
    cols = np.tile(dofs, (1, 24)).ravel()
    A = sp.coo_matrix((K.ravel(), (rows, cols)), shape=(mesh.n_dofs, mesh.n_dofs)).tocsr()
    A.sum_duplicates()
    # rounding in the triple product and in duplicate summation leaves the
    # assembly symmetric only to ~1e-14; downstream solves want it to the bit
    return 0.5 * (A + A.T)


def face_traction_vector(mesh: Mesh, face_set: str, traction: np.ndarray) -> np.ndarray:
    """Consistent nodal forces of a uniform traction on a face set: (3n,)."""
    t = np.asarray(traction, dtype=float)
    quads = mesh.face_quads(face_set)
    pts, wts = gauss_quad(2)
    shapes = quad_shape(pts)  # (4gp, 4)
    grads = quad_shape_grad(pts)  # (4gp, 4, 2)
    xyz = mesh.nodes[quads]  # (k, 4, 3)
    tang = np.einsum("gia,kid->kgad", grads, xyz)
    dA = np.linalg.norm(np.cross(tang[:, :, 0, :], tang[:, :, 1, :]), axis=2)  # (k, g)
    nodal = np.einsum("kg,gi,g->ki", dA, shapes, wts)  # integral of N_i per face
    f = np.zeros(mesh.n_dofs)
    for c in range(3):
        np.add.at(f, 3 * quads + c, nodal * t[c])
    return f


def body_force_vector(mesh: Mesh, force: np.ndarray | None = None, region: int | None = None,
                      per_cell: np.ndarray | None = None) -> np.ndarray:
    """Consistent nodal forces of a body force density.

    Either a uniform force (3,) optionally restricted to a region tag, or an
    explicit per-cell density array (m, 3).
    """
    if (force is None) == (per_cell is None):
        raise ConfigurationError("provide exactly one of force or per_cell")
    dens = np.zeros((mesh.n_cells, 3))
    if force is not None:
        mask = np.ones(mesh.n_cells, bool) if region is None else mesh.regions == region
        dens[mask] = np.asarray(force, dtype=float)
    else:
        per_cell = np.asarray(per_cell, dtype=float)
        if per_cell.shape != (mesh.n_cells, 3):
            raise ConfigurationError("per_cell must be shaped (n_cells, 3)")
        dens = per_cell

    pts, wts = gauss_hex(2)
    shapes = hex_shape(pts)  # (G, 8)
    grads = hex_shape_grad(pts)
    xyz = mesh.nodes[mesh.cells]
    f = np.zeros(mesh.n_dofs)
    for g in range(pts.shape[0]):
        jac = np.einsum("ia,mid->mad", grads[g], xyz)
        det = np.linalg.det(jac)
        contrib = np.einsum("m,i,mc->mic", det * wts[g], shapes[g], dens)  # (m, 8, 3)
        for c in range(3):
            np.add.at(f, 3 * mesh.cells + c, contrib[:, :, c])
    return f


@dataclass
class NeumannLoad:
    """Uniform traction on a face set, scaled by an optional per-step schedule."""

    domain: int
    face_set: str
    traction: np.ndarray
    schedule: np.ndarray | None = None
    name: str = ""

    def scale(self, step: int) -> float:
        if self.schedule is None:
            return 1.0
        return float(self.schedule[min(step, len(self.schedule) - 1)])


@dataclass
class BodyForce:
    domain: int
    force: np.ndarray | None = None
    region: int | None = None
    per_cell: np.ndarray | None = None
    schedule: np.ndarray | None = None
    name: str = ""

    def scale(self, step: int) -> float:
        if self.schedule is None:
            return 1.0
        return float(self.schedule[min(step, len(self.schedule) - 1)])


@dataclass
class DirichletBC:
    """Prescribed displacement components on a node set of one domain."""

    domain: int
    nodes: np.ndarray
    components: tuple[int, ...]
    value: float = 0.0
    schedule: np.ndarray | None = None
    name: str = ""

    def scale(self, step: int) -> float:
        if self.schedule is None:
            return 1.0
        return float(self.schedule[min(step, len(self.schedule) - 1)])


@dataclass
class LoadCase:
    """Loads, constraints, and the pseudo-time step count of a simulation."""

    neumann: list[NeumannLoad] = field(default_factory=list)
    body: list[BodyForce] = field(default_factory=list)
    dirichlet: list[DirichletBC] = field(default_factory=list)
    n_steps: int = 1
