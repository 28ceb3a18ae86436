"""Numerical inf-sup evaluation and Schur-kernel diagnostics.

The discrete inf-sup constant of the traction space is measured as

    (beta*)^2 = min_t (t' S t) / (h t' Q t),   S = B1' A_ff^-1 B1,

with Q the multiplier mass matrix and h the mean non-mortar face diameter.
S is formed densely from triangular solves (patch-scale systems only). The
same machinery reports the kernel of S, whose eigenvectors are the spurious
traction profiles the stabilization is meant to remove.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .elasticity import DirichletBC, ElasticMaterial, LoadCase
from .errors import ConfigurationError, SolverError
from .friction import FrictionMaterial
from .mesh import Mesh, generate_structured, nodes_on_plane
from .mortar import MortarAssembly
from .solver import ContactModel, InterfaceSpec, SolverOptions

KERNEL_TOL = 1e-10


def assemble_Q(asm: MortarAssembly) -> sp.csr_matrix:
    """Multiplier mass matrix: t' Q t = integral of |t_h|^2 over the interface.

    For face-wise constants this is block-diagonal with area(F) I3 per face.
    """
    if asm.mode != "p0":
        raise ConfigurationError("the inf-sup mass matrix is defined for face-wise multipliers")
    areas = np.repeat(asm.weights, 3)
    return sp.diags(areas).tocsr()


def _check_spd(A: sp.csr_matrix) -> None:
    asym = abs(A - A.T).max()
    scale = abs(A).max()
    if asym > 1e-10 * scale:
        raise SolverError("stiffness block is not symmetric")
    rng = np.random.default_rng(0)
    for _ in range(3):
        x = rng.standard_normal(A.shape[0])
        if x @ (A @ x) <= 0:
            raise SolverError(
                "stiffness block is not positive definite; boundary constraints are likely missing"
            )


def schur_complement(A_ff: sp.csr_matrix, B1_f: sp.spmatrix) -> np.ndarray:
    """Dense S = B1' A_ff^-1 B1 on the free displacement DOFs."""
    _check_spd(A_ff)
    try:
        lu = spla.splu(A_ff.tocsc())
    except RuntimeError as exc:
        raise SolverError(
            f"stiffness factorization failed ({exc}); boundary constraints are likely missing"
        ) from exc
    X = lu.solve(np.asarray(B1_f.todense()))
    S = B1_f.T @ X
    return 0.5 * (S + S.T)


def model_schur(model: ContactModel) -> np.ndarray:
    return schur_complement(model.A_ff, model.B1_f)


@dataclass
class InfSupResult:
    beta: float
    lam_min: float
    eigvec: np.ndarray  # traction mode attaining the minimum


def infsup_constant(S: np.ndarray, Q: sp.spmatrix, h: float, H: sp.spmatrix | None = None) -> InfSupResult:
    """beta* from the generalized eigenproblem (S [+H]) t = lambda (h Q) t."""
    G = S if H is None else S + np.asarray(H.todense())
    G = 0.5 * (G + G.T)
    B = h * np.asarray(Q.todense())
    vals, vecs = sla.eigh(G, B)
    lam = float(vals[0])
    return InfSupResult(beta=float(np.sqrt(max(lam, 0.0))), lam_min=lam, eigvec=vecs[:, 0])


def schur_kernel(S: np.ndarray, tol: float = KERNEL_TOL) -> tuple[int, np.ndarray]:
    """Kernel dimension and spanning eigenvectors of a dense symmetric S."""
    vals, vecs = sla.eigh(0.5 * (S + S.T))
    top = float(vals[-1])
    mask = vals < tol * max(top, np.finfo(float).tiny)
    return int(mask.sum()), vecs[:, mask]


# -- patch family -------------------------------------------------------------


def patch_model(
    n_nm: int,
    n_m: int,
    stabilization: bool = True,
    multiplier: str = "p0",
    young: float = 1000.0,
    poisson: float = 0.25,
) -> ContactModel:
    """Two stacked unit blocks with fully fixed outer boundary.

    The lower block [0,1]^2 x [0,1] is meshed n_nm^3 and carries the
    multipliers on its top face; the upper block [0,1]^2 x [1,2] is meshed
    n_m^3. Only the strict interior of the interface plane stays free, which
    is the configuration whose Schur complement exhibits the spurious
    traction modes.
    """
    lower = generate_structured((1.0, 1.0, 1.0), (n_nm, n_nm, n_nm))
    upper = generate_structured((1.0, 1.0, 1.0), (n_m, n_m, n_m), offset=(0.0, 0.0, 1.0))
    mat = ElasticMaterial(young=young, poisson=poisson)

    def shell(mesh: Mesh, z_out: float) -> np.ndarray:
        picks = [
            nodes_on_plane(mesh, 0, 0.0), nodes_on_plane(mesh, 0, 1.0),
            nodes_on_plane(mesh, 1, 0.0), nodes_on_plane(mesh, 1, 1.0),
            nodes_on_plane(mesh, 2, z_out),
        ]
        return np.unique(np.concatenate(picks))

    loads = LoadCase(
        dirichlet=[
            DirichletBC(domain=0, nodes=shell(lower, 0.0), components=(0, 1, 2)),
            DirichletBC(domain=1, nodes=shell(upper, 2.0), components=(0, 1, 2)),
        ]
    )
    spec = InterfaceSpec(
        domain_a=0, non_mortar_set="zmax", domain_b=1, mortar_set="zmin",
        friction=FrictionMaterial(cohesion=0.0, friction_angle=np.radians(30.0)),
    )
    opts = SolverOptions(stabilization=stabilization, multiplier=multiplier)
    return ContactModel(
        [("lower", lower, {0: mat}), ("upper", upper, {0: mat})], [spec], loads, opts
    )


@dataclass
class SweepEntry:
    n_nm: int
    n_m: int
    h: float
    r_h: float
    stabilized: bool
    beta: float
    lam_min: float
    kernel_dim: int


@dataclass
class InfSupReport:
    entries: list[SweepEntry] = field(default_factory=list)

    def rows(self):
        header = ["n_nm", "n_m", "h", "r_h", "stabilized", "beta_star"]
        return header, [
            (e.n_nm, e.n_m, e.h, e.r_h, int(e.stabilized), e.beta) for e in self.entries
        ]


def infsup_sweep(pairs: list[tuple[int, int]], stabilized_only: bool = False) -> InfSupReport:
    """Evaluate beta* with and without stabilization for each (n_nm, n_m)."""
    report = InfSupReport()
    for n_nm, n_m in pairs:
        model = patch_model(n_nm, n_m, stabilization=True)
        b = model.bindings[0]
        S = model_schur(model)
        Q = assemble_Q(b.asm)
        h = b.asm.interface.mean_h
        variants = [True] if stabilized_only else [False, True]
        for stab in variants:
            res = infsup_constant(S, Q, h, H=b.H if stab else None)
            G = S + (np.asarray(b.H.todense()) if stab else 0.0)
            dim, _ = schur_kernel(G)
            report.entries.append(
                SweepEntry(
                    n_nm=n_nm, n_m=n_m, h=h, r_h=b.asm.interface.ratio,
                    stabilized=stab, beta=res.beta, lam_min=res.lam_min, kernel_dim=dim,
                )
            )
    return report
