"""Mortar finite elements for frictional contact on non-conforming hexahedral meshes."""

from .analysis import (
    InfSupReport,
    InfSupResult,
    assemble_Q,
    infsup_constant,
    infsup_sweep,
    model_schur,
    patch_model,
    schur_complement,
    schur_kernel,
)
from .benchmarks import (
    CASES,
    CaseReport,
    FractureParams,
    oracle_single_fracture,
    oscillation_metric,
    run_benchmark,
)
from .config import parse_infsup_config, parse_run_config
from .elasticity import (
    BodyForce,
    DirichletBC,
    ElasticMaterial,
    LoadCase,
    NeumannLoad,
    assemble_stiffness,
)
from .errors import (
    AssemblyError,
    ConfigurationError,
    InvalidGeometryError,
    MeshFormatError,
    MortarContactError,
    ProjectionError,
    SolverError,
)
from .friction import OPEN, SLIP, STICK, ContactState, FrictionMaterial, update_active_set
from .mesh import (
    InterfaceTopology,
    Mesh,
    build_interface,
    generate_structured,
    generate_tensor,
    nodes_on_plane,
)
from .io import read_mesh, write_csv, write_mesh, write_vtk
from .mortar import MortarAssembly, assemble_mortar, evaluate_gaps, jump_operator
from .solver import (
    ContactModel,
    InterfaceSpec,
    SimulationResult,
    SolutionState,
    SolverOptions,
    newton_solve,
    run_simulation,
    solve_load_step,
)
from .stabilization import StabilizationInfo, assemble_stabilization

__version__ = "0.1.0"

__all__ = [
    "AssemblyError",
    "BodyForce",
    "CASES",
    "CaseReport",
    "ConfigurationError",
    "ContactModel",
    "ContactState",
    "DirichletBC",
    "ElasticMaterial",
    "FractureParams",
    "FrictionMaterial",
    "InfSupReport",
    "InfSupResult",
    "InterfaceSpec",
    "InterfaceTopology",
    "InvalidGeometryError",
    "LoadCase",
    "Mesh",
    "MeshFormatError",
    "MortarAssembly",
    "MortarContactError",
    "NeumannLoad",
    "OPEN",
    "ProjectionError",
    "SLIP",
    "STICK",
    "SimulationResult",
    "SolutionState",
    "SolverError",
    "SolverOptions",
    "StabilizationInfo",
    "assemble_Q",
    "assemble_mortar",
    "assemble_stabilization",
    "assemble_stiffness",
    "build_interface",
    "evaluate_gaps",
    "generate_structured",
    "generate_tensor",
    "infsup_constant",
    "infsup_sweep",
    "jump_operator",
    "model_schur",
    "newton_solve",
    "nodes_on_plane",
    "oracle_single_fracture",
    "oscillation_metric",
    "parse_infsup_config",
    "parse_run_config",
    "patch_model",
    "read_mesh",
    "run_benchmark",
    "run_simulation",
    "schur_complement",
    "schur_kernel",
    "solve_load_step",
    "write_csv",
    "write_mesh",
    "write_vtk",
]
