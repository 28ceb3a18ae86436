"""Load stepping, active-set sweeps, and Newton solves of the saddle point.

The model couples elastic domains through mortar interfaces. Displacements
keep their prescribed values in the full vectors; the linear solves act on
the free displacement DOFs plus all traction DOFs. Each Newton iteration
factorizes

    [ A_ff  B1_f ] [du]   = - [ r_u            ]
    [ B2_f  C-H  ] [dt]       [ r_t - H t      ]

with a sparse LU. The active-set outer loop re-solves until a regime sweep
changes nothing; load steps hand their converged tangential gaps to the next
step's backward-difference slip increment.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .elasticity import (
    ElasticMaterial,
    LoadCase,
    assemble_stiffness,
    body_force_vector,
    face_traction_vector,
)
from .errors import ConfigurationError, SolverError
from .friction import (
    OPEN,
    REGIME_NAMES,
    SLIP,
    STICK,
    ContactState,
    FrictionMaterial,
    KKTTolerances,
    contact_operator,
    traction_components,
    update_active_set,
)
from .io import write_csv, write_vtk
from .mesh import Mesh, build_interface
from .mortar import MortarAssembly, assemble_mortar, evaluate_gaps
from .stabilization import StabilizationInfo, assemble_stabilization

log = logging.getLogger("mortarcontact")

# relative backward error of a Newton direction beyond which the
# factorization is declared numerically singular / merely suspicious
BACKWARD_ERR_MAX = 1e-6
BACKWARD_ERR_WARN = 1e-9
# a Newton direction this many times the model's own length or stress scale
# is a kernel blow-up; such directions pass the backward-error test because
# the huge kernel component inflates its denominator
BLOWUP_FACTOR = 1e8


@dataclass
class SolverOptions:
    """Solution controls; unit_scale is the stress-unit coefficient of the
    slip/open residual rows (dimensionally a stress, default 1)."""

    newton_tol: float = 1e-9
    newton_max_iter: int = 25
    active_set_max_iter: int = 30
    unit_scale: float = 1.0
    stabilization: bool = True
    multiplier: str = "p0"  # "p0" or "nodal"

    def __post_init__(self):
        if self.newton_tol <= 0 or self.newton_max_iter <= 0 or self.active_set_max_iter <= 0:
            raise ConfigurationError("solver tolerances and iteration caps must be positive")
        if self.unit_scale <= 0:
            raise ConfigurationError("unit_scale must be positive")
        if self.multiplier not in ("p0", "nodal"):
            raise ConfigurationError(f"unknown multiplier space {self.multiplier!r}")


@dataclass
class InterfaceSpec:
    """Contact interface between two domains; side a is the non-mortar side.

    freeze_where pins entities (faces in p0 mode, nodes in nodal mode) to the
    stick regime; it receives entity positions (E, 3) and returns a mask.
    """

    domain_a: int
    non_mortar_set: str
    domain_b: int
    mortar_set: str
    friction: FrictionMaterial
    freeze_where: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = ""


@dataclass
class InterfaceBinding:
    """Assembled interface: mortar blocks, stabilization, traction offsets."""

    spec: InterfaceSpec
    asm: MortarAssembly
    offset: int  # first traction DOF in the global multiplier vector
    frozen: np.ndarray
    H: sp.csr_matrix
    stab_info: StabilizationInfo | None

    @property
    def n_dofs(self) -> int:
        return 3 * self.asm.n_entities

    @property
    def dofs(self) -> slice:
        return slice(self.offset, self.offset + self.n_dofs)

    def entity_positions(self) -> np.ndarray:
        """Face centroids (p0) or node coordinates (nodal)."""
        if self.asm.mode == "p0":
            quads = self.asm.interface.nm_quads
            return self.asm.interface.mesh_a.nodes[quads].mean(axis=1)
        return self.asm.interface.mesh_a.nodes[self.asm.entities]


class ContactModel:
    """Immutable assembled system: stiffness, mortar coupling, stabilization."""

    def __init__(
        self,
        domains: Sequence[tuple[str, Mesh, dict[int, ElasticMaterial]]],
        interfaces: Sequence[InterfaceSpec],
        loads: LoadCase,
        options: SolverOptions | None = None,
    ):
        self.options = options or SolverOptions()
        self.loads = loads
        self.domain_names = [d[0] for d in domains]
        self.meshes = [d[1] for d in domains]
        self.materials = [d[2] for d in domains]

        self.offsets = np.cumsum([0] + [m.n_dofs for m in self.meshes])
        self.n_u = int(self.offsets[-1])
        stiff = [assemble_stiffness(m, mats) for m, mats in zip(self.meshes, self.materials)]
        self.A = sp.block_diag(stiff, format="csr")

        lo = np.min([m.nodes.min(axis=0) for m in self.meshes], axis=0)
        hi = np.max([m.nodes.max(axis=0) for m in self.meshes], axis=0)
        self.length_ref = float(np.linalg.norm(hi - lo))
        self.sigma_ref = max(mat.young for mats in self.materials for mat in mats.values())
        self.slip_eps = 1e-12 * self.length_ref
        self.kkt_tol = KKTTolerances(
            traction_tol=1e-10 * self.sigma_ref,
            ratio_tol=1e-8,
            gap_tol=1e-10 * self.length_ref,
        )

        self._build_dirichlet(interfaces)
        self._build_interfaces(interfaces)
        self._reduce()
        self._load_cache: dict[int, np.ndarray] = {}

    # -- assembly ---------------------------------------------------------

    def _build_interfaces(self, specs: Sequence[InterfaceSpec]) -> None:
        self.bindings: list[InterfaceBinding] = []
        offset = 0
        mode = self.options.multiplier
        diag = self.A.diagonal()
        for k, spec in enumerate(specs):
            topo = build_interface(
                self.meshes[spec.domain_a], spec.non_mortar_set,
                self.meshes[spec.domain_b], spec.mortar_set,
            )
            asm = assemble_mortar(topo, mode=mode)
            for msg in asm.coverage_warnings():
                log.warning("interface %d: %s", k, msg)
            H = sp.csr_matrix((3 * asm.n_entities, 3 * asm.n_entities))
            info = None
            if mode == "p0" and self.options.stabilization:
                sl_a = slice(self.offsets[spec.domain_a], self.offsets[spec.domain_a + 1])
                sl_b = slice(self.offsets[spec.domain_b], self.offsets[spec.domain_b + 1])
                H, info = assemble_stabilization(
                    asm, diag[sl_a], self.fixed[sl_a], diag[sl_b], self.fixed[sl_b]
                )
                if info.n_macroelements == 0:
                    log.warning("interface %d has no internal mortar node; stabilization skipped", k)
            binding = InterfaceBinding(
                spec=spec, asm=asm, offset=offset,
                frozen=np.zeros(asm.n_entities, dtype=bool), H=H, stab_info=info,
            )
            if spec.freeze_where is not None:
                binding.frozen = np.asarray(spec.freeze_where(binding.entity_positions()), dtype=bool)
            self.bindings.append(binding)
            offset += binding.n_dofs
        self.n_t = offset

        # J stacks the integrated jump rows [D, -M] of every interface into
        # global displacement columns; B1 = [D^T; -M^T] is exactly its transpose
        j_blocks = []
        for b in self.bindings:
            a, bb = b.spec.domain_a, b.spec.domain_b
            D, M = b.asm.D, b.asm.M
            cols_a = sp.csr_matrix(
                (D.data, D.indices + self.offsets[a], D.indptr), shape=(b.n_dofs, self.n_u)
            )
            cols_b = sp.csr_matrix(
                (M.data, M.indices + self.offsets[bb], M.indptr), shape=(b.n_dofs, self.n_u)
            )
            j_blocks.append(cols_a - cols_b)
        self.J = sp.vstack(j_blocks, format="csr") if j_blocks else sp.csr_matrix((0, self.n_u))
        self.B1 = self.J.T.tocsr()
        self.H = (
            sp.block_diag([b.H for b in self.bindings], format="csr")
            if self.bindings
            else sp.csr_matrix((0, 0))
        )

    def _build_dirichlet(self, specs: Sequence[InterfaceSpec]) -> None:
        drop: set[int] = set()
        self.dropped_constraints = 0
        if self.options.multiplier == "nodal":
            # the non-mortar side inherits its boundary values weakly: essential
            # constraints on its interface nodes are released (mortar side keeps them)
            for spec in specs:
                mesh = self.meshes[spec.domain_a]
                nodes = np.unique(mesh.face_quads(spec.non_mortar_set))
                base = self.offsets[spec.domain_a]
                drop.update(int(base + 3 * n + c) for n in nodes for c in range(3))

        self.fixed = np.zeros(self.n_u, dtype=bool)
        self._bc_dofs: list[np.ndarray] = []
        for bc in self.loads.dirichlet:
            if not (0 <= bc.domain < len(self.meshes)):
                raise ConfigurationError(f"dirichlet condition references unknown domain {bc.domain}")
            base = self.offsets[bc.domain]
            dofs = np.array(
                sorted(
                    int(base + 3 * n + c)
                    for n in np.asarray(bc.nodes, dtype=np.int64)
                    for c in bc.components
                ),
                dtype=np.int64,
            )
            kept = dofs[~np.isin(dofs, np.fromiter(drop, dtype=np.int64))] if drop else dofs
            self.dropped_constraints += len(dofs) - len(kept)
            self._bc_dofs.append(kept)
            self.fixed[kept] = True
        if self.dropped_constraints:
            log.info(
                "released %d essential constraints on non-mortar interface nodes",
                self.dropped_constraints,
            )

    def _reduce(self) -> None:
        self.free = ~self.fixed
        self.free_idx = np.flatnonzero(self.free)
        self.A_ff = self.A[self.free_idx][:, self.free_idx].tocsr()
        self.B1_f = self.B1[self.free_idx].tocsr()
        self.J_f = self.J[:, self.free_idx].tocsr()
        if self.n_t:
            # a tie row whose whole support is prescribed leaves its
            # multiplier undetermined; refuse the model rather than hand the
            # factorization a structurally singular saddle point
            dead = np.flatnonzero(np.diff(self.J_f.indptr) == 0)
            if dead.size:
                row = int(dead[0])
                for k, b in enumerate(self.bindings):
                    if row < b.offset + b.n_dofs:
                        comp = "xyz"[(row - b.offset) % 3]
                        name = b.spec.name or str(k)
                        raise ConfigurationError(
                            f"{dead.size} interface tie rows have every supporting "
                            f"displacement prescribed (first: interface {name!r}, entity "
                            f"{(row - b.offset) // 3}, component {comp}); the constraint is "
                            "redundant there and its multiplier undetermined. Leave at "
                            "least one node free in that component on one side."
                        )

    # -- loads and constraints --------------------------------------------

    def force_vector(self, step: int) -> np.ndarray:
        if step in self._load_cache:
            return self._load_cache[step]
        f = np.zeros(self.n_u)
        for load in self.loads.neumann:
            mesh = self.meshes[load.domain]
            sl = slice(self.offsets[load.domain], self.offsets[load.domain + 1])
            f[sl] += load.scale(step) * face_traction_vector(mesh, load.face_set, load.traction)
        for load in self.loads.body:
            mesh = self.meshes[load.domain]
            sl = slice(self.offsets[load.domain], self.offsets[load.domain + 1])
            f[sl] += load.scale(step) * body_force_vector(
                mesh, force=load.force, region=load.region, per_cell=load.per_cell
            )
        self._load_cache[step] = f
        return f

    def force_at(self, step: int, frac: float = 1.0) -> np.ndarray:
        """External force partway into a step: linear blend toward `step`'s loads."""
        f1 = self.force_vector(step)
        if frac >= 1.0:
            return f1
        f0 = self.force_vector(step - 1) if step > 0 else np.zeros(self.n_u)
        return f0 + frac * (f1 - f0)

    def prescribed_at(self, step: int, frac: float = 1.0) -> np.ndarray:
        v1 = self.prescribed_values(step)
        if frac >= 1.0:
            return v1
        v0 = self.prescribed_values(step - 1) if step > 0 else np.zeros(self.n_u)
        return v0 + frac * (v1 - v0)

    def prescribed_values(self, step: int) -> np.ndarray:
        vals = np.full(self.n_u, np.nan)
        for bc, dofs in zip(self.loads.dirichlet, self._bc_dofs):
            v = bc.value * bc.scale(step)
            seen = vals[dofs]
            clash = ~np.isnan(seen) & (seen != v)
            if np.any(clash):
                raise ConfigurationError(
                    f"conflicting prescribed values on displacement DOF {int(dofs[np.argmax(clash)])}"
                )
            vals[dofs] = v
        out = np.zeros(self.n_u)
        out[self.fixed] = vals[self.fixed]
        return out

    # -- state ------------------------------------------------------------

    def initial_state(self) -> "SolutionState":
        states = []
        for b in self.bindings:
            st = ContactState.all_stick(b.asm.n_entities)
            st.frozen = b.frozen.copy()
            states.append(st)
        return SolutionState(
            u=np.zeros(self.n_u), t=np.zeros(self.n_t), contact=states, step_done=-1
        )

    def domain_slice(self, d: int) -> slice:
        return slice(self.offsets[d], self.offsets[d + 1])

    def interface_gaps(self, sol: "SolutionState", k: int):
        b = self.bindings[k]
        u_a = sol.u[self.domain_slice(b.spec.domain_a)]
        u_b = sol.u[self.domain_slice(b.spec.domain_b)]
        return evaluate_gaps(b.asm, u_a, u_b)

    def interface_tractions(self, sol: "SolutionState", k: int):
        b = self.bindings[k]
        return traction_components(b.asm, sol.t[b.dofs])


@dataclass
class SolutionState:
    """Mutable solution: displacements, tractions, per-interface contact state."""

    u: np.ndarray
    t: np.ndarray
    contact: list[ContactState]
    step_done: int = -1

    def snapshot(self) -> dict:
        return {
            "u": self.u.copy(),
            "t": self.t.copy(),
            "step_done": self.step_done,
            "regime": [c.regime.copy() for c in self.contact],
            "frozen": [c.frozen.copy() for c in self.contact],
            "prev_gt": [c.prev_gt.copy() for c in self.contact],
        }

    @classmethod
    def restore(cls, snap: dict) -> "SolutionState":
        contact = [
            ContactState(regime=r.copy(), frozen=f.copy(), prev_gt=g.copy())
            for r, f, g in zip(snap["regime"], snap["frozen"], snap["prev_gt"])
        ]
        return cls(
            u=snap["u"].copy(), t=snap["t"].copy(), contact=contact,
            step_done=int(snap["step_done"]),
        )


@dataclass
class NewtonInfo:
    iterations: int
    residuals: list[float] = field(default_factory=list)
    converged: bool = False


@dataclass
class StepInfo:
    step: int
    changed_updates: int
    active_set_cycles: int
    newton: list[NewtonInfo] = field(default_factory=list)
    complementarity: float = 0.0
    regime_counts: dict[str, int] = field(default_factory=dict)

    @property
    def newton_iterations(self) -> int:
        return sum(n.iterations for n in self.newton)


def _pivot_report(lu: spla.SuperLU, n_free_u: int) -> str:
    du = np.abs(lu.U.diagonal())
    k = int(np.argmin(du))
    col = int(lu.perm_c[k])
    if col >= n_free_u:
        kind = f"traction DOF {col - n_free_u}; suspected spurious multiplier mode " \
               "(checkerboard on an unstabilized interface)"
    else:
        kind = f"displacement DOF {col}; suspected under-constrained rigid mode"
    return f"smallest pivot {du.min():.3e} at {kind}"


def _kkt_solve(
    K: sp.spmatrix,
    rhs: np.ndarray,
    n_free_u: int,
    u_scale: float = np.inf,
    t_scale: float = np.inf,
) -> np.ndarray:
    """Direct solve of one Newton system, rejecting numerically singular
    factorizations.

    Stiff rows from the slip regularization make pivot magnitudes an
    unreliable signal on their own, so the verdict comes from the computed
    direction: its backward error, and its size against the model's own
    displacement and traction scales.
    """
    try:
        lu = spla.splu(K.tocsc())
    except RuntimeError as exc:
        raise SolverError(
            f"saddle-point factorization failed ({exc}): smallest pivot 0; suspected "
            "spurious multiplier mode (checkerboard on an unstabilized interface) or "
            "under-constrained rigid mode"
        ) from exc
    delta = lu.solve(rhs)
    norm_k = float(np.abs(K).sum(axis=0).max()) if K.nnz else 0.0
    denom = norm_k * float(np.linalg.norm(delta, np.inf)) + float(np.linalg.norm(rhs, np.inf))
    backward = float(np.linalg.norm(K @ delta - rhs, np.inf)) / max(denom, 1e-300)
    du_max = float(np.abs(delta[:n_free_u]).max()) if n_free_u else 0.0
    dt_max = float(np.abs(delta[n_free_u:]).max()) if len(delta) > n_free_u else 0.0
    blowup = du_max > BLOWUP_FACTOR * u_scale or dt_max > BLOWUP_FACTOR * t_scale
    if not np.all(np.isfinite(delta)) or backward > BACKWARD_ERR_MAX or blowup:
        raise SolverError(
            f"numerically singular saddle point (backward error {backward:.3e}, "
            f"|du| {du_max:.3e}, |dt| {dt_max:.3e}): " + _pivot_report(lu, n_free_u)
        )
    if backward > BACKWARD_ERR_WARN:
        log.warning(
            "ill-conditioned saddle point: backward error %.3e (%s)",
            backward, _pivot_report(lu, n_free_u),
        )
    return delta


def _contact_rows(model: ContactModel, sol: SolutionState):
    """Residual rows, P and C blocks of every interface, concatenated."""
    rs, Ps, Cs = [], [], []
    for b, st in zip(model.bindings, sol.contact):
        u_a = sol.u[model.domain_slice(b.spec.domain_a)]
        u_b = sol.u[model.domain_slice(b.spec.domain_b)]
        ju = (b.asm.D @ u_a - b.asm.M @ u_b).reshape(-1, 3)
        op = contact_operator(
            b.asm, st, sol.t[b.dofs], ju, b.spec.friction,
            model.options.unit_scale, model.slip_eps,
        )
        rs.append(op.r_t)
        Ps.append(op.P)
        Cs.append(op.C)
    if not rs:
        z = sp.csr_matrix((0, 0))
        return np.zeros(0), z, z
    return (
        np.concatenate(rs),
        sp.block_diag(Ps, format="csr"),
        sp.block_diag(Cs, format="csr"),
    )


def _residual(model: ContactModel, sol: SolutionState, f: np.ndarray):
    r_u = model.A @ sol.u + model.B1 @ sol.t - f
    r_t, P, C = _contact_rows(model, sol)
    if model.n_t:
        r_t = r_t - model.H @ sol.t
    r = np.concatenate([r_u[model.free_idx], r_t])
    return r, float(np.linalg.norm(r)), P, C


_MAX_BACKTRACKS = 10


def newton_solve(
    model: ContactModel, sol: SolutionState, step: int, frac: float = 1.0
) -> NewtonInfo:
    """Newton iterations at a fixed active set; updates sol in place.

    Full steps are tried first; when the slip direction of a face reverses
    between iterates the full step can cycle, so the step is halved until the
    residual drops (the least-residual candidate is kept if none does).
    `frac` < 1 applies only part of the load increment of `step`.
    """
    opts = model.options
    f = model.force_at(step, frac)
    sol.u[model.fixed] = model.prescribed_at(step, frac)[model.fixed]
    info = NewtonInfo(iterations=0)
    nf = len(model.free_idx)
    r, norm, P, C = _residual(model, sol, f)
    info.residuals.append(norm)
    # Hold steps start near equilibrium, so the first residual alone is too
    # small a reference; the external load norm keeps the target achievable.
    load_scale = float(np.linalg.norm(f[model.free_idx]))
    tol = opts.newton_tol * max(norm, load_scale, 1e-30)
    while True:
        if norm <= tol:
            info.converged = True
            return info
        if info.iterations >= opts.newton_max_iter:
            raise SolverError(
                f"Newton did not converge in {opts.newton_max_iter} iterations at step "
                f"{step}: residual {norm:.3e} (start {info.residuals[0]:.3e})"
            )
        if model.n_t:
            K = sp.bmat([[model.A_ff, model.B1_f], [P @ model.J_f, C - model.H]], format="csc")
        else:
            K = model.A_ff.tocsc()
        delta = _kkt_solve(K, -r, nf, model.length_ref, model.sigma_ref)
        base_u = sol.u[model.free_idx].copy()
        base_t = sol.t.copy()
        best = None
        scale = 1.0
        for _ in range(_MAX_BACKTRACKS + 1):
            sol.u[model.free_idx] = base_u + scale * delta[:nf]
            sol.t = base_t + scale * delta[nf:]
            cand = _residual(model, sol, f)
            if best is None or cand[1] < best[0][1]:
                best = (cand, scale)
            if cand[1] <= (1.0 - 1e-4 * scale) * norm:
                break
            scale *= 0.5
        (r, norm, P, C), used = best
        sol.u[model.free_idx] = base_u + used * delta[:nf]
        sol.t = base_t + used * delta[nf:]
        info.iterations += 1
        if used < 1.0:
            log.debug("step %d: Newton step damped to %.3g", step, used)
        if norm > info.residuals[-1] * (1 + 1e-12):
            log.debug("Newton residual increased at iteration %d: %.3e", info.iterations, norm)
        info.residuals.append(norm)


def solve_load_step(
    model: ContactModel, sol: SolutionState, step: int, frac: float = 1.0
) -> StepInfo:
    """Alternate Newton solves and active-set sweeps until the partition holds."""
    opts = model.options
    out = StepInfo(step=step, changed_updates=0, active_set_cycles=0)
    for cycle in range(opts.active_set_max_iter):
        out.newton.append(newton_solve(model, sol, step, frac))
        out.active_set_cycles += 1
        changed_total = 0
        for k, (b, st) in enumerate(zip(model.bindings, sol.contact)):
            g, g_n, g_t = model.interface_gaps(sol, k)
            new_state, changed = update_active_set(
                st, b.asm, sol.t[b.dofs], g_n, g_t - st.prev_gt,
                b.spec.friction, model.kkt_tol,
            )
            sol.contact[k] = new_state
            changed_total += changed
        if changed_total == 0:
            break
        out.changed_updates += 1
        log.info("step %d cycle %d: %d regime changes", step, cycle, changed_total)
    else:
        counts = [c.counts() for c in sol.contact]
        raise SolverError(
            f"active set did not settle within {opts.active_set_max_iter} cycles "
            f"at step {step}; regime counts {counts}"
        )

    comp = 0.0
    for k, (b, st) in enumerate(zip(model.bindings, sol.contact)):
        g, g_n, g_t = model.interface_gaps(sol, k)
        t_n, _ = model.interface_tractions(sol, k)
        if len(t_n):
            # at stick/slip the tie enforced is ju - H t = 0, so the
            # complementarity gap must carry the same stabilization term
            tied = (b.H @ sol.t[b.dofs]).reshape(-1, 3) / b.asm.weights[:, None]
            n = b.asm.frames[:, 0, :]
            gn_eff = np.where(
                st.regime == OPEN, g_n, g_n - np.einsum("ed,ed->e", tied, n)
            )
            comp = max(comp, float(np.max(np.abs(t_n * gn_eff))))
        st.prev_gt = g_t.copy()
    out.complementarity = comp
    merged: dict[str, int] = {"stick": 0, "slip": 0, "open": 0}
    for c in sol.contact:
        for name, cnt in c.counts().items():
            merged[name] += cnt
    out.regime_counts = merged
    if frac >= 1.0:
        sol.step_done = step
    return out


@dataclass
class SimulationResult:
    model: ContactModel
    state: SolutionState
    steps: list[StepInfo]

    @property
    def changed_updates(self) -> int:
        return sum(s.changed_updates for s in self.steps)


def state_rows(model: ContactModel, sol: SolutionState):
    """Per-entity contact rows: interface, id, regime, t_N, |t_T|, g_N, |g_T|."""
    rows = []
    for k, (b, st) in enumerate(zip(model.bindings, sol.contact)):
        t_n, t_t = model.interface_tractions(sol, k)
        g, g_n, g_t = model.interface_gaps(sol, k)
        for e in range(b.asm.n_entities):
            rows.append(
                (
                    k,
                    int(b.asm.entities[e]),
                    REGIME_NAMES[int(st.regime[e])],
                    float(t_n[e]),
                    float(np.linalg.norm(t_t[e])),
                    float(g_n[e]),
                    float(np.linalg.norm(g_t[e])),
                )
            )
    return ["interface", "entity", "regime", "t_N", "t_T_norm", "g_N", "g_T_norm"], rows


def write_step_outputs(model: ContactModel, sol: SolutionState, step: int, outdir) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    header, rows = state_rows(model, sol)
    write_csv(out / f"state_step_{step}.csv", header, rows)
    disp = sol.u.reshape(-1, 3)
    write_vtk(
        out / f"fields_step_{step}.vtk",
        model.meshes,
        point_fields={"displacement": disp},
        cell_fields={"region": np.concatenate([m.regions for m in model.meshes])},
    )


_MAX_CUTS = 10


def _advance_step(model: ContactModel, sol: SolutionState, step: int) -> tuple[SolutionState, StepInfo]:
    """One load step, bisecting the increment when the nonlinear solve fails.

    Each converged sub-increment commits the friction state, so the backward
    difference of the tangential gap follows the refined load path.
    """
    done = 0.0
    frac = 1.0
    cuts = 0
    info: StepInfo | None = None
    while True:
        snap = sol.snapshot()
        try:
            part = solve_load_step(model, sol, step, frac)
        except SolverError:
            cuts += 1
            if cuts > _MAX_CUTS:
                raise
            sol = SolutionState.restore(snap)
            frac = done + 0.5 * (frac - done)
            log.info("step %d: solve failed, retrying at load fraction %.4g", step, frac)
            continue
        if info is None:
            info = part
        else:
            info.newton.extend(part.newton)
            info.active_set_cycles += part.active_set_cycles
            info.changed_updates += part.changed_updates
            info.complementarity = part.complementarity
            info.regime_counts = part.regime_counts
        if frac >= 1.0:
            return sol, info
        # grow the sub-increment again instead of jumping straight back to
        # the full step, which tends to fail for the same reason it just did
        inc = frac - done
        done = frac
        frac = min(1.0, done + 2.0 * inc)


def run_simulation(
    model: ContactModel,
    output_dir=None,
    state: SolutionState | None = None,
    stop_after: int | None = None,
) -> SimulationResult:
    """Run the load schedule; resume from `state` if given (restart support)."""
    sol = state if state is not None else model.initial_state()
    infos: list[StepInfo] = []
    last = model.loads.n_steps - 1 if stop_after is None else min(stop_after, model.loads.n_steps - 1)
    lines = []
    for step in range(sol.step_done + 1, last + 1):
        sol, info = _advance_step(model, sol, step)
        infos.append(info)
        lines.append(
            f"step {step}: cycles={info.active_set_cycles} changed={info.changed_updates} "
            f"newton={info.newton_iterations} residual={info.newton[-1].residuals[-1]:.3e} "
            f"regimes={info.regime_counts} complementarity={info.complementarity:.3e}"
        )
        log.info(lines[-1])
        if output_dir is not None:
            write_step_outputs(model, sol, step, output_dir)
    if output_dir is not None:
        Path(output_dir).mkdir(parents=True, exist_ok=True)
        with open(Path(output_dir) / "convergence.log", "a") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))
    return SimulationResult(model=model, state=sol, steps=infos)
