"""Run-configuration files: INI sections for domains, materials, interfaces,
boundary conditions, load schedules, and solver options.

Example:

    [domain.lower]
    extent = 1 1 1
    divisions = 4 4 4

    [domain.upper]
    mesh = upper.mesh

    [material.lower.0]
    young = 1000
    poisson = 0.0

    [interface.fault]
    non_mortar = lower.zmax
    mortar = upper.zmin

    [friction]
    cohesion = 0
    angle_degrees = 30

    [dirichlet.base]
    domain = lower
    where = z=0
    components = xyz

    [load.press]
    domain = upper
    faceset = zmax
    traction = 0 0 -1
    schedule = 0.5 1.0

    [solver]
    steps = 2

`where` selectors take a face-set name (`set=name`), `all`, or `&`-joined
coordinate planes (`x=2 & y=0`). Schedules list one scale factor per load
step; the last entry extends to any remaining steps.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .elasticity import BodyForce, DirichletBC, ElasticMaterial, LoadCase, NeumannLoad
from .errors import ConfigurationError
from .friction import FrictionMaterial
from .io import read_mesh
from .mesh import Mesh, generate_structured, nodes_on_plane
from .solver import ContactModel, InterfaceSpec, SolverOptions


def _floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split()]
    except ValueError as exc:
        raise ConfigurationError(f"expected numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise ConfigurationError(f"expected integers, got {text!r}")
    return [int(v) for v in vals]


def _vector(text: str, n: int = 3) -> np.ndarray:
    vals = _floats(text)
    if len(vals) != n:
        raise ConfigurationError(f"expected {n} components, got {text!r}")
    return np.array(vals)


_COMPONENT = {"x": 0, "y": 1, "z": 2}
_AXIS = {"x": 0, "y": 1, "z": 2}


def _components(text: str) -> tuple[int, ...]:
    out = []
    for ch in text.strip():
        if ch not in _COMPONENT:
            raise ConfigurationError(f"unknown displacement component {ch!r}")
        out.append(_COMPONENT[ch])
    if not out:
        raise ConfigurationError("empty component list")
    return tuple(out)


def select_nodes(mesh: Mesh, where: str) -> np.ndarray:
    """Node selector: `all`, `set=<faceset>`, or `&`-joined `axis=value` planes."""
    where = where.strip()
    if where == "all":
        return np.arange(mesh.n_nodes, dtype=np.int64)
    if where.startswith("set="):
        return mesh.face_set_nodes(where[4:].strip())
    picked: np.ndarray | None = None
    for term in where.split("&"):
        term = term.strip()
        if "=" not in term:
            raise ConfigurationError(f"bad node selector term {term!r}")
        axis, value = term.split("=", 1)
        axis = axis.strip()
        if axis not in _AXIS:
            raise ConfigurationError(f"unknown axis {axis!r} in selector")
        nodes = nodes_on_plane(mesh, _AXIS[axis], float(value))
        picked = nodes if picked is None else np.intersect1d(picked, nodes)
    if picked is None or len(picked) == 0:
        raise ConfigurationError(f"selector {where!r} matched no nodes")
    return picked


def _freeze_predicate(inside: np.ndarray | None, outside: np.ndarray | None):
    """Entity-position predicate for pinned-stick regions (box coordinates
    given as x0 y0 z0 x1 y1 z1)."""
    if inside is None and outside is None:
        return None

    def fn(pos: np.ndarray) -> np.ndarray:
        mask = np.zeros(len(pos), dtype=bool)
        if inside is not None:
            mask |= np.all((pos >= inside[:3]) & (pos <= inside[3:]), axis=1)
        if outside is not None:
            mask |= ~np.all((pos >= outside[:3]) & (pos <= outside[3:]), axis=1)
        return mask

    return fn


@dataclass
class RunConfig:
    """Parsed configuration; `build()` assembles the contact model."""

    domains: list[tuple[str, Mesh, dict[int, ElasticMaterial]]]
    interfaces: list[InterfaceSpec]
    loads: LoadCase
    options: SolverOptions
    output_dir: Path | None = None
    interface_names: list[str] = field(default_factory=list)

    def domain_index(self, name: str) -> int:
        for i, (dname, _, _) in enumerate(self.domains):
            if dname == name:
                return i
        raise ConfigurationError(f"unknown domain {name!r}")

    def build(self) -> ContactModel:
        return ContactModel(self.domains, self.interfaces, self.loads, self.options)


def _domain_ref(cfg: RunConfig, text: str) -> tuple[int, str]:
    if "." not in text:
        raise ConfigurationError(f"expected domain.faceset, got {text!r}")
    dom, fset = text.rsplit(".", 1)
    return cfg.domain_index(dom.strip()), fset.strip()


def parse_run_config(path) -> RunConfig:
    path = Path(path)
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ConfigurationError(f"cannot read configuration {path}")

    domains: list[tuple[str, Mesh, dict[int, ElasticMaterial]]] = []
    for section in parser.sections():
        if not section.startswith("domain."):
            continue
        name = section.split(".", 1)[1]
        sec = parser[section]
        if "mesh" in sec:
            mesh = read_mesh(path.parent / sec["mesh"])
        else:
            if "extent" not in sec or "divisions" not in sec:
                raise ConfigurationError(f"domain {name!r} needs a mesh file or extent/divisions")
            extent = tuple(_vector(sec["extent"]))
            divisions = tuple(_ints(sec["divisions"]))
            if len(divisions) != 3:
                raise ConfigurationError(f"domain {name!r}: divisions needs 3 integers")
            offset = tuple(_vector(sec.get("offset", "0 0 0")))
            mesh = generate_structured(extent, divisions, offset=offset,
                                       region=int(sec.get("region", "0")))
        domains.append((name, mesh, {}))

    if not domains:
        raise ConfigurationError("configuration defines no domains")

    cfg = RunConfig(domains=domains, interfaces=[], loads=LoadCase(), options=SolverOptions())

    for section in parser.sections():
        if not section.startswith("material."):
            continue
        parts = section.split(".")
        if len(parts) != 3:
            raise ConfigurationError(f"material section {section!r} must be material.<domain>.<region>")
        _, dom, region = parts
        sec = parser[section]
        mat = ElasticMaterial(young=float(sec["young"]), poisson=float(sec["poisson"]))
        cfg.domains[cfg.domain_index(dom)][2][int(region)] = mat

    for name, mesh, mats in cfg.domains:
        missing = set(int(r) for r in np.unique(mesh.regions)) - set(mats)
        if missing:
            raise ConfigurationError(f"domain {name!r} lacks materials for regions {sorted(missing)}")

    default_friction = None
    if parser.has_section("friction"):
        sec = parser["friction"]
        default_friction = FrictionMaterial(
            cohesion=float(sec.get("cohesion", "0")),
            friction_angle=np.radians(float(sec.get("angle_degrees", "0"))),
        )

    for section in parser.sections():
        if not section.startswith("interface."):
            continue
        name = section.split(".", 1)[1]
        sec = parser[section]
        dom_a, set_a = _domain_ref(cfg, sec["non_mortar"])
        dom_b, set_b = _domain_ref(cfg, sec["mortar"])
        if "cohesion" in sec or "angle_degrees" in sec:
            fric = FrictionMaterial(
                cohesion=float(sec.get("cohesion", "0")),
                friction_angle=np.radians(float(sec.get("angle_degrees", "0"))),
            )
        elif default_friction is not None:
            fric = default_friction
        else:
            raise ConfigurationError(f"interface {name!r} has no friction parameters")
        inside = _vector(sec["freeze_inside_box"], 6) if "freeze_inside_box" in sec else None
        outside = _vector(sec["freeze_outside_box"], 6) if "freeze_outside_box" in sec else None
        cfg.interfaces.append(
            InterfaceSpec(
                domain_a=dom_a, non_mortar_set=set_a, domain_b=dom_b, mortar_set=set_b,
                friction=fric, freeze_where=_freeze_predicate(inside, outside), name=name,
            )
        )
        cfg.interface_names.append(name)

    for section in parser.sections():
        if section.startswith("dirichlet."):
            sec = parser[section]
            dom = cfg.domain_index(sec["domain"])
            nodes = select_nodes(cfg.domains[dom][1], sec.get("where", "all"))
            cfg.loads.dirichlet.append(
                DirichletBC(
                    domain=dom, nodes=nodes,
                    components=_components(sec.get("components", "xyz")),
                    value=float(sec.get("value", "0")),
                    schedule=np.array(_floats(sec["schedule"])) if "schedule" in sec else None,
                    name=section.split(".", 1)[1],
                )
            )
        elif section.startswith("load."):
            sec = parser[section]
            dom = cfg.domain_index(sec["domain"])
            cfg.loads.neumann.append(
                NeumannLoad(
                    domain=dom, face_set=sec["faceset"], traction=_vector(sec["traction"]),
                    schedule=np.array(_floats(sec["schedule"])) if "schedule" in sec else None,
                    name=section.split(".", 1)[1],
                )
            )
        elif section.startswith("body."):
            sec = parser[section]
            dom = cfg.domain_index(sec["domain"])
            cfg.loads.body.append(
                BodyForce(
                    domain=dom, force=_vector(sec["force"]),
                    region=int(sec["region"]) if "region" in sec else None,
                    schedule=np.array(_floats(sec["schedule"])) if "schedule" in sec else None,
                    name=section.split(".", 1)[1],
                )
            )

    if parser.has_section("solver"):
        sec = parser["solver"]
        cfg.options = SolverOptions(
            newton_tol=float(sec.get("newton_tol", "1e-9")),
            newton_max_iter=int(sec.get("newton_max_iter", "25")),
            active_set_max_iter=int(sec.get("active_set_max_iter", "30")),
            unit_scale=float(sec.get("unit_scale", "1")),
            stabilization=sec.get("stabilization", "on").lower() in ("on", "true", "yes", "1"),
            multiplier=sec.get("multiplier", "p0"),
        )
        cfg.loads.n_steps = int(sec.get("steps", "1"))

    if parser.has_section("output"):
        cfg.output_dir = path.parent / parser["output"].get("directory", "out")

    schedules = [
        len(item.schedule)
        for item in (*cfg.loads.neumann, *cfg.loads.body, *cfg.loads.dirichlet)
        if item.schedule is not None
    ]
    if schedules and max(schedules) > cfg.loads.n_steps:
        cfg.loads.n_steps = max(schedules)
    return cfg


@dataclass
class InfSupConfig:
    pairs: list[tuple[int, int]]
    output_dir: Path | None = None


def parse_infsup_config(path) -> InfSupConfig:
    """Sweep description: `levels` of non-mortar divisions plus either a
    fixed `ratio` (mortar = ratio * levels) or a `fixed_mortar` division."""
    path = Path(path)
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ConfigurationError(f"cannot read configuration {path}")
    if not parser.has_section("infsup"):
        raise ConfigurationError("missing [infsup] section")
    sec = parser["infsup"]
    levels = _ints(sec.get("levels", "4 8 16"))
    if "fixed_mortar" in sec:
        n_m = int(sec["fixed_mortar"])
        pairs = [(n, n_m) for n in levels]
    else:
        ratio = float(sec.get("ratio", "0.5"))
        pairs = []
        for n in levels:
            m = ratio * n
            if abs(m - round(m)) > 1e-12 or round(m) < 1:
                raise ConfigurationError(f"ratio {ratio} gives non-integer mortar divisions for {n}")
            pairs.append((n, int(round(m))))
    out = None
    if parser.has_section("output"):
        out = path.parent / parser["output"].get("directory", "out")
    return InfSupConfig(pairs=pairs, output_dir=out)
