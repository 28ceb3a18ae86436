"""Mesh exchange files, legacy-ASCII VTK output, and CSV tables.

Mesh exchange format (plain text, whitespace separated, '#' comments):

    nodes <N>
    <id> <x> <y> <z>          # N lines, ids 0..N-1 in order
    cells <M>
    <id> <region> <n0> ... <n7>
    faceset <name> <K>
    <cellId> <localFaceId>    # K lines
    size <tag> <value>        # optional characteristic sizes

Coordinates are written with repr-exact precision so write/read round-trips
reproduce the array bit for bit.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import MeshFormatError
from .mesh import Mesh, validate


def write_mesh(path, mesh: Mesh) -> None:
    lines = [f"nodes {mesh.n_nodes}"]
    for i, (x, y, z) in enumerate(mesh.nodes):
        lines.append(f"{i} {float(x)!r} {float(y)!r} {float(z)!r}")
    lines.append(f"cells {mesh.n_cells}")
    for i, cell in enumerate(mesh.cells):
        lines.append(f"{i} {mesh.regions[i]} " + " ".join(str(int(n)) for n in cell))
    for name, pairs in mesh.face_sets.items():
        if any(ch.isspace() for ch in name):
            raise MeshFormatError(f"face set name {name!r} contains whitespace")
        lines.append(f"faceset {name} {pairs.shape[0]}")
        for cell, lf in pairs:
            lines.append(f"{int(cell)} {int(lf)}")
    for tag, value in mesh.characteristic_size.items():
        lines.append(f"size {tag} {float(value)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh:
    """Parse a mesh exchange file; raises MeshFormatError with the line number."""
    raw = Path(path).read_text().splitlines()
    tokens: list[tuple[int, list[str]]] = []
    for ln, line in enumerate(raw, start=1):
        body = line.split("#", 1)[0].strip()
        if body:
            tokens.append((ln, body.split()))

    pos = 0

    def take():
        nonlocal pos
        if pos >= len(tokens):
            raise MeshFormatError("unexpected end of file", line=tokens[-1][0] if tokens else 0)
        t = tokens[pos]
        pos += 1
        return t

    ln, head = take()
    if len(head) != 2 or head[0] != "nodes":
        raise MeshFormatError("expected 'nodes <count>' header", line=ln)
    try:
        n_nodes = int(head[1])
    except ValueError:
        raise MeshFormatError("node count is not an integer", line=ln)
    nodes = np.empty((n_nodes, 3))
    for i in range(n_nodes):
        ln, row = take()
        if len(row) != 4:
            raise MeshFormatError("node line needs 'id x y z'", line=ln)
        try:
            if int(row[0]) != i:
                raise MeshFormatError(f"node ids must be sequential, expected {i}", line=ln)
            nodes[i] = [float(v) for v in row[1:]]
        except ValueError:
            raise MeshFormatError("bad node entry", line=ln)

    ln, head = take()
    if len(head) != 2 or head[0] != "cells":
        raise MeshFormatError("expected 'cells <count>' header", line=ln)
    n_cells = int(head[1])
    cells = np.empty((n_cells, 8), dtype=np.int64)
    regions = np.empty(n_cells, dtype=np.int64)
    for i in range(n_cells):
        ln, row = take()
        if len(row) != 10:
            raise MeshFormatError("cell line needs 'id region n0..n7'", line=ln)
        try:
            if int(row[0]) != i:
                raise MeshFormatError(f"cell ids must be sequential, expected {i}", line=ln)
            regions[i] = int(row[1])
            cells[i] = [int(v) for v in row[2:]]
        except ValueError:
            raise MeshFormatError("bad cell entry", line=ln)
        if cells[i].min() < 0 or cells[i].max() >= n_nodes:
            raise MeshFormatError(f"cell {i} references a node out of range", line=ln)

    face_sets: dict[str, np.ndarray] = {}
    sizes: dict[str, float] = {}
    while pos < len(tokens):
        ln, row = take()
        if row[0] == "faceset":
            if len(row) != 3:
                raise MeshFormatError("expected 'faceset <name> <count>'", line=ln)
            name, count = row[1], int(row[2])
            pairs = np.empty((count, 2), dtype=np.int64)
            for k in range(count):
                ln2, entry = take()
                if len(entry) != 2:
                    raise MeshFormatError("face set line needs 'cellId localFaceId'", line=ln2)
                pairs[k] = [int(entry[0]), int(entry[1])]
                if not (0 <= pairs[k, 0] < n_cells):
                    raise MeshFormatError(f"face set {name!r} references cell out of range", line=ln2)
                if not (0 <= pairs[k, 1] <= 5):
                    raise MeshFormatError("local face index must be 0..5", line=ln2)
            face_sets[name] = pairs
        elif row[0] == "size":
            if len(row) != 3:
                raise MeshFormatError("expected 'size <tag> <value>'", line=ln)
            sizes[row[1]] = float(row[2])
        else:
            raise MeshFormatError(f"unknown section {row[0]!r}", line=ln)

    mesh = Mesh(nodes=nodes, cells=cells, regions=regions, face_sets=face_sets, characteristic_size=sizes)
    validate(mesh)
    return mesh


def write_vtk(path, meshes, point_fields=None, cell_fields=None, title="mortarcontact output") -> None:
    """Legacy-ASCII VTK unstructured grid for one mesh or a list of meshes.

    point_fields: name -> (n, 3) or (n,) array matching the concatenated nodes.
    cell_fields: name -> (m,) array matching the concatenated cells.
    """
    if isinstance(meshes, Mesh):
        meshes = [meshes]
    offsets = np.cumsum([0] + [m.n_nodes for m in meshes])
    all_nodes = np.vstack([m.nodes for m in meshes])
    all_cells = np.vstack([m.cells + offsets[i] for i, m in enumerate(meshes)])

    out = [
        "# vtk DataFile Version 2.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {all_nodes.shape[0]} double",
    ]
    for p in all_nodes:
        out.append(f"{p[0]:.12g} {p[1]:.12g} {p[2]:.12g}")
    n_cells = all_cells.shape[0]
    out.append(f"CELLS {n_cells} {n_cells * 9}")
    for c in all_cells:
        out.append("8 " + " ".join(str(int(v)) for v in c))
    out.append(f"CELL_TYPES {n_cells}")
    out.extend(["12"] * n_cells)

    if cell_fields:
        out.append(f"CELL_DATA {n_cells}")
        for name, data in cell_fields.items():
            data = np.asarray(data)
            out.append(f"SCALARS {name} double 1")
            out.append("LOOKUP_TABLE default")
            out.extend(f"{v:.12g}" for v in data.astype(float))
    if point_fields:
        out.append(f"POINT_DATA {all_nodes.shape[0]}")
        for name, data in point_fields.items():
            data = np.asarray(data, dtype=float)
            if data.ndim == 2 and data.shape[1] == 3:
                out.append(f"VECTORS {name} double")
                out.extend(f"{v[0]:.12g} {v[1]:.12g} {v[2]:.12g}" for v in data)
            else:
                out.append(f"SCALARS {name} double 1")
                out.append("LOOKUP_TABLE default")
                out.extend(f"{v:.12g}" for v in data.ravel())
    Path(path).write_text("\n".join(out) + "\n")


def write_csv(path, header, rows) -> None:
    """CSV table with a header row; values are written as repr-precision floats."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return int(v)
    return v
