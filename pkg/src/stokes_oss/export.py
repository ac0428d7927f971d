"""Nodal field files and legacy ASCII VTK output."""
from __future__ import annotations

import json

import numpy as np

from .fespace import scalar_space
from .mesh import Mesh

FIELDS_SCHEMA = 1
STRESS_NAMES = ("sigma_11", "sigma_12", "sigma_22")


def fmt_number(x) -> str:
    """Shortest round-trip decimal, with integral values printed bare."""
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def fields_document(order: int, formulation: str, modes) -> dict:
    """``modes`` is a list of dicts with ``lambda``, ``residual`` and nodal
    arrays ``velocity`` (2, N), ``pressure`` (N,) and optionally ``stress``
    (3, N)."""
    out = []
    for i, m in enumerate(modes):
        entry = {"index": i + 1,
                 "lambda": float(m["lambda"]),
                 "residual": float(m.get("residual", 0.0)),
                 "velocity": np.asarray(m["velocity"], float).tolist(),
                 "pressure": np.asarray(m["pressure"], float).ravel().tolist()}
        if m.get("stress") is not None:
            entry["stress"] = np.asarray(m["stress"], float).tolist()
        out.append(entry)
    return {"schema_version": FIELDS_SCHEMA, "order": int(order),
            "formulation": formulation, "modes": out}


def write_fields(path, document: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(document, fh)


def read_fields(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != FIELDS_SCHEMA:
        raise ValueError(f"unsupported fields schema {doc.get('schema_version')!r}")
    return doc


def refined_p2_grid(mesh: Mesh):
    """P2 nodes and the 4-way split triangles that use them as vertices."""
    space = scalar_space(mesh, 2)
    c = space.cell_nodes
    v0, v1, v2, m01, m12, m20 = c.T
    tris = np.concatenate([np.column_stack(t) for t in
                           ((v0, m01, m20), (m01, v1, m12), (m20, m12, v2), (m01, m12, m20))])
    return space.nodes, tris


def vtk_text(points, triangles, velocity, pressure, stress=None, title="stokes fields") -> str:
    """Legacy ASCII VTK unstructured grid with nodal point data."""
    points = np.asarray(points, float)
    triangles = np.asarray(triangles)
    n = len(points)
    velocity = np.asarray(velocity, float)
    pressure = np.asarray(pressure, float).ravel()
    if velocity.shape != (2, n) or pressure.shape != (n,):
        raise ValueError("field sizes do not match the number of points")
    if stress is not None:
        stress = np.asarray(stress, float)
        if stress.shape != (3, n):
            raise ValueError("stress size does not match the number of points")
    f = fmt_number
    out = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID",
           f"POINTS {n} double"]
    out += [f"{f(x)} {f(y)} 0" for x, y in points]
    out.append(f"CELLS {len(triangles)} {4 * len(triangles)}")
    out += [f"3 {a} {b} {c}" for a, b, c in triangles]
    out.append(f"CELL_TYPES {len(triangles)}")
    out += ["5"] * len(triangles)
    out.append(f"POINT_DATA {n}")
    out.append("VECTORS velocity double")
    out += [f"{f(u)} {f(v)} 0" for u, v in velocity.T]
    arrays = [("pressure", pressure)]
    if stress is not None:
        arrays += list(zip(STRESS_NAMES, stress))
    for name, values in arrays:
        out += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        out += [f(v) for v in values]
    return "\n".join(out) + "\n"


def export_vtk(mesh: Mesh, mode: dict, order: int) -> str:
    """VTK text for one mode of a fields document on ``mesh``."""
    if order == 1:
        points, tris = mesh.vertices, mesh.triangles
    elif order == 2:
        points, tris = refined_p2_grid(mesh)
    else:
        raise ValueError(f"unsupported order {order!r}")
    return vtk_text(points, tris, mode["velocity"], mode["pressure"], mode.get("stress"),
                    title=f"mode {mode.get('index', 1)} lambda {fmt_number(mode.get('lambda', 0.0))}")
