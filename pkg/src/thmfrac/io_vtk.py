"""Legacy ASCII VTK (UNSTRUCTURED_GRID) writer for meshes and snapshots."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .mesh import Mesh


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_vtk(path: str | Path, mesh: Mesh,
              point_data: dict[str, np.ndarray] | None = None,
              point_vectors: dict[str, np.ndarray] | None = None,
              cell_data: dict[str, np.ndarray] | None = None,
              title: str = "thmfrac snapshot") -> Path:
    """Write the mesh with optional nodal scalars/vectors and cell scalars.

    Vectors are (n_nodes, 2) and padded with a zero z component.
    """
    path = Path(path)
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID"]
    lines.append(f"POINTS {mesh.n_nodes} double")
    for x, y in mesh.nodes:
        lines.append(f"{_fmt(x)} {_fmt(y)} 0")
    lines.append(f"CELLS {mesh.n_elems} {5 * mesh.n_elems}")
    for quad in mesh.elems:
        lines.append("4 " + " ".join(str(int(n)) for n in quad))
    lines.append(f"CELL_TYPES {mesh.n_elems}")
    lines.extend(["9"] * mesh.n_elems)

    if point_data or point_vectors:
        lines.append(f"POINT_DATA {mesh.n_nodes}")
        for name, vals in (point_data or {}).items():
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(_fmt(v) for v in np.asarray(vals, dtype=float))
        for name, vec in (point_vectors or {}).items():
            vec = np.asarray(vec, dtype=float).reshape(mesh.n_nodes, 2)
            lines.append(f"VECTORS {name} double")
            lines.extend(f"{_fmt(vx)} {_fmt(vy)} 0" for vx, vy in vec)

    if cell_data:
        lines.append(f"CELL_DATA {mesh.n_elems}")
        for name, vals in cell_data.items():
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(_fmt(v) for v in np.asarray(vals, dtype=float))

    path.write_text("\n".join(lines) + "\n")
    return path
