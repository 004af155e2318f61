"""Mesh file formats: .node/.ele vertex/triangle pairs and legacy VTK."""

import numpy as np

from .mesh import Mesh

FLOAT_FMT = "%.16e"


def save_triangle_files(mesh, basepath):
    """Write ``basepath``.node and ``basepath``.ele (0-based indices)."""
    node_lines = [f"{mesh.num_vertices} 2 0 1"]
    for i, ((x, y), flag) in enumerate(zip(mesh.vertices, mesh.boundary_flag)):
        node_lines.append(f"{i} {FLOAT_FMT % x} {FLOAT_FMT % y} {int(flag)}")
    with open(f"{basepath}.node", "w") as fh:
        fh.write("\n".join(node_lines) + "\n")
    ele_lines = [f"{mesh.num_triangles} 3 0"]
    for i, (a, b, c) in enumerate(mesh.triangles):
        ele_lines.append(f"{i} {a} {b} {c}")
    with open(f"{basepath}.ele", "w") as fh:
        fh.write("\n".join(ele_lines) + "\n")


def load_triangle_files(basepath, domain=None):
    """Read a ``.node``/``.ele`` pair written by :func:`save_triangle_files`.

    Accepts 0- or 1-based files (detected from the first listed index).
    """
    with open(f"{basepath}.node") as fh:
        tokens = fh.read().split()
    nv = int(tokens[0])
    nattr, nmark = int(tokens[2]), int(tokens[3])
    width = 3 + nattr + nmark
    rows = np.array(tokens[4:4 + nv * width], dtype=float).reshape(nv, width)
    base = int(rows[0, 0])
    vertices = rows[:, 1:3]
    flags = rows[:, 3 + nattr].astype(np.int32) if nmark else None
    with open(f"{basepath}.ele") as fh:
        tokens = fh.read().split()
    nt = int(tokens[0])
    width = 4 + int(tokens[2])
    rows = np.array(tokens[3:3 + nt * width], dtype=float).reshape(nt, width)
    triangles = rows[:, 1:4].astype(np.intp) - base
    return Mesh(vertices, triangles, boundary_flag=flags, domain=domain)


def save_vtk(mesh, path, point_data=None, cell_data=None, title="mesh"):
    """Write a legacy ASCII VTK unstructured grid of triangles (cell type 5).

    ``point_data``/``cell_data`` map field names to scalar arrays over
    vertices/triangles.
    """
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.num_vertices} double",
    ]
    for x, y in mesh.vertices:
        lines.append(f"{FLOAT_FMT % x} {FLOAT_FMT % y} 0.0")
    nt = mesh.num_triangles
    lines.append(f"CELLS {nt} {4 * nt}")
    for a, b, c in mesh.triangles:
        lines.append(f"3 {a} {b} {c}")
    lines.append(f"CELL_TYPES {nt}")
    lines.extend(["5"] * nt)

    def scalar_block(name, values):
        out = [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        out.extend(FLOAT_FMT % v for v in np.asarray(values, dtype=float))
        return out

    if point_data:
        lines.append(f"POINT_DATA {mesh.num_vertices}")
        for name, values in point_data.items():
            values = np.asarray(values)
            if values.shape != (mesh.num_vertices,):
                raise ValueError(f"point field {name!r} has the wrong length")
            lines.extend(scalar_block(name, values))
    if cell_data:
        lines.append(f"CELL_DATA {nt}")
        for name, values in cell_data.items():
            values = np.asarray(values)
            if values.shape != (nt,):
                raise ValueError(f"cell field {name!r} has the wrong length")
            lines.extend(scalar_block(name, values))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_vtk(path, domain=None):
    """Read back a triangle mesh written by :func:`save_vtk`."""
    with open(path) as fh:
        tokens = fh.read().split()
    i = tokens.index("POINTS")
    nv = int(tokens[i + 1])
    coords = np.array(tokens[i + 3:i + 3 + 3 * nv], dtype=float).reshape(nv, 3)
    i = tokens.index("CELLS")
    nt = int(tokens[i + 1])
    cells = np.array(tokens[i + 3:i + 3 + 4 * nt], dtype=np.intp).reshape(nt, 4)
    if (cells[:, 0] != 3).any():
        raise ValueError("VTK file contains non-triangle cells")
    flags = domain.classify_points(coords[:, :2]) if domain is not None else None
    mesh = Mesh(coords[:, :2], cells[:, 1:], boundary_flag=flags, domain=domain)
    point_data, cell_data = {}, {}
    j = 0
    section = None
    while j < len(tokens):
        if tokens[j] == "POINT_DATA":
            section = (point_data, nv)
        elif tokens[j] == "CELL_DATA":
            section = (cell_data, nt)
        elif tokens[j] == "SCALARS" and section is not None:
            name = tokens[j + 1]
            store, count = section
            # skip SCALARS <name> <type> 1 LOOKUP_TABLE default
            start = j + 6
            store[name] = np.array(tokens[start:start + count], dtype=float)
            j = start + count - 1
        j += 1
    return mesh, point_data, cell_data
