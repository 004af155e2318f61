"""Round trips through the .node/.ele and legacy VTK writers."""

import numpy as np
import pytest

from hatfem import (
    load_triangle_files,
    load_vtk,
    save_triangle_files,
    save_vtk,
    square_domain,
    uniform_cvdt_mesh,
)

from conftest import two_triangle_square


def test_triangle_files_roundtrip(tmp_path, square_mesh):
    base = tmp_path / "mesh"
    save_triangle_files(square_mesh, base)
    assert (tmp_path / "mesh.node").exists()
    assert (tmp_path / "mesh.ele").exists()
    back = load_triangle_files(base, domain=square_mesh.domain)
    np.testing.assert_array_equal(back.vertices, square_mesh.vertices)
    np.testing.assert_array_equal(back.triangles, square_mesh.triangles)
    np.testing.assert_array_equal(back.boundary_flag,
                                  square_mesh.boundary_flag)


def test_triangle_files_one_based(tmp_path):
    mesh = two_triangle_square()
    node = tmp_path / "m.node"
    ele = tmp_path / "m.ele"
    node_rows = ["4 2 0 1"]
    for i, ((x, y), flag) in enumerate(zip(mesh.vertices,
                                           mesh.boundary_flag)):
        node_rows.append(f"{i + 1} {float(x)!r} {float(y)!r} {int(flag)}")
    node.write_text("\n".join(node_rows) + "\n")
    ele_rows = ["2 3 0"]
    for i, (a, b, c) in enumerate(mesh.triangles):
        ele_rows.append(f"{i + 1} {a + 1} {b + 1} {c + 1}")
    ele.write_text("\n".join(ele_rows) + "\n")
    back = load_triangle_files(tmp_path / "m", domain=mesh.domain)
    np.testing.assert_array_equal(back.triangles, mesh.triangles)


def test_vtk_roundtrip_with_fields(tmp_path):
    mesh = uniform_cvdt_mesh(square_domain(), 60, lloyd_iters=5, seed=2)
    u = np.sin(mesh.vertices[:, 0])
    q = mesh.areas()
    path = tmp_path / "mesh.vtk"
    save_vtk(mesh, path, point_data={"u": u}, cell_data={"area": q})
    back, point_data, cell_data = load_vtk(path, domain=mesh.domain)
    np.testing.assert_array_equal(back.vertices, mesh.vertices)
    np.testing.assert_array_equal(back.triangles, mesh.triangles)
    np.testing.assert_array_equal(point_data["u"], u)
    np.testing.assert_array_equal(cell_data["area"], q)


def test_vtk_header_shape(tmp_path):
    mesh = two_triangle_square()
    path = tmp_path / "two.vtk"
    save_vtk(mesh, path, title="two triangles")
    lines = path.read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert lines[1] == "two triangles"
    assert lines[2] == "ASCII"
    assert lines[3] == "DATASET UNSTRUCTURED_GRID"
    assert lines[4] == "POINTS 4 double"
    assert "CELLS 2 8" in lines
    assert lines.count("5") == 2


def test_vtk_rejects_wrong_field_length(tmp_path):
    mesh = two_triangle_square()
    with pytest.raises(ValueError):
        save_vtk(mesh, tmp_path / "bad.vtk",
                 point_data={"u": np.zeros(3)})
    with pytest.raises(ValueError):
        save_vtk(mesh, tmp_path / "bad.vtk",
                 cell_data={"q": np.zeros(5)})
