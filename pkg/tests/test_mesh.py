import numpy as np
import pytest

from nsrecon.mesh import (Mesh, build_uniform_square_mesh, refine_uniform,
                          perturb_interior_vertices, shape_regularity,
                          write_mesh, read_mesh)


def test_two_cell_counts():
    mesh = build_uniform_square_mesh(1)
    assert mesh.num_cells == 2
    assert mesh.num_edges == 5
    assert mesh.boundary_vertices.size == 4


def test_two_cell_topology_frozen():
    # the full oriented topology of the smallest grid, enumerated by hand
    # from the lowest-cell-owner direction rule
    mesh = build_uniform_square_mesh(1)
    assert np.array_equal(mesh.vertices,
                          [[0., 0.], [0., 1.], [1., 0.], [1., 1.]])
    assert np.array_equal(mesh.cells, [[0, 2, 3], [0, 3, 1]])
    assert np.array_equal(mesh.edges,
                          [[1, 0], [0, 2], [3, 0], [3, 1], [2, 3]])
    assert np.array_equal(mesh.boundary_edges, [0, 1, 3, 4])
    assert np.array_equal(mesh.cell_edges, [[4, 2, 1], [3, 0, 2]])
    assert np.array_equal(mesh.cell_edge_signs, [[1, 1, 1], [1, 1, -1]])


def test_paper_grid_size():
    mesh = build_uniform_square_mesh(48, box=(-0.5, 0.5, -0.5, 0.5))
    assert mesh.num_cells == 4608
    assert mesh.num_vertices == 49 * 49
    # Euler's formula for a simply connected planar triangulation
    assert mesh.num_edges == mesh.num_vertices + mesh.num_cells - 1


def test_areas_and_normals():
    mesh = build_uniform_square_mesh(3, box=(0.0, 2.0, -1.0, 0.0))
    assert mesh.geom.area.sum() == pytest.approx(2.0, abs=1e-14)
    assert np.all(mesh.geom.area > 0)

    t = mesh.vertices[mesh.edges[:, 1]] - mesh.vertices[mesh.edges[:, 0]]
    n = mesh.edge_normals()
    assert np.linalg.norm(n, axis=1) == pytest.approx(1.0, abs=1e-14)
    assert np.abs(np.sum(n * t, axis=1)).max() < 1e-14
    # normal is the tangent rotated clockwise, so t x n points into -e_3
    cross = t[:, 0] * n[:, 1] - t[:, 1] * n[:, 0]
    assert np.all(cross < 0)


def test_cell_edge_orientation_consistency():
    mesh = perturb_interior_vertices(build_uniform_square_mesh(4), 0.2, seed=3)
    p = mesh.vertices[mesh.cells]
    tangents = p[:, [2, 0, 1]] - p[:, [1, 2, 0]]    # ccw local edge i
    for c in range(mesh.num_cells):
        for i in range(3):
            e = mesh.cell_edges[c, i]
            stored = (mesh.vertices[mesh.edges[e, 1]]
                      - mesh.vertices[mesh.edges[e, 0]])
            assert np.allclose(mesh.cell_edge_signs[c, i] * stored,
                               tangents[c, i], atol=1e-14)


def test_boundary_edge_normal_points_outward():
    mesh = build_uniform_square_mesh(3)
    n = mesh.edge_normals()
    mid = mesh.edge_midpoints()
    for e in mesh.boundary_edges:
        outward = mid[e] - np.array([0.5, 0.5])
        assert np.dot(n[e], outward) > 0


def test_shape_regularity_uniform():
    # right isosceles triangle, legs h: diameter sqrt(2) h, incircle
    # diameter (2 - sqrt(2)) h, ratio 1 + sqrt(2)
    mesh = build_uniform_square_mesh(2)
    ratios = mesh.geom.h / mesh.geom.rho
    assert np.allclose(ratios, 1.0 + np.sqrt(2.0), atol=1e-13)
    assert shape_regularity(mesh) == pytest.approx(1.0 + np.sqrt(2.0))


def test_shape_regularity_equilateral():
    # rho is the incircle diameter side/sqrt(3), so the ratio is sqrt(3);
    # the same convention gives 1+sqrt(2) on the right-isosceles grid above
    s = 0.7
    verts = np.array([[0.0, 0.0], [s, 0.0], [0.5 * s, 0.5 * np.sqrt(3) * s]])
    mesh = Mesh(verts, [[0, 1, 2]])
    assert shape_regularity(mesh) == pytest.approx(np.sqrt(3.0))


def test_refine_counts_and_sizes():
    mesh = build_uniform_square_mesh(1)
    fine = refine_uniform(mesh)
    assert fine.num_cells == 8
    assert fine.geom.h.max() == pytest.approx(0.5 * mesh.geom.h.max())
    assert shape_regularity(fine) == pytest.approx(shape_regularity(mesh))
    assert fine.geom.area.sum() == pytest.approx(1.0)


def test_refine_twice_matches_direct_grid():
    mesh = refine_uniform(refine_uniform(build_uniform_square_mesh(2)))
    ref = build_uniform_square_mesh(8)
    assert mesh.num_cells == ref.num_cells
    assert mesh.num_vertices == ref.num_vertices

    def canonical(m):
        pts = [tuple(map(tuple, np.sort(m.vertices[t], axis=0).round(12)))
               for t in m.cells]
        return sorted(pts)

    assert canonical(mesh) == canonical(ref)


def test_perturb_identity_and_determinism():
    mesh = build_uniform_square_mesh(3)
    same = perturb_interior_vertices(mesh, 0.0, seed=7)
    assert np.array_equal(same.vertices, mesh.vertices)

    a = perturb_interior_vertices(mesh, 0.1, seed=1)
    b = perturb_interior_vertices(mesh, 0.1, seed=1)
    assert np.array_equal(a.vertices, b.vertices)
    assert np.all(a.geom.area > 0)
    assert np.isfinite(shape_regularity(a))
    # boundary stays put, interior actually moves
    assert np.array_equal(a.vertices[a.boundary_vertices],
                          mesh.vertices[mesh.boundary_vertices])
    interior = ~mesh.boundary_vertex_mask
    assert np.abs(a.vertices[interior] - mesh.vertices[interior]).max() > 0


def test_mesh_io_roundtrip(tmp_path):
    mesh = perturb_interior_vertices(build_uniform_square_mesh(3), 0.15, seed=2)
    path = tmp_path / "grid.txt"
    write_mesh(mesh, path)
    back = read_mesh(path)
    assert np.array_equal(back.vertices, mesh.vertices)
    assert np.array_equal(back.cells, mesh.cells)


def test_invalid_input_rejected():
    with pytest.raises(ValueError):
        build_uniform_square_mesh(0)
    with pytest.raises(ValueError):
        build_uniform_square_mesh(2, box=(0.0, 0.0, 0.0, 1.0))
    with pytest.raises(ValueError):
        Mesh([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 2, 1]])  # clockwise
    with pytest.raises(ValueError):
        perturb_interior_vertices(build_uniform_square_mesh(2), 0.5, seed=0)
