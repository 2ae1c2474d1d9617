"""Finite-element assembly against a per-triangle dense reference."""

import numpy as np
import pytest

from oscgmrf import AssemblyError, Mesh, assemble, build_regular_mesh, write_matrix_market

from oracles import dense_fem


@pytest.mark.parametrize("nx,ny,extent", [
    (3, 3, (0.0, 1.0, 0.0, 1.0)),
    (6, 4, (-1.0, 2.0, 0.5, 2.5)),
])
def test_assembly_matches_dense_reference(nx, ny, extent):
    mesh = build_regular_mesh(nx, ny, extent=extent)
    fem = assemble(mesh)
    c_ref, G_ref = dense_fem(mesh.vertices, mesh.triangles)
    np.testing.assert_allclose(fem.c_diag, c_ref, rtol=1e-13)
    np.testing.assert_allclose(fem.G.toarray(), G_ref, rtol=1e-12, atol=1e-14)


def test_assembly_on_scattered_mesh():
    from oscgmrf import build_mesh_from_points

    rng = np.random.default_rng(3)
    pts = rng.uniform(0.0, 2.0, size=(40, 2))
    mesh = build_mesh_from_points(pts)
    fem = assemble(mesh)
    c_ref, G_ref = dense_fem(mesh.vertices, mesh.triangles)
    np.testing.assert_allclose(fem.c_diag, c_ref, rtol=1e-12)
    np.testing.assert_allclose(fem.G.toarray(), G_ref, rtol=1e-11, atol=1e-13)


def test_mass_sums_to_domain_area():
    mesh = build_regular_mesh(8, 6, extent=(0.0, 4.0, 0.0, 3.0), padding=1.0)
    fem = assemble(mesh)
    x0, x1, y0, y1 = mesh.extent
    assert fem.c_diag.sum() == pytest.approx((x1 - x0) * (y1 - y0), rel=1e-12)
    assert np.all(fem.c_diag > 0)


def test_stiffness_annihilates_constants():
    mesh = build_regular_mesh(7, 7, extent=(0.0, 2.0, 0.0, 2.0))
    fem = assemble(mesh)
    ones = np.ones(mesh.num_vertices)
    np.testing.assert_allclose(fem.G @ ones, 0.0, atol=1e-12)


def test_stiffness_exactly_symmetric():
    mesh = build_regular_mesh(6, 5, extent=(0.0, 1.0, 0.0, 1.0))
    G = assemble(mesh).G
    assert (G != G.T).nnz == 0


def test_stiffness_energy_of_linear_function():
    # for f = a x + b y the Dirichlet energy is |grad f|^2 * area, exactly
    mesh = build_regular_mesh(6, 6, extent=(0.0, 3.0, 0.0, 3.0))
    fem = assemble(mesh)
    a, b = 0.7, -0.3
    f = a * mesh.vertices[:, 0] + b * mesh.vertices[:, 1]
    energy = float(f @ (fem.G @ f))
    assert energy == pytest.approx((a * a + b * b) * 9.0, rel=1e-12)


def test_degenerate_triangle_raises_with_index():
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
    triangles = np.array([[0, 1, 3], [0, 1, 2]])  # second has zero area
    mesh = Mesh(
        vertices=vertices,
        triangles=triangles,
        boundary=np.ones(4, dtype=bool),
    )
    with pytest.raises(AssemblyError, match="triangle 1"):
        assemble(mesh)


def test_matrix_market_roundtrip(tmp_path):
    from scipy.io import mmread

    mesh = build_regular_mesh(5, 5, extent=(0.0, 1.0, 0.0, 1.0))
    G = assemble(mesh).G
    path = tmp_path / "G.mtx"
    write_matrix_market(path, G)
    back = mmread(path).tocsc()
    assert (back != G).nnz == 0
