"""Observation matrices and the observation CSV round trip."""

import numpy as np
import pytest

from oscgmrf import (
    InvalidInputError,
    ObservationFormatError,
    OutOfDomainError,
    empty_observations,
    interpolation_matrix,
    make_observations,
    read_observation_csv,
    write_observation_csv,
)


def test_rows_are_convex_weights(small_mesh):
    rng = np.random.default_rng(2)
    m = 25
    coords = np.column_stack([rng.uniform(0, 2, m), rng.uniform(0, 1.5, m)])
    fidx = rng.integers(1, 3, m)
    A = interpolation_matrix(small_mesh, coords, fidx)
    assert A.shape == (m, 2 * small_mesh.num_vertices)
    np.testing.assert_allclose(np.asarray(A.sum(axis=1)).ravel(), 1.0, rtol=1e-14)
    assert A.min() >= -1e-12
    assert (A.getnnz(axis=1) <= 3).all()


def test_linear_functions_interpolated_exactly(small_mesh):
    """P1 interpolation reproduces affine functions to round-off."""
    n = small_mesh.num_vertices
    g = lambda p: 0.7 * p[:, 0] - 1.3 * p[:, 1] + 0.25
    x = np.concatenate([g(small_mesh.vertices), np.zeros(n)])
    pts = np.array([[0.31, 0.77], [1.53, 0.11], [1.0, 0.75], [2.0, 1.5]])
    A = interpolation_matrix(small_mesh, pts, np.ones(4, dtype=int))
    np.testing.assert_allclose(A @ x, g(pts), rtol=0, atol=1e-13)


def test_field_two_uses_offset_columns(small_mesh):
    n = small_mesh.num_vertices
    pt = np.array([[0.9, 0.6]])
    A1 = interpolation_matrix(small_mesh, pt, [1]).toarray()[0]
    A2 = interpolation_matrix(small_mesh, pt, [2]).toarray()[0]
    assert np.all(A1[n:] == 0.0)
    assert np.all(A2[:n] == 0.0)
    np.testing.assert_array_equal(A1[:n], A2[n:])


def test_interpolation_input_validation(small_mesh):
    with pytest.raises(InvalidInputError, match=r"\(m, 2\)"):
        interpolation_matrix(small_mesh, np.zeros((3, 3)), [1, 1, 1])
    with pytest.raises(InvalidInputError, match="length"):
        interpolation_matrix(small_mesh, np.zeros((3, 2)), [1, 1])
    with pytest.raises(InvalidInputError, match="1 or 2"):
        interpolation_matrix(small_mesh, np.zeros((1, 2)), [3])
    with pytest.raises(OutOfDomainError):
        interpolation_matrix(small_mesh, np.array([[50.0, 50.0]]), [1])


def test_make_observations_broadcasts_scalar_precision(small_mesh):
    coords = np.array([[0.5, 0.5], [1.0, 1.0]])
    obs = make_observations(small_mesh, coords, [1, 2], [0.1, -0.2], 25.0)
    np.testing.assert_array_equal(obs.noise_precision, [25.0, 25.0])
    assert obs.count == 2
    assert obs.size == 2 * small_mesh.num_vertices


def test_make_observations_validation(small_mesh):
    coords = np.array([[0.5, 0.5]])
    with pytest.raises(InvalidInputError, match="values"):
        make_observations(small_mesh, coords, [1], [1.0, 2.0], 1.0)
    with pytest.raises(InvalidInputError, match="positive"):
        make_observations(small_mesh, coords, [1], [1.0], 0.0)
    with pytest.raises(InvalidInputError, match="positive"):
        make_observations(small_mesh, coords, [1], [1.0], np.inf)


def test_empty_observations(small_mesh):
    obs = empty_observations(small_mesh)
    assert obs.count == 0
    assert obs.size == 2 * small_mesh.num_vertices
    assert obs.A.nnz == 0


def test_csv_roundtrip(tmp_path):
    path = tmp_path / "obs.csv"
    coords = np.array([[0.125, 0.5], [1.75, 0.25], [0.3, 1.2]])
    fidx = np.array([1, 2, 1])
    values = np.array([0.7, -1.25, 3.0e-7])
    write_observation_csv(path, coords, fidx, values)
    c, f, v = read_observation_csv(path)
    np.testing.assert_array_equal(c, coords)
    np.testing.assert_array_equal(f, fidx)
    np.testing.assert_array_equal(v, values)


def test_csv_roundtrip_targets_without_values(tmp_path):
    path = tmp_path / "targets.csv"
    coords = np.array([[0.5, 0.5], [1.0, 0.75]])
    write_observation_csv(path, coords, [2, 1])
    c, f, v = read_observation_csv(path, with_values=False)
    np.testing.assert_array_equal(c, coords)
    np.testing.assert_array_equal(f, [2, 1])
    assert v is None


def test_csv_error_reports_line_number(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("field_index,x,y,value\n1,0.5,0.5,1.0\n2,oops,0.5,1.0\n")
    with pytest.raises(ObservationFormatError, match="line 3"):
        read_observation_csv(path)


def test_csv_error_on_wrong_column_count(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("field_index,x,y,value\n1,0.5,0.5\n")
    with pytest.raises(ObservationFormatError, match="line 2"):
        read_observation_csv(path)


def test_csv_error_on_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y,z\n")
    with pytest.raises(ObservationFormatError, match="line 1"):
        read_observation_csv(path)


def test_csv_error_on_bad_field_index(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("field_index,x,y,value\n7,0.5,0.5,1.0\n")
    with pytest.raises(ObservationFormatError, match="1 or 2"):
        read_observation_csv(path)


def test_csv_skips_blank_lines(tmp_path):
    path = tmp_path / "obs.csv"
    path.write_text("field_index,x,y,value\n1,0.5,0.5,1.0\n\n2,0.25,0.25,2.0\n")
    c, f, v = read_observation_csv(path)
    assert c.shape == (2, 2)
    np.testing.assert_array_equal(f, [1, 2])
