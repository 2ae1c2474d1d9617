"""Point observations of a bivariate field.

Observations live at arbitrary coordinates inside the mesh; the observation
matrix A interpolates the FEM weights with the barycentric weights of the
containing triangle, so every row has three entries summing to one, placed in
the column block of the observed field.  Measurement noise is independent
Gaussian with a known precision per observation.

CSV format: a header line ``field_index,x,y,value`` followed by one row per
observation.  Target points for prediction use the same layout without the
value column.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InvalidInputError, ObservationFormatError
from .mesh import Mesh
from .util import atomic_write, fmt


@dataclass(frozen=True)
class ObservationSet:
    """Observed values, their locations and the interpolation matrix."""

    coords: np.ndarray           # (t, 2)
    field_index: np.ndarray      # (t,) values in {1, 2}
    values: np.ndarray           # (t,)
    noise_precision: np.ndarray  # (t,) positive
    A: sp.csr_matrix             # (t, 2n)

    @property
    def count(self) -> int:
        return self.values.shape[0]

    @property
    def size(self) -> int:
        return self.A.shape[1]


def interpolation_matrix(
    mesh: Mesh, coords: np.ndarray, field_index: np.ndarray
) -> sp.csr_matrix:
    """Sparse matrix evaluating (x1, x2) weights at points of given fields."""
    coords = np.asarray(coords, dtype=np.float64)
    field_index = np.asarray(field_index)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise InvalidInputError("coords must be an (m, 2) array")
    if field_index.shape != (coords.shape[0],):
        raise InvalidInputError("field_index must match coords in length")
    if not np.isin(field_index, (1, 2)).all():
        raise InvalidInputError("field indices must be 1 or 2")
    n = mesh.num_vertices
    m = coords.shape[0]
    rows = np.repeat(np.arange(m), 3)
    cols = np.empty(3 * m, dtype=np.int64)
    vals = np.empty(3 * m, dtype=np.float64)
    for i, loc in enumerate(mesh.locate_many(coords)):
        offset = 0 if field_index[i] == 1 else n
        cols[3 * i : 3 * i + 3] = loc.vertices + offset
        vals[3 * i : 3 * i + 3] = loc.weights
    A = sp.csr_matrix((vals, (rows, cols)), shape=(m, 2 * n))
    A.sum_duplicates()
    A.sort_indices()
    return A


def make_observations(
    mesh: Mesh,
    coords: np.ndarray,
    field_index: np.ndarray,
    values: np.ndarray,
    noise_precision,
) -> ObservationSet:
    """Bundle observed values with their interpolation matrix.

    ``noise_precision`` may be a scalar (shared by all observations) or a
    vector with one entry per observation.
    """
    values = np.asarray(values, dtype=np.float64)
    coords = np.asarray(coords, dtype=np.float64)
    field_index = np.asarray(field_index, dtype=np.int64)
    if values.shape != (coords.shape[0],):
        raise InvalidInputError("values must match coords in length")
    qn = np.broadcast_to(
        np.asarray(noise_precision, dtype=np.float64), values.shape
    ).copy()
    if not (np.isfinite(qn).all() and (qn > 0).all()):
        raise InvalidInputError("noise precisions must be finite and positive")
    A = interpolation_matrix(mesh, coords, field_index)
    return ObservationSet(
        coords=coords,
        field_index=field_index,
        values=values,
        noise_precision=qn,
        A=A,
    )


def empty_observations(mesh: Mesh) -> ObservationSet:
    """An observation set with zero rows (conditioning on nothing)."""
    n = mesh.num_vertices
    return ObservationSet(
        coords=np.zeros((0, 2)),
        field_index=np.zeros(0, dtype=np.int64),
        values=np.zeros(0),
        noise_precision=np.zeros(0),
        A=sp.csr_matrix((0, 2 * n)),
    )


def write_observation_csv(path, coords, field_index, values=None) -> None:
    """Write observations (or, without values, prediction targets) as CSV."""
    coords = np.asarray(coords, dtype=np.float64)
    with atomic_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if values is None:
            writer.writerow(["field_index", "x", "y"])
            for f, (x, y) in zip(field_index, coords):
                writer.writerow([int(f), fmt(x), fmt(y)])
        else:
            writer.writerow(["field_index", "x", "y", "value"])
            for f, (x, y), v in zip(field_index, coords, values):
                writer.writerow([int(f), fmt(x), fmt(y), fmt(v)])


def read_observation_csv(path, with_values: bool = True):
    """Read an observation (or target) CSV.

    Returns ``(coords, field_index, values)``; ``values`` is None when
    ``with_values`` is False.  Raises ObservationFormatError with the line
    number on malformed rows.
    """
    want = 4 if with_values else 3
    coords: list[tuple[float, float]] = []
    fields: list[int] = []
    values: list[float] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if lineno == 1:
                header = [c.strip().lower() for c in row]
                expected = ["field_index", "x", "y"] + (["value"] if with_values else [])
                if header != expected:
                    raise ObservationFormatError(
                        f"{path}: line 1: expected header {','.join(expected)!r}, "
                        f"got {','.join(row)!r}"
                    )
                continue
            if not row:
                continue
            if len(row) != want:
                raise ObservationFormatError(
                    f"{path}: line {lineno}: expected {want} fields, got {len(row)}"
                )
            try:
                f = int(row[0])
                x, y = float(row[1]), float(row[2])
                if with_values:
                    values.append(float(row[3]))
            except ValueError as exc:
                raise ObservationFormatError(
                    f"{path}: line {lineno}: {exc}"
                ) from exc
            if f not in (1, 2):
                raise ObservationFormatError(
                    f"{path}: line {lineno}: field index must be 1 or 2, got {f}"
                )
            coords.append((x, y))
            fields.append(f)
    return (
        np.asarray(coords, dtype=np.float64).reshape(-1, 2),
        np.asarray(fields, dtype=np.int64),
        np.asarray(values, dtype=np.float64) if with_values else None,
    )
